"""Martin kernels and the boundary of the free group.

For a nearest-neighbour walk on ``F_k`` the Martin boundary is the space of
ends of the Cayley tree: infinite reduced words.  A boundary point is
sampled by running the walk until a prefix of its reduced word stops
changing, which realises the exit (harmonic) measure.  Kernels are handled
in log space; the kernel at a boundary point only depends on the common
prefix of ``x`` and the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimate import Estimate
from .groups import Element, GroupSpec
from .measures import StepMeasure
from .walks import FreeBatchWalker, as_generator, chunk_sizes
from .green.oracles import GreenOracle, MethodUnavailable, TreeOracle

DEFAULT_WINDOW = 50
DEFAULT_MAX_STEPS = 100_000
LOG_RTOL = 1e-12


class StabilizationFailure(RuntimeError):
    """The walk did not settle on a prefix within the step budget."""


class BoundaryRegression(RuntimeError):
    """The walk re-entered a prefix that had already been confirmed."""


class InsufficientPrefix(ValueError):
    """The materialised prefix is too short for the requested kernel."""


@dataclass(frozen=True)
class KernelValue:
    """A Martin-kernel value together with its logarithm."""

    value: float
    log_value: float

    @classmethod
    def from_log(cls, log_value: float, base: int | None = None, power: int | None = None) -> "KernelValue":
        # integer powers of an integer base are exact in floating point
        if base is not None and power is not None:
            return cls(float(base) ** power, log_value)
        return cls(math.exp(log_value), log_value)


def martin_kernel(o: GreenOracle, x: Element, y: Element) -> KernelValue:
    """``K(x, y) = F(x, y) / F(e, y)``, via ``-ln K = d_G(x, y) - d_G(e, y)``."""
    e = o.group.identity()
    dx = o.green_distance(x, y)
    de = o.green_distance(e, y)
    if math.isinf(dx) or math.isinf(de):
        raise MethodUnavailable("kernel undefined: a hitting probability vanishes")
    log_k = de - dx
    q = getattr(o, "_q", None)
    if q is not None:
        g = o.group
        power = g.word_length(y) - g.distance(x, y)
        return KernelValue.from_log(log_k, q, power)
    return KernelValue.from_log(log_k)


class BoundaryPoint:
    """An end of the tree, materialised lazily from its sampling walk.

    ``prefix`` holds the confirmed letters; :meth:`extend` runs the walk
    further to confirm more.  Confirmed letters never change: if the walk
    falls back into them a :class:`BoundaryRegression` is raised instead.
    """

    def __init__(self, g: GroupSpec, m: StepMeasure, rng: np.random.Generator, *, seed=None, window: int = DEFAULT_WINDOW):
        if not g.is_free:
            raise MethodUnavailable("boundary model exists for free groups only")
        self.group = g
        self.measure = m
        self.seed = seed
        self.window = window
        self._rng = rng
        self._support = [x.payload for x in m.support]
        self._word: list[int] = []
        self._prefix: tuple[int, ...] = ()
        self.steps = 0

    @property
    def prefix(self) -> tuple[int, ...]:
        return self._prefix

    def __len__(self) -> int:
        return len(self._prefix)

    def _step(self) -> None:
        x = self._support[int(self.measure.sample_indices(self._rng, 1)[0])]
        w = self._word
        for c in x:
            if w and w[-1] == -c:
                w.pop()
            else:
                w.append(c)
        self.steps += 1
        if len(w) < len(self._prefix):
            raise BoundaryRegression(f"walk fell back to length {len(w)} below the confirmed {len(self._prefix)}")

    def extend(self, length: int, max_steps: int = DEFAULT_MAX_STEPS) -> "BoundaryPoint":
        """Confirm at least ``length`` letters: the walk must stay at length
        ``>= length`` for ``window`` consecutive steps."""
        if length <= len(self._prefix):
            return self
        stable = 0
        budget = self.steps + max_steps
        while stable < self.window:
            if self.steps >= budget:
                raise StabilizationFailure(f"prefix of length {length} not stable after {max_steps} steps")
            self._step()
            stable = stable + 1 if len(self._word) >= length else 0
        self._prefix = tuple(self._word[:length])
        return self

    def element(self, length: int | None = None) -> Element:
        """The confirmed prefix (or its first ``length`` letters) as an element."""
        p = self._prefix if length is None else self._prefix[:length]
        return Element(self.group.name, p)

    def to_text(self) -> str:
        return f"{self.group.format(self.element())}\t{self.seed}"


def sample_boundary(
    g: GroupSpec,
    m: StepMeasure,
    rng,
    stabilization: int = 1,
    *,
    window: int = DEFAULT_WINDOW,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> BoundaryPoint:
    """Sample an end ``xi`` from the exit measure, confirmed to ``stabilization`` letters."""
    seed = None if isinstance(rng, np.random.Generator) else rng
    xi = BoundaryPoint(g, m, as_generator(rng), seed=seed, window=window)
    return xi.extend(stabilization, max_steps)


def _tree_oracle(o) -> TreeOracle:
    if isinstance(o, TreeOracle):
        return o
    if isinstance(o, StepMeasure):
        return TreeOracle(o)
    raise MethodUnavailable("boundary kernels need the exact tree oracle")


def _common_prefix(a, b) -> int:
    c = 0
    for u, v in zip(a, b):
        if u != v:
            break
        c += 1
    return c


def boundary_kernel(o, x: Element, xi: BoundaryPoint) -> KernelValue:
    """``K(x, xi) = prod_{c} F^{-1} * prod_{u^{-1}} F`` where ``x = c u`` and
    ``c`` is the longest common prefix of ``x`` and ``xi``.

    For isotropic walks this is ``(2k-1)^{-(|x| - 2|c|)}``.  The prefix of
    ``xi`` must extend beyond ``2|x|`` letters; it is extended on demand.
    """
    t = _tree_oracle(o)
    need = 2 * len(x.payload)
    if len(xi.prefix) < need:
        try:
            xi.extend(need)
        except (StabilizationFailure, BoundaryRegression) as exc:
            raise InsufficientPrefix(str(exc)) from exc
    return _boundary_kernel_prefix(t, x.payload, xi.prefix)


def _boundary_kernel_prefix(t: TreeOracle, x: tuple, prefix: tuple) -> KernelValue:
    c = _common_prefix(x, prefix)
    if c == len(prefix) < len(x):
        raise InsufficientPrefix("prefix does not reach past the word")
    w = t.weights
    if t._q is not None:
        power = 2 * c - len(x)
        return KernelValue.from_log(power * w[1], t._q, power)
    log_k = math.fsum(w[s] for s in x[:c]) - math.fsum(w[-s] for s in x[c:])
    return KernelValue.from_log(log_k)


def kernel_integrand(o, x: Element, prefix: tuple[int, ...]) -> float:
    """``-ln K(x, xi)`` for an end whose materialised prefix is ``prefix``."""
    return -_boundary_kernel_prefix(_tree_oracle(o), x.payload, tuple(prefix)).log_value


# -- batch sampling ---------------------------------------------------------------


def sample_prefixes(
    m: StepMeasure,
    size: int,
    rng: np.random.Generator,
    length: int,
    *,
    window: int = DEFAULT_WINDOW,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> tuple[np.ndarray, np.ndarray]:
    """Confirmed prefixes of ``size`` independent ends, vectorised.

    Returns an ``(size, length)`` int8 array and a mask of walkers that
    stabilised within ``max_steps``; rows of failed walkers are zero.
    """
    w = FreeBatchWalker(m, size, rng, capacity=max(2 * length, 16))
    stable = np.zeros(size, dtype=np.int64)
    done = np.zeros(size, dtype=bool)
    out = np.zeros((size, length), dtype=np.int8)
    for _ in range(max_steps):
        w.step()
        stable = np.where(w.lengths >= length, stable + 1, 0)
        new = (~done) & (stable >= window)
        if new.any():
            out[new] = w.stack[new, :length]
            done |= new
            if done.all():
                break
    return out, done


@dataclass(frozen=True)
class BoundaryIntegral:
    estimate: Estimate
    failures: int
    samples: int
    seed_note: str = ""


def _log_kernel_first_letter(t: TreeOracle, xt: np.ndarray, first: np.ndarray) -> np.ndarray:
    """``ln K(x, xi)`` for ``|x| <= 1`` given the first letter of ``xi`` (0 for ``x = e``)."""
    k = t.group.rank
    wp = np.zeros(2 * k + 1)
    for s, v in t.weights.items():
        wp[s + k] = v
    xi = xt.astype(np.int64)
    inside = wp[xi + k]        # x is the first letter of xi: ln K = w(x)
    outside = -wp[-xi + k]     # otherwise ln K = -w(x^{-1})
    return np.where(xi == 0, 0.0, np.where(first == xt, inside, outside))


def boundary_integral(
    g: GroupSpec,
    m: StepMeasure,
    samples: int,
    rng,
    *,
    oracle: TreeOracle | None = None,
    window: int = DEFAULT_WINDOW,
    max_steps: int = 10_000,
    chunk: int = 20_000,
) -> BoundaryIntegral:
    """Monte Carlo mean of ``-ln K(X, xi)`` with ``X ~ reversed(m)`` and ``xi``
    drawn from the exit measure, independently."""
    if m.group != g:
        raise ValueError("measure and group differ")
    t = oracle or _tree_oracle(m)
    rng = as_generator(rng)
    rev = m.reversed()
    rev_letters = np.array([x.payload[0] if x.payload else 0 for x in rev.support], dtype=np.int8)
    length = 2 * max(1, rev.max_step())
    values = []
    failures = 0
    for _, size in chunk_sizes(samples, chunk):
        xt = rev_letters[rev.sample_indices(rng, size)]
        prefixes, ok = sample_prefixes(m, size, rng, length, window=window, max_steps=max_steps)
        failures += int((~ok).sum())
        vals = -_log_kernel_first_letter(t, xt[ok], prefixes[ok, 0])
        values.append(vals)
    v = np.concatenate(values) if values else np.zeros(0)
    n = len(v)
    if n == 0:
        raise StabilizationFailure("no boundary sample stabilised")
    se = float(v.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    note = f"{failures} of {samples} boundary samples failed to stabilise" if failures else None
    return BoundaryIntegral(Estimate(float(v.mean()), se, n, "monte_carlo", note), failures, samples)


def green_speed_integral(g: GroupSpec, m: StepMeasure, samples: int, rng, **kw) -> Estimate:
    """Green speed as the mean of ``-ln K(X, xi)``."""
    return boundary_integral(g, m, samples, rng, **kw).estimate


def entropy_integral(g: GroupSpec, m: StepMeasure, samples: int, rng, **kw) -> Estimate:
    """Asymptotic entropy as the same boundary integral.

    The integrand and sampler are shared with :func:`green_speed_integral`,
    so for a given seed both return the same value.
    """
    return boundary_integral(g, m, samples, rng, **kw).estimate


# -- maximal inequality ---------------------------------------------------------------


@dataclass(frozen=True)
class MaximalRow:
    a: float
    empirical: float
    stderr: float
    bound: float
    verdict: str


@dataclass
class MaximalInequalityReport:
    """Empirical ``P(sup_{n <= horizon} K(X, Z_n) >= a)`` against ``1/a``.

    The finite-horizon supremum can only underestimate the full one, so a
    value above ``1/a + 3 stderr`` falsifies the bound while agreement
    within noise is evidence, not proof.
    """

    rows: list[MaximalRow]
    trajectories: int
    horizon: int
    note: str = "finite-horizon supremum: sound for falsification only"
    sup_log_kernel: np.ndarray = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(r.verdict == "pass" for r in self.rows)


def sup_log_kernel(
    m: StepMeasure,
    trajectories: int,
    horizon: int,
    rng,
    *,
    oracle: TreeOracle | None = None,
    chunk: int = 25_000,
) -> np.ndarray:
    """``max_{0 <= n <= horizon} ln K(X, Z_n)`` per trajectory, ``X ~ reversed(m)``.

    For ``|X| <= 1`` on a tree, ``K(s, y)`` is ``1/F_s`` when the reduced
    word of ``y`` starts with ``s`` and ``F_{s^{-1}}`` otherwise.
    """
    t = oracle or _tree_oracle(m)
    rng = as_generator(rng)
    rev = m.reversed()
    rev_letters = np.array([x.payload[0] if x.payload else 0 for x in rev.support], dtype=np.int8)
    out = np.empty(trajectories)
    for i, size in chunk_sizes(trajectories, chunk):
        xt = rev_letters[rev.sample_indices(rng, size)]
        w = FreeBatchWalker(m, size, rng, capacity=64)
        best = _log_kernel_first_letter(t, xt, np.zeros(size, dtype=np.int8))
        for _ in range(horizon):
            w.step()
            best = np.maximum(best, _log_kernel_first_letter(t, xt, w.first_letters))
        out[i * chunk : i * chunk + size] = best
    return out


def maximal_inequality_check(
    g: GroupSpec,
    m: StepMeasure,
    a_grid,
    trajectories: int,
    horizon: int,
    rng,
    *,
    oracle: TreeOracle | None = None,
) -> MaximalInequalityReport:
    if m.group != g:
        raise ValueError("measure and group differ")
    sup = sup_log_kernel(m, trajectories, horizon, rng, oracle=oracle)
    rows = []
    for a in a_grid:
        la = math.log(a)
        p = float(np.mean(sup >= la - LOG_RTOL * max(1.0, abs(la))))
        se = math.sqrt(p * (1 - p) / trajectories)
        bound = 1.0 / a
        rows.append(MaximalRow(float(a), p, se, bound, "pass" if p <= bound + 3 * se else "fail"))
    return MaximalInequalityReport(rows, trajectories, horizon, sup_log_kernel=sup)
