"""Finitely supported step measures and their convolution powers."""

from __future__ import annotations

import math
import re
from collections import defaultdict
from fractions import Fraction
from typing import Callable, Iterator, Mapping

import numpy as np

from .groups import Element, GroupSpec, group_of, parse_group, sort_key

MASS_TOL = 1e-12
DEFAULT_BUDGET_ATOMS = 2_000_000
DEFAULT_EPS_PRUNE = 1e-15

MetricFn = Callable[[Element, Element], float]


class MeasureError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    """Convolution support would exceed the atom budget and pruning is off."""

    def __init__(self, size: int, budget: int):
        self.size = size
        self.budget = budget
        super().__init__(f"support of {size} atoms exceeds the budget of {budget}")


class StepMeasure:
    """A probability measure with finite support on a catalog group.

    Atoms with zero mass are dropped.  Masses must sum to ``1 - discarded_mass``
    within ``1e-12``; ``discarded_mass`` is nonzero only for pruned
    convolution products.
    """

    __slots__ = ("group", "_atoms", "_order", "discarded_mass", "discarded_atoms", "eps_prune")

    def __init__(
        self,
        group: GroupSpec,
        atoms: Mapping[Element, float],
        *,
        discarded_mass: float = 0.0,
        discarded_atoms: int = 0,
        eps_prune: float = DEFAULT_EPS_PRUNE,
    ):
        clean = {}
        for x, p in atoms.items():
            if x.group != group.name:
                raise MeasureError(f"atom {x} is not in {group.name}")
            clean[x.payload] = clean.get(x.payload, 0.0) + float(p)
        self._init(group, clean, discarded_mass, discarded_atoms, eps_prune)

    @classmethod
    def _from_payloads(cls, group, masses, discarded_mass=0.0, discarded_atoms=0,
                       eps_prune=DEFAULT_EPS_PRUNE) -> "StepMeasure":
        self = cls.__new__(cls)
        self._init(group, masses, discarded_mass, discarded_atoms, eps_prune)
        return self

    def _init(self, group, masses, discarded_mass, discarded_atoms, eps_prune):
        self.group = group
        if any(p < 0 or not math.isfinite(p) for p in masses.values()):
            raise MeasureError("masses must be finite and nonnegative")
        clean = {z: p for z, p in masses.items() if p > 0}
        if not clean:
            raise MeasureError("measure has empty support")
        total = math.fsum(clean.values())
        if abs(total + discarded_mass - 1.0) > MASS_TOL:
            raise MeasureError(f"masses sum to {total!r}, expected {1.0 - discarded_mass!r}")
        self._atoms = clean
        self._order = None
        self.discarded_mass = float(discarded_mass)
        self.discarded_atoms = int(discarded_atoms)
        self.eps_prune = eps_prune

    def _ordered(self) -> list[tuple]:
        if self._order is None:
            if self.group.is_free:
                self._order = sorted(self._atoms, key=lambda z: (len(z), z))
            else:
                self._order = sorted(self._atoms)
        return self._order

    def _elem(self, z: tuple) -> Element:
        return Element(self.group.name, z)

    # -- container protocol -------------------------------------------

    @property
    def atoms(self) -> dict[Element, float]:
        return {self._elem(z): p for z, p in self._atoms.items()}

    @property
    def payload_masses(self) -> dict[tuple, float]:
        """Masses keyed by canonical payload (read-only view by convention)."""
        return self._atoms

    @property
    def support(self) -> list[Element]:
        """Support in deterministic order."""
        return [self._elem(z) for z in self._ordered()]

    def __len__(self) -> int:
        return len(self._atoms)

    def __contains__(self, x: Element) -> bool:
        return x.group == self.group.name and x.payload in self._atoms

    def __iter__(self) -> Iterator[tuple[Element, float]]:
        for z in self._ordered():
            yield self._elem(z), self._atoms[z]

    def mass(self, x: Element) -> float:
        return self._atoms.get(x.payload, 0.0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, StepMeasure):
            return NotImplemented
        return self.group == other.group and self._atoms == other._atoms

    def isclose(self, other: "StepMeasure", tol: float = 1e-12) -> bool:
        if self.group != other.group or set(self._atoms) != set(other._atoms):
            return False
        return all(abs(p - other._atoms[z]) <= tol for z, p in self._atoms.items())

    def __repr__(self) -> str:
        head = ", ".join(f"{x}: {p:.6g}" for x, p in list(self)[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"StepMeasure({self.group.name}, {{{head}{more}}})"

    # -- structural predicates ----------------------------------------

    def is_symmetric(self, tol: float = 1e-14) -> bool:
        inv = self.group.inv_payload
        return all(abs(p - self._atoms.get(inv(z), 0.0)) <= tol for z, p in self._atoms.items())

    def is_nearest_neighbour(self) -> bool:
        """Support inside the generators plus the identity."""
        allowed = {g.payload for g in self.group.generators} | {self.group.identity().payload}
        return set(self._atoms) <= allowed

    def laziness(self) -> float:
        return self.mass(self.group.identity())

    def is_isotropic_free(self, tol: float = 1e-14) -> bool:
        """Lazy or plain simple random walk on a free group."""
        if not self.group.is_free or not self.is_nearest_neighbour():
            return False
        gens = self.group.generators
        p0 = self.mass(gens[0])
        return p0 > 0 and all(abs(self.mass(g) - p0) <= tol for g in gens)

    def mean(self) -> np.ndarray:
        if not self.group.is_lattice:
            raise MeasureError("mean vector is only defined on lattices")
        return sum((np.asarray(x.payload, float) * p for x, p in self), np.zeros(self.group.rank))

    def covariance(self) -> np.ndarray:
        m = self.mean()
        d = self.group.rank
        cov = np.zeros((d, d))
        for x, p in self:
            v = np.asarray(x.payload, float) - m
            cov += p * np.outer(v, v)
        return cov

    def max_step(self) -> int:
        return max(self.group.word_length(self._elem(z)) for z in self._atoms)

    # -- derived measures ---------------------------------------------

    def entropy(self) -> float:
        """Shannon entropy in nats, with compensated summation."""
        return math.fsum(-p * math.log(p) for p in self._atoms.values())

    def entropy_error_bound(self) -> float:
        """Upper bound on the entropy lost to pruning.

        The discarded atoms carry total mass ``delta``, each below
        ``eps_prune``; their entropy is at most ``delta * (|ln eps| + ln N)``
        where ``N`` is the number of discarded atoms.
        """
        if self.discarded_mass <= 0:
            return 0.0
        slack = math.log(max(self.discarded_atoms, 1))
        return self.discarded_mass * (abs(math.log(self.eps_prune)) + slack)

    def reversed(self) -> "StepMeasure":
        """The reversed law ``x -> mu(x^{-1})``."""
        inv = self.group.inv_payload
        return StepMeasure._from_payloads(
            self.group,
            {inv(z): p for z, p in self._atoms.items()},
            self.discarded_mass,
            self.discarded_atoms,
            self.eps_prune,
        )

    def first_moment(self, metric: MetricFn) -> float:
        e = self.group.identity()
        return math.fsum(p * metric(e, x) for x, p in self)

    # -- sampling -----------------------------------------------------

    def _cdf(self) -> np.ndarray:
        probs = np.array([self._atoms[z] for z in self._ordered()])
        cdf = np.cumsum(probs)
        cdf[-1] = max(cdf[-1], 1.0)
        return cdf

    def sample(self, rng: np.random.Generator) -> Element:
        """One draw; the stream position advances by exactly one uniform."""
        u = rng.random()
        i = int(np.searchsorted(self._cdf(), u, side="right"))
        order = self._ordered()
        return self._elem(order[min(i, len(order) - 1)])

    def sample_indices(self, rng: np.random.Generator, size) -> np.ndarray:
        """Vectorised draws as indices into :attr:`support`."""
        u = rng.random(size)
        idx = np.searchsorted(self._cdf(), u, side="right")
        return np.minimum(idx, len(self._atoms) - 1)

    # -- serialisation ------------------------------------------------

    def to_text(self) -> str:
        return "".join(f"{x}\t{p!r}\n" for x, p in self)

    @classmethod
    def from_text(cls, group: GroupSpec, text: str) -> "StepMeasure":
        atoms: dict[Element, float] = defaultdict(float)
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                elem, mass = line.split("\t")
            except ValueError as exc:
                raise MeasureError(f"line {lineno}: expected 'element<TAB>mass'") from exc
            atoms[group.parse(elem)] += float(mass)
        return cls(group, atoms)


# -- convolution ----------------------------------------------------------


def convolve(
    m1: StepMeasure,
    m2: StepMeasure,
    *,
    budget: int = DEFAULT_BUDGET_ATOMS,
    eps_prune: float = DEFAULT_EPS_PRUNE,
    prune: bool = True,
) -> StepMeasure:
    """``(m1 * m2)(z) = sum_x m1(x) m2(x^{-1} z)``.

    Exact unless the product support exceeds ``budget``; then atoms lighter
    than ``eps_prune`` are dropped and their mass is carried in
    ``discarded_mass``.  With ``prune=False`` an oversize product raises
    :class:`BudgetExceeded`.
    """
    if m1.group != m2.group:
        raise MeasureError(f"cannot convolve {m1.group.name} with {m2.group.name}")
    g = m1.group
    mulp = g.mul_payload
    right = list(m2.payload_masses.items())
    acc: dict[tuple, float] = defaultdict(float)
    for xp, p in m1.payload_masses.items():
        for yp, q in right:
            acc[mulp(xp, yp)] += p * q
    delta = m1.discarded_mass + m2.discarded_mass - m1.discarded_mass * m2.discarded_mass
    dropped = m1.discarded_atoms + m2.discarded_atoms
    if len(acc) > budget:
        if not prune:
            raise BudgetExceeded(len(acc), budget)
        light = [z for z, v in acc.items() if v < eps_prune]
        delta += math.fsum(acc[z] for z in light)
        dropped += len(light)
        for z in light:
            del acc[z]
        if len(acc) > budget:
            raise BudgetExceeded(len(acc), budget)
    return StepMeasure._from_payloads(g, dict(acc), delta, dropped, eps_prune)


def convolution_powers(m: StepMeasure, n_max: int, **kw) -> Iterator[StepMeasure]:
    """Yield ``mu^1, mu^2, ..., mu^n_max`` by iterated single-step convolution."""
    if n_max < 1:
        return
    cur = m
    yield cur
    for _ in range(n_max - 1):
        cur = convolve(cur, m, **kw)
        yield cur


def convolution_power(m: StepMeasure, n: int, **kw) -> StepMeasure:
    if n < 1:
        raise MeasureError("convolution power needs n >= 1")
    out = m
    for out in convolution_powers(m, n, **kw):
        pass
    return out


def delta(g: GroupSpec, x: Element | None = None) -> StepMeasure:
    return StepMeasure(g, {x if x is not None else g.identity(): 1.0})


# -- exact laws of Z_n -----------------------------------------------------


class ExactPowers:
    """Common interface for exact access to ``mu^n``, ``1 <= n <= n_max``."""

    n_max: int
    measure: StepMeasure

    def mass(self, n: int, x: Element) -> float:
        raise NotImplementedError

    def entropy(self, n: int) -> float:
        raise NotImplementedError

    def entropy_error(self, n: int) -> float:
        return 0.0


class EnumeratedPowers(ExactPowers):
    """Convolution powers held as explicit :class:`StepMeasure` objects."""

    def __init__(self, m: StepMeasure, n_max: int, **kw):
        self.measure = m
        self.powers: list[StepMeasure] = []
        self.exhausted: BudgetExceeded | None = None
        try:
            for p in convolution_powers(m, n_max, **kw):
                self.powers.append(p)
        except BudgetExceeded as exc:
            self.exhausted = exc
        self.n_max = len(self.powers)

    def power(self, n: int) -> StepMeasure:
        if n == 0:
            return delta(self.measure.group)
        return self.powers[n - 1]

    def mass(self, n: int, x: Element) -> float:
        return self.power(n).mass(x)

    def entropy(self, n: int) -> float:
        return 0.0 if n == 0 else self.power(n).entropy()

    def entropy_error(self, n: int) -> float:
        return 0.0 if n == 0 else self.power(n).entropy_error_bound()


class RadialPowers(ExactPowers):
    """Exact ``mu^n`` for lazy or plain simple random walk on ``F_k``.

    Such a measure is invariant under the tree automorphisms fixing the
    identity, so ``mu^n(x)`` depends only on ``|x|`` and equals
    ``P(|Z_n| = |x|) / #sphere(|x|)``.  The word length is a birth-death
    chain, which is propagated exactly.
    """

    def __init__(self, m: StepMeasure, n_max: int):
        if not m.is_isotropic_free():
            raise MeasureError("radial powers need a lazy or plain SRW on a free group")
        self.measure = m
        self.n_max = n_max
        g = m.group
        k = g.rank
        alpha = m.laziness()
        move = 1.0 - alpha
        up = move * (2 * k - 1) / (2 * k)
        down = move / (2 * k)
        self.length_law = np.zeros((n_max + 1, n_max + 2))
        self.length_law[0, 0] = 1.0
        for n in range(1, n_max + 1):
            p = self.length_law[n - 1]
            new = alpha * p.copy()
            new[1] += move * p[0]
            new[2:] += up * p[1:-1]
            new[:-1][1:] += down * p[2:]
            new[0] += down * p[1]
            self.length_law[n] = new
        r = np.arange(n_max + 2)
        self.log_sphere = np.where(r == 0, 0.0, math.log(2 * k) + np.maximum(r - 1, 0) * math.log(2 * k - 1))

    def mass(self, n: int, x: Element) -> float:
        r = len(x.payload)
        if r > n:
            return 0.0
        p = self.length_law[n, r]
        return float(p * math.exp(-self.log_sphere[r])) if p > 0 else 0.0

    def log_mass_by_length(self, n: int) -> np.ndarray:
        p = self.length_law[n]
        with np.errstate(divide="ignore"):
            return np.where(p > 0, np.log(np.where(p > 0, p, 1.0)) - self.log_sphere, -np.inf)

    def entropy(self, n: int) -> float:
        p = self.length_law[n]
        nz = p > 0
        return math.fsum((-p[nz] * (np.log(p[nz]) - self.log_sphere[nz])).tolist())


def exact_powers(m: StepMeasure, n_max: int, *, prefer_radial: bool = True, **kw) -> ExactPowers:
    """Pick the cheapest exact representation of ``mu^1 .. mu^n_max``."""
    if prefer_radial and m.is_isotropic_free():
        return RadialPowers(m, n_max)
    return EnumeratedPowers(m, n_max, **kw)


# -- catalog constructors ----------------------------------------------------

_CALL_RE = re.compile(r"^\s*(\w+)\s*(?:\((.*)\))?\s*$")


def srw(g: GroupSpec) -> StepMeasure:
    """Uniform measure on the symmetric generating set."""
    gens = g.generators
    return StepMeasure(g, {s: 1.0 / len(gens) for s in gens})


def biased(g: GroupSpec, p: float) -> StepMeasure:
    """Nearest-neighbour walk on ``Z``: ``+1`` with mass ``p``, ``-1`` with ``1 - p``."""
    if not (g.is_lattice and g.rank == 1):
        raise MeasureError("biased(p) is defined on Z only")
    if not 0.0 <= p <= 1.0:
        raise MeasureError(f"bias must lie in [0, 1], got {p}")
    return StepMeasure(g, {g.element((1,)): p, g.element((-1,)): 1.0 - p})


def lazy(alpha: float, base: StepMeasure) -> StepMeasure:
    """``alpha * delta_e + (1 - alpha) * base``."""
    if not 0.0 <= alpha < 1.0:
        raise MeasureError(f"laziness must lie in [0, 1), got {alpha}")
    g = base.group
    atoms = defaultdict(float)
    atoms[g.identity()] += alpha
    for x, p in base:
        atoms[x] += (1.0 - alpha) * p
    return StepMeasure(g, atoms)


def parse_measure(text: str, group: GroupSpec | str) -> StepMeasure:
    """Build a catalog measure from ``"srw"``, ``"biased(p)"`` or ``"lazy(a, base)"``."""
    g = parse_group(group) if isinstance(group, str) else group
    m = _CALL_RE.match(text)
    if not m:
        raise MeasureError(f"unrecognised measure {text!r}")
    name, args = m.group(1).lower(), m.group(2)
    if name == "srw":
        if args:
            raise MeasureError("srw takes no arguments")
        return srw(g)
    if name == "biased":
        try:
            return biased(g, float(Fraction(args.strip())))
        except (TypeError, ValueError) as exc:
            raise MeasureError(f"bad bias in {text!r}") from exc
    if name == "lazy":
        if not args or "," not in args:
            raise MeasureError("lazy needs (alpha, base)")
        a, base = args.split(",", 1)
        try:
            alpha = float(Fraction(a.strip()))
        except ValueError as exc:
            raise MeasureError(f"bad laziness in {text!r}") from exc
        return lazy(alpha, parse_measure(base, g))
    raise MeasureError(f"unknown measure constructor {name!r}")


# Module-level aliases mirroring the operation names.

def entropy(m: StepMeasure) -> float:
    return m.entropy()


def reversed_measure(m: StepMeasure) -> StepMeasure:
    return m.reversed()


def sample(m: StepMeasure, rng: np.random.Generator) -> Element:
    return m.sample(rng)


def first_moment(m: StepMeasure, metric: MetricFn) -> float:
    return m.first_moment(metric)


def conditional_entropy(m: StepMeasure | Mapping[Element, float], A) -> float:
    """Entropy of ``m`` conditioned on the set ``A``."""
    masses = [m.mass(x) if isinstance(m, StepMeasure) else m.get(x, 0.0) for x in set(A)]
    masses = [p for p in masses if p > 0]
    total = math.fsum(masses)
    if total <= 0:
        raise MeasureError("conditioning set has zero mass")
    return math.fsum(-(p / total) * math.log(p / total) for p in masses)
