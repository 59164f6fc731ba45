"""Estimators of rates of escape and of the asymptotic entropy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..estimate import Estimate, combined_sigma
from ..groups import Element, GroupSpec
from ..measures import EnumeratedPowers, ExactPowers, RadialPowers, StepMeasure, exact_powers
from ..walks import FreeBatchWalker, LatticeBatchWalker, as_generator, chunk_sizes, simulate
from ..green.oracles import GreenOracle, LineOracle, TreeOracle
from .extrapolate import extrapolate_entropy, limit_weights, speed_design


# -- metrics -----------------------------------------------------------------------


class WordMetric:
    """Word metric for the standard generators."""

    name = "word"

    def __init__(self, g: GroupSpec):
        self.group = g

    def __call__(self, x: Element, y: Element) -> float:
        return float(self.group.distance(x, y))

    def letter_weights(self) -> dict[int, float] | None:
        if not self.group.is_free:
            return None
        return {s.payload[0]: 1.0 for s in self.group.generators}

    def batch(self, points: np.ndarray) -> np.ndarray:
        return np.abs(points).sum(axis=1).astype(float)


class GreenMetric:
    """Directed Green distance ``d_G(x, y) = -ln F(x, y)`` from an oracle."""

    name = "green"

    def __init__(self, o: GreenOracle):
        self.oracle = o
        self.group = o.group

    def __call__(self, x: Element, y: Element) -> float:
        return self.oracle.green_distance(x, y)

    def letter_weights(self) -> dict[int, float] | None:
        if isinstance(self.oracle, TreeOracle):
            return dict(self.oracle.weights)
        return None

    def batch(self, points: np.ndarray) -> np.ndarray:
        if hasattr(self.oracle, "distance_batch"):
            return self.oracle.distance_batch(points)
        g = self.group
        return np.array([self.oracle.green_distance(g.identity(), g.element(p)) for p in points])


# -- results -----------------------------------------------------------------------


@dataclass
class LimitEstimate:
    """A finite-``n`` ladder and its extrapolated limit.

    ``uncertainty`` adds the model spread (disagreement between
    extrapolation models) to the statistical standard error ``stderr``.
    Extra ladders (increments, naive pointwise means) live in ``ladders``
    as ``(n, value, stderr)`` rows.
    """

    name: str
    per_n: list[tuple[int, float]]
    extrapolated: float
    extrapolation_method: str
    uncertainty: float
    stderr: float = 0.0
    model_spread: float = 0.0
    per_n_stderr: list[float] = field(default_factory=list)
    n_samples: int = 1
    ladders: dict[str, list[tuple[int, float, float]]] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def value(self) -> float:
        return self.extrapolated

    @property
    def sigma(self) -> float:
        return self.uncertainty

    def as_estimate(self) -> Estimate:
        method = "extrapolated"
        return Estimate(self.extrapolated, self.uncertainty, max(self.n_samples, 1), method, "; ".join(self.notes) or None)

    def ladder_rows(self):
        """``(ladder, n, value, stderr)`` rows for CSV output, main ladder first."""
        errs = self.per_n_stderr or [0.0] * len(self.per_n)
        rows = [(self.name, n, v, s) for (n, v), s in zip(self.per_n, errs)]
        for key, lad in self.ladders.items():
            rows += [(f"{self.name}:{key}", n, v, s) for n, v, s in lad]
        return rows


# -- speed ---------------------------------------------------------------------------


def _speed_samples(g, m, metric, ns, trials, rng, chunk):
    """``d(e, Z_n) / n`` per trajectory and ladder rung."""
    out = np.empty((trials, len(ns)))
    weights = metric.letter_weights() if g.is_free and m.is_nearest_neighbour() else None
    for i, size in chunk_sizes(trials, chunk):
        rows = slice(i * chunk, i * chunk + size)
        if weights is not None:
            w = FreeBatchWalker(m, size, rng, capacity=max(64, int(ns[-1] * 0.7) + 16), weights={"d": weights})
            for j, n in enumerate(ns):
                w.run(n - w.time)
                out[rows, j] = w.trackers["d"] / n
        elif g.is_lattice:
            w = LatticeBatchWalker(m, size, rng)
            for j, n in enumerate(ns):
                w.run(n - w.time)
                out[rows, j] = metric.batch(w.positions) / n
        else:
            e = g.identity()
            for t in range(size):
                traj = simulate(g, m, ns[-1], rng)
                out[i * chunk + t] = [metric(e, traj.positions[n]) / n for n in ns]
    return out


def speed_estimate(
    g: GroupSpec,
    m: StepMeasure,
    metric,
    n,
    trials: int,
    rng,
    *,
    chunk: int = 5_000,
    name: str | None = None,
) -> LimitEstimate:
    """Rate of escape ``lim d(e, Z_n) / n``.

    ``n`` is a single horizon or a ladder.  The mean of ``d(e, Z_n)/n`` is
    fitted by ``l + c/n`` over the top decade of the ladder; the fit is
    applied trajectory by trajectory for its standard error, and its
    distance to the raw value at the top rung is added as model error.
    Trajectories whose metric value is not finite are dropped and counted.
    """
    ns = sorted({int(n)} if np.isscalar(n) else {int(v) for v in n})
    if ns[0] < 1 or trials < 2:
        raise ValueError("need n >= 1 and at least two trials")
    rng = as_generator(rng)
    V = _speed_samples(g, m, metric, ns, trials, rng, chunk)
    good = np.isfinite(V).all(axis=1)
    dropped = int((~good).sum())
    V = V[good]
    T = len(V)
    if T < 2:
        raise ValueError("fewer than two usable trajectories")
    means = V.mean(axis=0)
    ses = V.std(axis=0, ddof=1) / math.sqrt(T)
    top = [j for j, n in enumerate(ns) if n * 10 >= ns[-1]]
    if len(top) >= 2:
        w = limit_weights(speed_design([ns[j] for j in top]))
        per_traj = V[:, top] @ w
        method = "fit l + c/n over the top decade"
    else:
        per_traj = V[:, -1]
        method = "value at the largest n"
    value = float(per_traj.mean())
    se = float(per_traj.std(ddof=1) / math.sqrt(T))
    spread = abs(value - float(means[-1]))
    notes = [f"dropped {dropped} trajectories with non-finite metric values"] if dropped else []
    return LimitEstimate(
        name=name or f"speed_{metric.name}",
        per_n=[(n, float(v)) for n, v in zip(ns, means)],
        per_n_stderr=[float(s) for s in ses],
        extrapolated=value,
        extrapolation_method=method,
        uncertainty=se + spread,
        stderr=se,
        model_spread=spread,
        n_samples=T,
        notes=notes,
    )


# -- entropy ---------------------------------------------------------------------------


def entropy_estimate_convolution(
    m: StepMeasure,
    n_max: int,
    *,
    powers: ExactPowers | None = None,
    order: int = 2,
    name: str = "entropy_convolution",
    **kw,
) -> LimitEstimate:
    """Entropy rate from the exact ladder ``H(mu^n)``, ``n <= n_max``.

    ``per_n`` holds ``H(mu^n)/n`` and ``ladders["increment"]`` the increments
    ``H(mu^n) - H(mu^{n-1})``; both decrease to ``h``.  The limit is fitted
    by ``H_n = h n + a ln n + c + d_1/n + d_2/n^2`` over ``n`` in
    ``[n_max/2, n_max]``; the uncertainty is the spread against lower-order
    fits plus any pruning error.  When the budget cuts the ladder short the
    partial ladder is used and the cut is noted; below five rungs the last
    increment is returned with the last increment step as its uncertainty.
    """
    pw = powers or exact_powers(m, n_max, **kw)
    n_avail = min(n_max, pw.n_max)
    notes = []
    if n_avail < n_max:
        notes.append(f"budget stopped the ladder at n = {n_avail}")
    if n_avail < 1:
        raise ValueError("no convolution power fits in the budget")
    H = {n: pw.entropy(n) for n in range(0, n_avail + 1)}
    errs = {n: pw.entropy_error(n) for n in range(0, n_avail + 1)}
    per_n = [(n, H[n] / n) for n in range(1, n_avail + 1)]
    per_err = [errs[n] / n for n in range(1, n_avail + 1)]
    inc = [(n, H[n] - H[n - 1], errs[n] + errs[n - 1]) for n in range(1, n_avail + 1)]
    try:
        value, spread, w, window, per_order = extrapolate_entropy(H, n_avail, order=order)
        prune = float(np.abs(w) @ np.array([errs[n] for n in window]))
        method = f"least-squares fit of H_n, order {max(per_order)}, n in [{window[0]}, {window[-1]}]"
        ladders = {"increment": inc, "fit_order": [(p, v, 0.0) for p, v in per_order.items()]}
    except ValueError:
        value = inc[-1][1]
        spread = abs(inc[-1][1] - inc[-2][1]) if len(inc) >= 2 else abs(value)
        prune = inc[-1][2]
        method = "last increment"
        ladders = {"increment": inc}
        notes.append("ladder too short for the fitted model")
    return LimitEstimate(
        name=name,
        per_n=per_n,
        per_n_stderr=per_err,
        extrapolated=value,
        extrapolation_method=method,
        uncertainty=spread + prune,
        stderr=prune,
        model_spread=spread,
        ladders=ladders,
        notes=notes,
    )


def _pointwise_radial(pw: RadialPowers, n: int, trials: int, rng: np.random.Generator):
    """Naive terms ``-ln mu^j(Z_j)`` and conditional increments for isotropic free walks."""
    m = pw.measure
    k = m.group.rank
    alpha = m.laziness()
    move = 1.0 - alpha
    up = move * (2 * k - 1) / (2 * k)
    down = move / (2 * k)
    r = np.zeros(trials, dtype=np.int64)
    naive = np.zeros((trials, n + 1))
    incr = np.zeros((trials, n + 1))
    L = [-pw.log_mass_by_length(j) for j in range(n + 1)]
    err = np.seterr(invalid="ignore")
    for j in range(1, n + 1):
        Lj = L[j]
        cur = L[j - 1][r]
        at0 = r == 0
        stay = Lj[r]
        grow = Lj[r + 1]
        shrink = Lj[np.maximum(r - 1, 0)]
        ce = np.where(at0, alpha * stay + move * grow, alpha * stay + up * grow + down * shrink)
        if alpha == 0:
            ce = np.where(at0, grow, up * grow + down * shrink)
        incr[:, j] = ce - cur
        u = rng.random(trials)
        lazy_step = u < alpha
        go_down = (~lazy_step) & (~at0) & (u < alpha + down)
        r = np.where(lazy_step, r, np.where(go_down, r - 1, r + 1))
        naive[:, j] = L[j][r]
    np.seterr(**err)
    return naive, incr


def _pointwise_enumerated(pw: EnumeratedPowers, n: int, trials: int, rng: np.random.Generator):
    m = pw.measure
    g = m.group
    mul = g.mul_payload
    atoms = list(m.payload_masses.items())
    support = [x.payload for x in m.support]
    idx = m.sample_indices(rng, (trials, n))
    naive = np.zeros((trials, n + 1))
    incr = np.zeros((trials, n + 1))
    tables = [None] + [pw.power(j).payload_masses for j in range(1, n + 1)]

    def neglog(j, z):
        if j == 0:
            return 0.0 if z == g.identity().payload else math.inf
        p = tables[j].get(z)
        if p is None:
            raise KeyError(f"endpoint {z} outside the materialised support of mu^{j}")
        return -math.log(p)

    for t in range(trials):
        z = g.identity().payload
        prev = 0.0
        for j in range(1, n + 1):
            ce = math.fsum(p * neglog(j, mul(z, s)) for s, p in atoms)
            incr[t, j] = ce - prev
            z = mul(z, support[idx[t, j - 1]])
            prev = neglog(j, z)
            naive[t, j] = prev
    return naive, incr


def entropy_estimate_pointwise(
    g: GroupSpec,
    m: StepMeasure,
    n: int,
    trials: int,
    rng,
    *,
    powers: ExactPowers | None = None,
    order: int = 2,
    lo: int | None = None,
    name: str = "entropy_pointwise",
) -> LimitEstimate:
    """Entropy rate from sampled values of ``-ln mu^j(Z_j)``, ``j <= n``.

    ``per_n`` holds the plain averages of ``-ln mu^j(Z_j) / j``.  The
    extrapolated value uses conditional increments: given ``Z_{j-1}`` the
    expectation of ``-ln mu^j(Z_j)`` is summed exactly over the next step,
    which removes the step noise while keeping ``E[sum_{i <= j} D_i] =
    H(mu^j)``.  The entropy model of :func:`entropy_estimate_convolution` is
    then applied trajectory by trajectory, so the reported standard error
    covers the extrapolation.  The default window ``[n/3, n]`` is wider than
    the convolution one because the per-trajectory fit is noisier.
    """
    if m.group != g:
        raise ValueError("measure and group differ")
    if n < 1 or trials < 2:
        raise ValueError("need n >= 1 and at least two trials")
    lo = max(1, n // 3) if lo is None else lo
    rng = as_generator(rng)
    pw = powers or exact_powers(m, n)
    if pw.n_max < n:
        raise ValueError(f"mu^{n} is not materialised (budget stopped at {pw.n_max})")
    if isinstance(pw, RadialPowers):
        naive, incr = _pointwise_radial(pw, n, trials, rng)
    else:
        naive, incr = _pointwise_enumerated(pw, n, trials, rng)
    js = np.arange(1, n + 1)
    ratio = naive[:, 1:] / js
    per_n = [(int(j), float(v)) for j, v in zip(js, ratio.mean(axis=0))]
    per_err = [float(s) for s in ratio.std(axis=0, ddof=1) / math.sqrt(trials)]
    cum = np.cumsum(incr, axis=1)
    mean_cum = {j: float(cum[:, j].mean()) for j in range(n + 1)}
    ladders = {
        "conditional_increment": [
            (int(j), float(incr[:, j].mean()), float(incr[:, j].std(ddof=1) / math.sqrt(trials))) for j in js
        ]
    }
    try:
        value, spread, w, window, per_order = extrapolate_entropy(mean_cum, n, order=order, lo=lo)
        per_traj = cum[:, window] @ w
        value = float(per_traj.mean())
        se = float(per_traj.std(ddof=1) / math.sqrt(trials))
        method = f"per-trajectory fit of cumulative conditional increments, order {max(per_order)}, n in [{window[0]}, {window[-1]}]"
    except ValueError:
        last = incr[:, n]
        value = float(last.mean())
        se = float(last.std(ddof=1) / math.sqrt(trials))
        spread = abs(value - float(incr[:, n - 1].mean())) if n >= 2 else abs(value)
        method = "last conditional increment"
    return LimitEstimate(
        name=name,
        per_n=per_n,
        per_n_stderr=per_err,
        extrapolated=value,
        extrapolation_method=method,
        uncertainty=se + spread,
        stderr=se,
        model_spread=spread,
        n_samples=trials,
        ladders=ladders,
    )
