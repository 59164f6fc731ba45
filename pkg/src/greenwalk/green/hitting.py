"""Monte Carlo first-passage estimates and their escape-tail bias bounds."""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize

from ..estimate import Estimate
from ..groups import Element, GroupSpec
from ..measures import StepMeasure
from ..walks import as_generator, batch_walker, chunk_sizes, supports_batch

DEFAULT_CHUNK = 20_000


def first_hitting_times(
    m: StepMeasure,
    target: Element,
    trials: int,
    horizon: int,
    rng,
    chunk: int = DEFAULT_CHUNK,
) -> np.ndarray:
    """First time ``k <= horizon`` each walk from ``e`` sits at ``target``; ``-1`` if never."""
    rng = as_generator(rng)
    out = np.full(trials, -1, dtype=np.int64)
    if target == m.group.identity():
        out[:] = 0
        return out
    if supports_batch(m):
        for i, size in chunk_sizes(trials, chunk):
            w = batch_walker(m, size, rng)
            ht = np.full(size, -1, dtype=np.int64)
            for t in range(1, horizon + 1):
                w.step()
                new = (ht < 0) & w.at(target.payload)
                ht[new] = t
                if (ht >= 0).all():
                    break
            out[i * chunk : i * chunk + size] = ht
        return out
    support = m.support
    for i in range(trials):
        z = m.group.identity()
        for t, j in enumerate(m.sample_indices(rng, horizon), 1):
            z = z * support[j]
            if z == target:
                out[i] = t
                break
    return out


def hit_fractions(times: np.ndarray, horizons) -> list[tuple[int, float, float]]:
    """``(h, fraction hit by h, binomial stderr)``; nondecreasing in ``h``."""
    n = len(times)
    rows = []
    for h in horizons:
        p = float(np.count_nonzero((times >= 0) & (times <= h))) / n
        rows.append((int(h), p, math.sqrt(p * (1 - p) / n)))
    return rows


def monte_carlo_hitting(
    g: GroupSpec,
    m: StepMeasure,
    x: Element,
    y: Element,
    trials: int,
    horizon: int,
    rng,
) -> Estimate:
    """Fraction of walks from ``x`` that visit ``y`` within ``horizon`` steps.

    A one-sided estimate: events after the horizon are missed, so the
    expectation is at most ``F(x, y)``.
    """
    if trials < 1 or horizon < 0:
        raise ValueError("need trials >= 1 and horizon >= 0")
    if x == y:
        return Estimate(1.0, 0.0, trials, "monte_carlo")
    z = g.mul(g.inv(x), y)
    times = first_hitting_times(m, z, trials, horizon, rng)
    _, p, se = hit_fractions(times, [horizon])[0]
    bound = escape_tail_bound(m, horizon, z)
    note = "downward bias (finite horizon)"
    if bound is not None:
        note += f"; escape-tail bound {bound:.3g}"
    return Estimate(p, se, trials, "monte_carlo", note)


def monte_carlo_visits(m: StepMeasure, z: Element, trials: int, horizon: int, rng) -> Estimate:
    """Mean number of visits to ``z`` at times ``0..horizon``; biased downward."""
    rng = as_generator(rng)
    counts = np.zeros(trials)
    at_start = float(z == m.group.identity())
    if supports_batch(m):
        for i, size in chunk_sizes(trials, DEFAULT_CHUNK):
            w = batch_walker(m, size, rng)
            c = np.full(size, at_start)
            for _ in range(horizon):
                w.step()
                c += w.at(z.payload)
            counts[i * DEFAULT_CHUNK : i * DEFAULT_CHUNK + size] = c
    else:
        support = m.support
        for i in range(trials):
            cur = m.group.identity()
            c = at_start
            for j in m.sample_indices(rng, horizon):
                cur = cur * support[j]
                c += cur == z
            counts[i] = c
    se = float(counts.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return Estimate(float(counts.mean()), se, trials, "monte_carlo", "downward bias (finite horizon)")


def escape_tail_bound(m: StepMeasure, horizon: int, target: Element | None = None) -> float | None:
    """Bound on ``sum_{n > horizon} P(Z_n = target)``, which dominates the
    finite-horizon bias of a hitting estimate.

    * isotropic walks on ``F_k``: ``mu^n(x) <= rho^(n-1)`` with ``rho`` the
      spectral radius, giving ``rho^H / (1 - rho)``;
    * lattices with drift: a Chernoff bound at the minimiser of the moment
      generating function;
    * driftless lattices, ``d >= 3``: the local limit approximation
      ``2 c n^{-d/2}`` summed (approximate, not rigorous);
    * anything else: ``None``.
    """
    g = m.group
    if g.is_free:
        if not m.is_isotropic_free():
            return None
        k = g.rank
        alpha = m.laziness()
        rho = alpha + (1 - alpha) * math.sqrt(2 * k - 1) / k
        return rho**horizon / (1 - rho)
    steps = np.array([x.payload for x in m.support], dtype=float)
    probs = np.array([p for _, p in m])
    mean = probs @ steps
    y = np.zeros(g.rank) if target is None else np.asarray(target.payload, float)
    if np.linalg.norm(mean) > 1e-12:
        def log_mgf(lam):
            return math.log(float(probs @ np.exp(steps @ lam)))

        res = optimize.minimize(log_mgf, -mean, method="BFGS")
        lam = res.x
        phi = math.exp(min(res.fun, 0.0))
        if phi >= 1.0:
            return None
        return float(phi ** (horizon + 1) / (1 - phi) * math.exp(-float(lam @ y)))
    d = g.rank
    if d < 3:
        return None
    cov = m.covariance()
    c = (2 * math.pi) ** (-d / 2) / math.sqrt(np.linalg.det(cov))
    return 2 * c * horizon ** (1 - d / 2) / (d / 2 - 1)
