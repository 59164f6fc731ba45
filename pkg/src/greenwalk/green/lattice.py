"""Numerical Green functions and heat kernels on ``Z^d``.

Two independent routes to ``G(0, x)``:

* :class:`LatticeDPOracle` propagates the walk law exactly on a box for ``N``
  steps, adds the Gaussian local-limit tail ``sum_{k > N} P_k(x)`` in closed
  form, and removes what is left with one Richardson step.
* :class:`LatticeFourierOracle` integrates the continuous-time heat kernel,
  which for axis nearest-neighbour walks factorises into modified Bessel
  functions: ``G(x) = int_0^inf e^{-t(1-p_0)} prod_i (p_i^+/p_i^-)^{x_i/2}
  I_{x_i}(2 t sqrt(p_i^+ p_i^-)) dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from ..estimate import Estimate
from ..groups import Element, GroupSpec
from ..measures import StepMeasure
from .oracles import GreenOracle, MethodUnavailable, RecurrentWalkError

DEFAULT_DP_RADIUS = 48
MAX_GRID = 40_000_000


class LatticeDP:
    """Exact propagation of a finitely supported walk law on ``Z^d``.

    Laws are held as compact cubes centred at the origin whose radius grows
    by the step width on every step, so no mass is ever lost.  ``radius``
    caps the cube size against the memory budget.
    """

    def __init__(self, m: StepMeasure, radius: int):
        g = m.group
        if not g.is_lattice:
            raise MethodUnavailable("lattice DP needs a lattice")
        self.d = g.rank
        self.vectors = [np.asarray(x.payload, dtype=np.int64) for x in m.support]
        self.probs = [p for _, p in m]
        self.width = max(int(np.abs(v).max()) for v in self.vectors)
        self.radius = radius
        size = (2 * (radius + 2 * self.width) + 1) ** self.d
        if size > MAX_GRID:
            raise MethodUnavailable(f"DP grid of {size} cells exceeds the budget of {MAX_GRID}")

    def delta(self) -> np.ndarray:
        return np.ones((1,) * self.d)

    @staticmethod
    def radius_of(p: np.ndarray) -> int:
        return (p.shape[0] - 1) // 2

    def step(self, p: np.ndarray) -> np.ndarray:
        """Law after one more step, on a cube one step width larger."""
        w = self.width
        s_new = self.radius_of(p) + w
        if s_new > self.radius:
            raise MethodUnavailable("walk outgrew the DP budget")
        n = 2 * s_new + 1
        src = np.pad(p, 2 * w)
        out = np.zeros((n,) * self.d)
        for v, prob in zip(self.vectors, self.probs):
            # out(x) += prob * p(x - v)
            sl = tuple(slice(w - int(vi), w - int(vi) + n) for vi in v)
            out += prob * src[sl]
        return out

    @staticmethod
    def embed(p: np.ndarray, radius: int) -> np.ndarray:
        return np.pad(p, radius - LatticeDP.radius_of(p))

    @staticmethod
    def centre(p: np.ndarray, radius: int) -> np.ndarray:
        """The sub-cube of ``p`` of the given radius."""
        s = LatticeDP.radius_of(p)
        return p[(slice(s - radius, s + radius + 1),) * p.ndim]

    def index(self, points: np.ndarray, radius: int) -> tuple[tuple, np.ndarray]:
        """Indices into a cube of ``radius`` plus a mask of points inside it."""
        pts = np.asarray(points, dtype=np.int64).reshape(-1, self.d)
        inside = (np.abs(pts) <= radius).all(axis=1)
        idx = tuple((pts[inside] + radius).T)
        return idx, inside


def _is_bipartite(m: StepMeasure) -> bool:
    return all(sum(x.payload) % 2 == 1 for x in m.support)


def _require_transient_driftless(m: StepMeasure) -> None:
    g = m.group
    if not g.is_lattice:
        raise MethodUnavailable("lattice oracle needs a lattice")
    if np.abs(m.mean()).max() > 1e-14:
        raise MethodUnavailable("lattice DP assumes zero drift; use the Fourier integral")
    if g.rank < 3:
        raise RecurrentWalkError(f"driftless walk on {g.name} is recurrent")


class LatticeDPOracle(GreenOracle):
    """Truncated-sum Green function for driftless walks on ``Z^d``, ``d >= 3``.

    Partial sums ``S_h(x) = sum_{k <= h} P_k(x)`` are kept at ``h = N/4, N/2,
    N``.  Each gets the local-limit tail
    ``c * a^{1-d/2} * gamma(d/2 - 1, a/T)`` with ``a = x' Sigma^{-1} x / 2``,
    where ``T`` is the continuous cut matching the parity of the remaining
    terms.  The residual decays like ``h^{-d/2}``; one Richardson step on the
    two finest levels gives the value, and its distance to the coarser
    Richardson value, plus a far-field term for points beyond the diffusive
    range ``sqrt(N)``, gives the error bound.
    """

    method = "lattice_dp"
    error_model = "two-sided"
    tolerance = 1e-12

    def __init__(self, m: StepMeasure, *, dp_radius: int = DEFAULT_DP_RADIUS):
        _require_transient_driftless(m)
        super().__init__(m)
        n = max(8, 4 * math.ceil(dp_radius / 4))
        self.horizon = n
        self.levels = (n // 4, n // 2, n)
        self.engine = LatticeDP(m, n * max(1, m.max_step()))
        self.d = m.group.rank
        cov = m.covariance()
        self.cov_inv = np.linalg.inv(cov)
        self.gauss_c = (2 * math.pi) ** (-self.d / 2) / math.sqrt(np.linalg.det(cov))
        self.bipartite = _is_bipartite(m)
        self.partial = self._run()
        self._g0 = self._values(np.zeros((1, self.d), dtype=np.int64))
        self._cache: dict[tuple, tuple[float, float]] = {}

    def parameters(self) -> dict:
        return {"dp_radius": self.horizon}

    def _run(self) -> dict[int, np.ndarray]:
        eng = self.engine
        p = eng.delta()
        total = p.copy()
        out = {}
        for k in range(1, self.horizon + 1):
            p = eng.step(p)
            total = eng.embed(total, eng.radius_of(p)) + p
            if k in self.levels:
                out[k] = total
        self.box = eng.radius_of(p)
        return {k: eng.embed(v, self.box) for k, v in out.items()}

    def tail(self, points: np.ndarray, h: int) -> np.ndarray:
        """Local-limit approximation of ``sum_{k > h} P_k(x)``."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.d)
        a = 0.5 * np.einsum("ij,jk,ik->i", pts, self.cov_inv, pts)
        if self.bipartite:
            same = (np.abs(pts).sum(axis=1).astype(np.int64) % 2) == (h % 2)
            cut = np.where(same, h + 1.0, float(h))
        else:
            cut = np.full(len(pts), h + 0.5)
        s = self.d / 2 - 1
        with np.errstate(divide="ignore", invalid="ignore"):
            far = self.gauss_c * a ** (-s) * special.gammainc(s, a / cut) * special.gamma(s)
        near = self.gauss_c * cut ** (-s) / s
        return np.where(a > 0, far, near)

    def _values(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        idx, inside = self.engine.index(pts, self.box)
        p = self.d / 2
        lev = {}
        for h in self.levels:
            v = self.tail(pts, h)
            v[inside] += self.partial[h][idx]
            lev[h] = v
        q = 2.0**p
        n4, n2, n1 = self.levels
        rich = (q * lev[n1] - lev[n2]) / (q - 1)
        coarse = (q * lev[n2] - lev[n4]) / (q - 1)
        r2 = np.einsum("ij,jk,ik->i", pts.astype(float), self.cov_inv, pts.astype(float)) / self.d
        with np.errstate(divide="ignore", invalid="ignore"):
            far = np.where(r2 > 0, rich * np.exp(-n1 / np.maximum(r2, 1e-300)) / np.maximum(r2, 1e-300), 0.0)
        err = np.abs(rich - coarse) + far + 1e-15 * np.abs(rich)
        return rich, err

    def green_batch(self, points) -> tuple[np.ndarray, np.ndarray]:
        """``G(0, x)`` and its error bound for an ``(m, d)`` array of points."""
        pts = np.asarray(points, dtype=np.int64).reshape(-1, self.d)
        return self._values(pts)

    def _green(self, z: Element) -> Estimate:
        key = z.payload
        if key not in self._cache:
            v, e = self._values(np.asarray([key], dtype=np.int64))
            self._cache[key] = (float(v[0]), float(e[0]))
        v, e = self._cache[key]
        return Estimate(v, e, 1, self.method, "deterministic truncation bound")

    def _hit(self, z: Element) -> Estimate:
        return self.hit_via_green(z)

    def distance_batch(self, points) -> np.ndarray:
        v, _ = self.green_batch(points)
        g0 = float(self._g0[0][0])
        return np.maximum(0.0, math.log(g0) - np.log(v))


class LatticeFourierOracle(GreenOracle):
    """Bessel-product quadrature for axis nearest-neighbour walks on ``Z^d``.

    Works with or without drift as long as the walk is transient.  The
    integrand peaks near ``t ~ |x|^2`` (diffusive) or ``t ~ |x| / |drift|``,
    so the range is split at multiples of those scales; the far tail uses
    ``u = t^{-1/2}`` and the Gaussian large-``t`` asymptotic where the scaled
    Bessel functions stop being representable.
    """

    method = "fourier_integral"
    error_model = "two-sided"
    tolerance = 1e-12

    def __init__(self, m: StepMeasure, *, epsabs: float = 1e-14, epsrel: float = 1e-11):
        if not self.applies(m):
            raise MethodUnavailable("Fourier oracle needs an axis nearest-neighbour walk moving both ways on every axis")
        g = m.group
        d = g.rank
        super().__init__(m)
        self.d = d
        self.plus = np.array([m.mass(g.element(tuple(int(i == j) for i in range(d)))) for j in range(d)])
        self.minus = np.array([m.mass(g.element(tuple(-int(i == j) for i in range(d)))) for j in range(d)])
        self.rate = 2 * np.sqrt(self.plus * self.minus)
        self.kappa = float(np.sum((np.sqrt(self.plus) - np.sqrt(self.minus)) ** 2))
        if self.kappa < 1e-15 and d < 3:
            raise RecurrentWalkError(f"driftless walk on {g.name} is recurrent")
        self.drift = float(np.linalg.norm(self.plus - self.minus))
        self.log_ratio = 0.5 * np.log(self.plus / self.minus)
        self.epsabs, self.epsrel = epsabs, epsrel
        self._cache: dict[tuple, Estimate] = {}
        self._g0 = self._green(g.identity())

    @staticmethod
    def applies(m: StepMeasure) -> bool:
        g = m.group
        if not g.is_lattice or not m.is_nearest_neighbour():
            return False
        for j in range(g.rank):
            for sgn in (1, -1):
                if m.mass(g.element(tuple(sgn * int(i == j) for i in range(g.rank)))) <= 0:
                    return False
        return True

    def parameters(self) -> dict:
        return {"epsabs": self.epsabs, "epsrel": self.epsrel}

    def _integrand(self, x: np.ndarray, t: float) -> float:
        if t <= 0:
            return 1.0 if not x.any() else 0.0
        pre = float(self.log_ratio @ x) - self.kappa * t
        if pre < -745.0 or not math.isfinite(t):
            return 0.0
        z = self.rate * t
        n = np.abs(x).astype(float)
        # scipy's ive returns nan for arguments near 1e10; past 1e4 n^2 the
        # expansion ive(n, z) ~ exp(-(n^2 - 1/4) / 2z) / sqrt(2 pi z) is
        # accurate to O(n^4 / z^2)
        asym = z > np.maximum(1e4 * n * n, 1e6)
        log_b = np.empty_like(z)
        log_b[asym] = -0.5 * np.log(2 * np.pi * z[asym]) - (n[asym] ** 2 - 0.25) / (2 * z[asym])
        if (~asym).any():
            vals = special.ive(n[~asym], z[~asym])
            if (vals <= 0).any():
                return 0.0
            log_b[~asym] = np.log(vals)
        return math.exp(pre + float(log_b.sum()))

    def _green(self, z: Element) -> Estimate:
        key = z.payload
        if key in self._cache:
            return self._cache[key]
        x = np.asarray(key, dtype=np.int64)
        f = lambda t: self._integrand(x, t)
        r2 = float(np.sum(x.astype(float) ** 2 / np.maximum(self.rate, 1e-300)))
        scales = {max(r2 / self.d, 1.0)}
        if self.drift > 1e-12:
            scales.add(max(float(np.abs(x).sum()) / self.drift, 1.0))
            scales.add(1.0 / self.kappa)
        pts = {0.0}
        for s in scales:
            pts.update(s * 4.0**j for j in range(-4, 5))
        pts = sorted(pts)
        total = err = 0.0
        for a, b in zip(pts, pts[1:]):
            v, e = integrate.quad(f, a, b, limit=200, epsabs=self.epsabs, epsrel=self.epsrel)
            total += v
            err += e
        top = pts[-1]
        if self.kappa * top < 700:
            def g(u):
                if u <= 0:
                    if self.kappa > 0 or self.d > 3:
                        return 0.0
                    pre = float(self.log_ratio @ x)
                    return 2.0 * math.exp(pre) * float(np.prod((2 * np.pi * self.rate) ** -0.5))
                val = f(1.0 / (u * u))
                return val * 2.0 / u**3 if val > 0 else 0.0

            v, e = integrate.quad(g, 0.0, 1.0 / math.sqrt(top), limit=200, epsabs=self.epsabs, epsrel=self.epsrel)
            total += v
            err += e
        est = Estimate(total, err + 1e-15 * abs(total), 1, self.method, "quadrature error estimate")
        self._cache[key] = est
        return est

    def _hit(self, z: Element) -> Estimate:
        return self.hit_via_green(z)

    def distance_batch(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.int64).reshape(-1, self.d)
        g = self.group
        return np.array([self._distance(g.element(p)) for p in pts])


def first_passage_probability(
    m: StepMeasure,
    target: Element,
    horizon: int = 64,
) -> Estimate:
    """``F(0, y)`` by absorbing DP, independent of any Green-function value.

    Mass reaching ``y`` is removed and counted, giving ``F_h = P(tau_y <= h)``
    at ``h = N/4, N/2, N``.  For driftless walks in ``d >= 3`` the remainder
    decays like ``h^{1 - d/2}``; a Richardson step on the two finest levels
    gives the estimate and its distance to the coarser step the error.
    """
    _require_transient_driftless(m)
    g = m.group
    d = g.rank
    if target == g.identity():
        return Estimate(1.0, 0.0, 1, "lattice_dp")
    n = max(8, 4 * math.ceil(horizon / 4))
    eng = LatticeDP(m, n * max(1, m.max_step()))
    t = np.asarray(target.payload, dtype=np.int64)
    p = eng.delta()
    hit = 0.0
    levels = {}
    for k in range(1, n + 1):
        p = eng.step(p)
        s = eng.radius_of(p)
        if np.abs(t).max() <= s:
            ti = tuple(t + s)
            hit += float(p[ti])
            p[ti] = 0.0
        if k in (n // 4, n // 2, n):
            levels[k] = hit
    q = 2.0 ** (d / 2 - 1)
    rich = (q * levels[n] - levels[n // 2]) / (q - 1)
    coarse = (q * levels[n // 2] - levels[n // 4]) / (q - 1)
    return Estimate(float(rich), float(abs(rich - coarse)), 1, "lattice_dp", "Richardson-extrapolated absorbing DP")


# -- heat kernel -----------------------------------------------------------------


@dataclass
class HeatKernelReport:
    """Return probabilities ``P_k(0)`` with a log-log fit.

    ``C_e`` is the smallest constant with ``P_k(0) <= C_e k^{-D/2}`` over the
    computed range; ``bound_holds`` says whether the off-diagonal maxima
    ``max_x P_k(x)`` respect that same constant.
    """

    rows: list[tuple[int, float]]
    slope: float
    slope_stderr: float
    intercept: float
    fit_range: tuple[int, int]
    C_e: float
    exponent: float
    bound_holds: bool
    worst_ratio: float
    offdiagonal: list[tuple[int, float]] = field(default_factory=list)


def heat_kernel_decay(g: GroupSpec, m: StepMeasure, k_max: int, *, max_grid: int = MAX_GRID) -> HeatKernelReport:
    """Exact return probabilities ``P(Z_k = e)`` for ``k <= k_max`` on ``Z^d``.

    The law is propagated for ``ceil(k_max / 2)`` steps and return
    probabilities are assembled by Chapman-Kolmogorov,
    ``P_{i+j}(0) = sum_x P_i(x) P_j(-x)``, which halves the box needed.
    """
    if not g.is_lattice:
        raise MethodUnavailable("heat kernel DP needs a lattice")
    if m.group != g:
        raise ValueError("measure and group differ")
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    half = (k_max + 1) // 2
    width = m.max_step()
    cells = (2 * (half + 3) * width + 1) ** g.rank
    if cells > max_grid:
        raise MethodUnavailable(f"k_max = {k_max} needs {cells} DP cells, above the budget of {max_grid}")
    eng = LatticeDP(m, (half + 1) * width)
    probs = {0: 1.0}
    offdiag = [(0, 1.0)]
    p_prev = eng.delta()
    for j in range(0, half + 1):
        p_next = eng.step(p_prev)
        # reversing every axis of a centred cube maps x to -x
        flipped = p_prev[(slice(None, None, -1),) * g.rank]
        if 2 * j <= k_max:
            probs[2 * j] = float(np.sum(p_prev * flipped))
        if 2 * j + 1 <= k_max:
            inner = eng.centre(p_next, eng.radius_of(p_prev))
            probs[2 * j + 1] = float(np.sum(inner * flipped))
        if j + 1 <= k_max:
            offdiag.append((j + 1, float(p_next.max())))
        p_prev = p_next
    rows = [(k, probs[k]) for k in range(k_max + 1)]
    D = g.rank
    expo = D / 2
    lo = max(2, k_max // 4)
    ks = np.array([k for k, p in rows if k >= lo and p > 0], dtype=float)
    ps = np.array([p for k, p in rows if k >= lo and p > 0])
    if len(ks) >= 3:
        A = np.vstack([np.log(ks), np.ones_like(ks)]).T
        coef, res, *_ = np.linalg.lstsq(A, np.log(ps), rcond=None)
        resid = np.log(ps) - A @ coef
        dof = max(len(ks) - 2, 1)
        s2 = float(resid @ resid) / dof
        cov = s2 * np.linalg.inv(A.T @ A)
        slope, intercept, slope_se = float(coef[0]), float(coef[1]), math.sqrt(max(cov[0, 0], 0.0))
    else:
        slope = intercept = slope_se = math.nan
    ratios = [p * k**expo for k, p in rows if k >= 1]
    C_e = max(ratios) if ratios else math.nan
    worst = max((p * k**expo / C_e for k, p in offdiag if k >= 1), default=0.0)
    return HeatKernelReport(
        rows=rows,
        slope=slope,
        slope_stderr=slope_se,
        intercept=intercept,
        fit_range=(lo, k_max),
        C_e=C_e,
        exponent=expo,
        bound_holds=bool(worst <= 1.0 + 1e-12),
        worst_ratio=worst,
        offdiagonal=offdiag,
    )
