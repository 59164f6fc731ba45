"""Green-ball counts and logarithmic volume growth."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..groups import DEFAULT_BALL_CAP, BallTooLarge, GroupSpec
from .oracles import GreenOracle, LineOracle, TreeOracle


@dataclass(frozen=True)
class BallCount:
    """``#{x : d_G(e, x) <= R}`` as an exact value or a sound bracket."""

    radius: float
    lower: float
    upper: float

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    @property
    def value(self) -> float:
        return self.lower if self.exact else 0.5 * (self.lower + self.upper)


def green_ball_count(o: GreenOracle, R: float, search_cap: int = DEFAULT_BALL_CAP, *, rtol: float = 1e-12) -> BallCount:
    """Count the Green ball of radius ``R`` about the identity.

    * free groups with the exact oracle: a pruned breadth-first sweep.  Green
      distances add along geodesics, so the ball is prefix-closed and a word
      is expanded only while it stays inside.  The count is exact.
    * ``Z`` with drift: the ball contains the whole forward ray, so the count
      is infinite.
    * ``Z^d`` oracles: L-infinity shells are swept outward.  A shell is
      counted in the lower bound when its smallest ``G - err`` clears the
      threshold ``G(e,e) e^{-R}`` and in the upper bound when its largest
      ``G + err`` may clear it.
    """
    if R < 0:
        raise ValueError("radius must be nonnegative")
    g = o.group
    if isinstance(o, TreeOracle):
        n = _tree_count(o, R * (1 + rtol) + rtol, search_cap)
        return BallCount(float(R), n, n)
    if isinstance(o, LineOracle):
        if min(o.f_plus, o.f_minus) < 1:
            return BallCount(R, math.inf, math.inf)
    if g.is_lattice and hasattr(o, "green_batch"):
        return _lattice_bracket(o, R, search_cap)
    if g.is_lattice:
        return _lattice_bracket(_BatchAdapter(o), R, search_cap)
    raise NotImplementedError(f"no Green-ball sweep for {type(o).__name__} on {g.name}")


def _tree_count(o: TreeOracle, R: float, cap: int) -> int:
    g = o.group
    w = o.weights
    letters = sorted(w)
    count = 1
    frontier = [(0, 0.0)]  # (last letter, distance)
    while frontier:
        nxt = []
        for last, dist in frontier:
            for s in letters:
                if s == -last:
                    continue
                nd = dist + w[s]
                if nd <= R:
                    nxt.append((s, nd))
        count += len(nxt)
        if count > cap:
            raise BallTooLarge(-1, count, cap)
        frontier = nxt
    return count


class _BatchAdapter:
    def __init__(self, o: GreenOracle):
        self.o = o
        self.group = o.group

    def green_batch(self, pts):
        g = self.group
        ests = [self.o._green(g.element(p)) for p in np.asarray(pts)]
        return np.array([e.value for e in ests]), np.array([e.stderr for e in ests])

    def green_at_identity(self):
        return self.o.green_at_identity()


def _shell(d: int, s: int) -> np.ndarray:
    """Points with L-infinity norm exactly ``s``.

    Face ``i`` has ``|x_i| = s``, earlier coordinates strictly inside and
    later ones unrestricted, which partitions the shell.
    """
    if s == 0:
        return np.zeros((1, d), dtype=np.int64)
    inner = np.arange(-s + 1, s)
    full = np.arange(-s, s + 1)
    faces = []
    for i in range(d):
        for sign in (-s, s):
            axes = [inner] * i + [np.array([sign])] + [full] * (d - 1 - i)
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
            faces.append(grid)
    return np.concatenate(faces)


def _shell_stats(o, d: int, s: int) -> tuple[int, float, float]:
    """``(#shell, min(G - err), max(G + err))`` for shell ``s``, memoised on the oracle."""
    cache = o.__dict__.setdefault("_shell_stats", {})
    if s not in cache:
        pts = _shell(d, s)
        val, err = o.green_batch(pts)
        cache[s] = (len(pts), float((val - err).min()), float((val + err).max()))
    return cache[s]


def _lattice_bracket(o, R: float, cap: int) -> BallCount:
    d = o.group.rank
    g0 = o.green_at_identity()
    hi_thr = (g0.value + g0.stderr) * math.exp(-R)
    lo_thr = (g0.value - g0.stderr) * math.exp(-R)
    lower = upper = 0
    s = 0
    box = getattr(o, "box", 0)
    while True:
        size, smallest, largest = _shell_stats(o, d, s)
        if smallest >= hi_thr:
            lower += size
        possible = largest >= lo_thr
        if possible:
            upper += size
        if upper > cap:
            raise BallTooLarge(s, upper, cap)
        # beyond the DP box values come from a radially decreasing asymptotic
        if not possible and s > box:
            break
        s += 1
    return BallCount(float(R), lower, upper)


@dataclass(frozen=True)
class GrowthEstimate:
    slope: float
    stderr: float
    radii_used: tuple[float, ...]
    caveat: str = "finite-radius slope; the limsup may differ"


def log_volume_growth(counts: Sequence[tuple[float, float]], tail_fraction: float = 0.5) -> GrowthEstimate:
    """Least-squares slope of ``ln V`` against ``R`` over the largest radii."""
    pts = sorted((float(r), float(c)) for r, c in counts)
    if len(pts) < 3:
        raise ValueError("need at least three radii")
    if any(c < 1 or not math.isfinite(c) for _, c in pts):
        raise ValueError("counts must be finite and at least 1")
    if pts[-1][0] == pts[0][0]:
        raise ValueError("radii are all equal")
    k = max(3, math.ceil(len(pts) * tail_fraction))
    use = pts[-k:]
    r = np.array([p[0] for p in use])
    y = np.log([p[1] for p in use])
    A = np.vstack([r, np.ones_like(r)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = len(r) - 2
    se = 0.0
    if dof > 0:
        cov = float(resid @ resid) / dof * np.linalg.inv(A.T @ A)
        se = math.sqrt(max(cov[0, 0], 0.0))
    slope = float(coef[0])
    return GrowthEstimate(slope + 0.0, se, tuple(float(x) for x in r))


def word_growth_counts(g: GroupSpec, radii: Sequence[int]) -> list[tuple[int, int]]:
    """``(r, #B_w(r))`` from the closed-form ball sizes."""
    return [(int(r), g.ball_size(int(r))) for r in radii]
