"""Inequality and identity checks with explicit verdicts.

Statistical comparisons use multiples of the combined standard error;
exact identities use a fixed absolute tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..estimate import combined_sigma
from ..measures import ExactPowers, StepMeasure, conditional_entropy, exact_powers
from .estimators import WordMetric

PASS = "pass"
PROXY = "pass-with-proxy-caveat"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"
VERDICTS = (PASS, PROXY, FAIL, INCONCLUSIVE)

Z_SIGMA = 3.0
IDENTITY_TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    lhs: float
    rhs: float
    sigma: float
    verdict: str
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")

    @property
    def passed(self) -> bool:
        return self.verdict in (PASS, PROXY)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "sigma": self.sigma,
            "verdict": self.verdict,
            **({"detail": self.detail} if self.detail else {}),
        }


def value_sigma(x) -> tuple[float, float]:
    """``(value, sigma)`` from an estimate, a pair or a bare number."""
    if isinstance(x, (int, float, np.floating)):
        return float(x), 0.0
    if isinstance(x, tuple):
        return float(x[0]), float(x[1])
    if hasattr(x, "uncertainty"):
        return float(x.value), float(x.uncertainty)
    return float(x.value), float(x.stderr)


def green_speed_le_entropy_check(h, green_speed, *, z: float = Z_SIGMA, name: str = "green_speed_le_entropy") -> CheckResult:
    """One-sided test of ``l_G <= h`` at ``z`` combined standard errors."""
    hv, hs = value_sigma(h)
    lv, ls = value_sigma(green_speed)
    sigma = combined_sigma(hs, ls)
    ok = lv <= hv + z * sigma
    return CheckResult(name, lv, hv, sigma, PASS if ok else FAIL, {"excess": lv - hv})


def overlap_check(a, b, *, z: float = Z_SIGMA, name: str = "overlap") -> CheckResult:
    """Two-sided test of ``a = b`` at ``z`` combined standard errors."""
    av, as_ = value_sigma(a)
    bv, bs = value_sigma(b)
    sigma = combined_sigma(as_, bs)
    ok = abs(av - bv) <= z * sigma
    return CheckResult(name, av, bv, sigma, PASS if ok else FAIL, {"difference": av - bv})


def fundamental_inequality_check(
    h, speed, growth, *, z: float = Z_SIGMA, growth_is_proxy: bool = True, name: str = "fundamental_inequality"
) -> CheckResult:
    """``h <= l * v`` with the slack ``l * v - h`` reported.

    A negative slack inside the tolerance passes with a proxy caveat when
    ``v`` is a finite-radius slope, because the true limsup may be larger.
    When ``h`` is itself indistinguishable from zero and ``l * v >= 0`` the
    inequality holds whatever ``v`` is, so it passes plainly and
    ``detail["trivial"]`` is set.  ``detail["equality"]`` records whether
    the two sides also agree.
    """
    hv, hs = value_sigma(h)
    lv, ls = value_sigma(speed)
    vv, vs = value_sigma(growth)
    rhs = lv * vv
    sigma = combined_sigma(hs, vv * ls, lv * vs)
    slack = rhs - hv
    trivial = hv <= z * hs and rhs >= 0
    if slack >= 0 or trivial:
        verdict = PASS
    elif -slack <= z * sigma:
        verdict = PROXY if growth_is_proxy else PASS
    else:
        verdict = FAIL
    detail = {
        "slack": slack,
        "equality": abs(slack) <= z * sigma,
        "trivial": trivial,
        "growth_is_proxy": growth_is_proxy,
    }
    return CheckResult(name, hv, rhs, sigma, verdict, detail)


def absolute_bound_check(x, bound: float, *, name: str) -> CheckResult:
    """``|x| <= bound`` for degenerate cases where the limit is zero."""
    v, s = value_sigma(x)
    return CheckResult(name, abs(v), bound, s, PASS if abs(v) <= bound else FAIL)


# -- entropy decomposition ------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    label: str
    lower: float  # exclusive, -inf for the ball
    upper: float  # inclusive
    size: int
    mass: float
    conditional_entropy: float
    distance_mass: float  # sum over the cell of mu^n(x) d(e, x)


@dataclass
class AnnulusBound:
    index: int
    mass: float
    markov_bound: float
    moment_bound: float

    @property
    def holds(self) -> bool:
        slack = 1e-12
        return self.mass <= self.markov_bound + slack and self.mass <= self.moment_bound + slack


@dataclass
class DecompositionReport:
    """Split of ``H(mu^n)`` over a ball, a first annulus and dyadic annuli."""

    n: int
    eps: float
    K: float
    speed: float
    first_moment: float
    metric: str
    cells: list[Cell]
    ball_term: float
    first_annulus_term: float
    annuli_sum: float
    H_prime: float
    total: float
    annulus_bounds: list[AnnulusBound]

    @property
    def residual(self) -> float:
        return math.fsum([self.ball_term, self.first_annulus_term, self.annuli_sum, self.H_prime]) - self.total

    @property
    def identity_holds(self) -> bool:
        return abs(self.residual) <= IDENTITY_TOL

    @property
    def bounds_hold(self) -> bool:
        return all(b.holds for b in self.annulus_bounds)

    @property
    def cells_below_log_size(self) -> bool:
        return all(c.conditional_entropy <= math.log(c.size) + 1e-12 for c in self.cells if c.size)

    def terms(self) -> dict:
        return {
            "ball_term": self.ball_term,
            "first_annulus_term": self.first_annulus_term,
            "annuli_sum": self.annuli_sum,
            "H_prime": self.H_prime,
        }


def decomposition_defaults(speed: float, first_moment: float) -> tuple[float, float]:
    """``eps = 0.1 l`` (0.1 when ``l`` is near 0) and ``K = max(2(l + eps), 2m)``."""
    eps = 0.1 * speed if speed > 1e-9 else 0.1
    return eps, max(2 * (speed + eps), 2 * first_moment)


def entropy_decomposition(
    m: StepMeasure,
    n: int,
    eps: float | None = None,
    K: float | None = None,
    metric=None,
    *,
    speed: float | None = None,
    powers: ExactPowers | None = None,
    budget: int | None = None,
) -> DecompositionReport:
    """Exact decomposition of ``H(mu^n)`` along metric balls about ``e``.

    ``metric`` is a :class:`WordMetric` (the default) or :class:`GreenMetric`.  ``speed`` is
    the rate of escape for this metric; by default the finite-``n`` value
    ``E[d(e, Z_n)] / n`` is used.  The ball has radius ``(l + eps) n``, the
    first annulus reaches ``K n`` and annulus ``i >= 1`` covers
    ``(2^{i-1} K n, 2^i K n]``.  The masses of the dyadic annuli are
    compared with the Markov bound from the restricted first moment and
    with ``m / (2^{i-1} K)``.
    """
    g = m.group
    metric = metric or WordMetric(g)
    e = g.identity()
    if powers is not None and hasattr(powers, "power"):
        mun = powers.power(n)
    else:
        kw = {} if budget is None else {"budget": budget}
        mun = exact_powers(m, n, prefer_radial=False, **kw).power(n)
    pts = list(mun.atoms.items())
    mass = np.array([p for _, p in pts])
    if g.is_lattice:
        dist = np.asarray(metric.batch(np.array([x.payload for x, _ in pts])), dtype=float)
    else:
        dist = np.array([metric(e, x) for x, _ in pts], dtype=float)
    first_moment = math.fsum(p * metric(e, x) for x, p in m.atoms.items())
    ell = math.fsum((mass * dist).tolist()) / n if speed is None else float(speed)
    e0, k0 = decomposition_defaults(ell, first_moment)
    eps = e0 if eps is None else float(eps)
    K = k0 if K is None else float(K)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if K <= ell + eps:
        raise ValueError(f"K = {K} must exceed l + eps = {ell + eps}")

    bounds = [(-math.inf, (ell + eps) * n, "ball"), ((ell + eps) * n, K * n, "first_annulus")]
    top = float(dist.max())
    i = 1
    while 2 ** (i - 1) * K * n < top:
        bounds.append((2 ** (i - 1) * K * n, 2**i * K * n, f"annulus_{i}"))
        i += 1

    cells = []
    for lo, hi, label in bounds:
        sel = (dist > lo) & (dist <= hi)
        cm = mass[sel]
        msum = math.fsum(cm.tolist())
        if msum > 0:
            ce = conditional_entropy({j: p for j, p in enumerate(cm)}, range(len(cm)))
        else:
            ce = 0.0
        cells.append(Cell(label, lo, hi, int(sel.sum()), msum, ce, math.fsum((cm * dist[sel]).tolist())))

    def term(c: Cell) -> float:
        return c.mass * c.conditional_entropy

    def plogp(p: float) -> float:
        return -p * math.log(p) if p > 0 else 0.0

    annuli = cells[2:]
    rows = [
        AnnulusBound(j + 1, c.mass, c.distance_mass / c.lower, first_moment / (2**j * K))
        for j, c in enumerate(annuli)
    ]
    return DecompositionReport(
        n=n,
        eps=eps,
        K=K,
        speed=ell,
        first_moment=first_moment,
        metric=metric.name,
        cells=cells,
        ball_term=term(cells[0]),
        first_annulus_term=term(cells[1]),
        annuli_sum=math.fsum(term(c) for c in annuli),
        H_prime=math.fsum(plogp(c.mass) for c in cells),
        total=mun.entropy(),
        annulus_bounds=rows,
    )


def decomposition_checks(rep: DecompositionReport) -> list[CheckResult]:
    """Sum identity and the dyadic annulus bounds as check records."""
    parts = math.fsum(rep.terms().values())
    out = [
        CheckResult(
            "decomposition_identity",
            parts,
            rep.total,
            IDENTITY_TOL,
            PASS if rep.identity_holds else FAIL,
            {"n": rep.n, "metric": rep.metric, "residual": rep.residual, **rep.terms()},
        )
    ]
    worst = max((b.mass - min(b.markov_bound, b.moment_bound) for b in rep.annulus_bounds), default=0.0)
    out.append(
        CheckResult(
            "annulus_mass_bound",
            max((b.mass for b in rep.annulus_bounds), default=0.0),
            min((min(b.markov_bound, b.moment_bound) for b in rep.annulus_bounds), default=0.0),
            0.0,
            PASS if rep.bounds_hold and rep.cells_below_log_size else FAIL,
            {"n": rep.n, "metric": rep.metric, "annuli": len(rep.annulus_bounds), "worst_excess": worst},
        )
    )
    return out
