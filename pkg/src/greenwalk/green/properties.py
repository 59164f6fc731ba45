"""Property sweeps for Green functions and the Green metric.

Each sweep returns plain counts and residuals; turning them into verdicts
is left to the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ..estimate import Estimate, combined_sigma
from ..groups import Element, GroupSpec
from ..measures import StepMeasure
from .oracles import GreenOracle

EstimateFn = Callable[[Element], Estimate]


# -- G(x, y) = G(e, e) F(x, y) --------------------------------------------------


@dataclass
class IdentityReport:
    """Residuals ``|G(x, y) - G(e, e) F(x, y)|`` against their error budget."""

    pairs: int
    max_residual: float
    max_ratio: float  # residual / allowed, worst case
    violations: int
    absolute_tol: float

    @property
    def holds(self) -> bool:
        return self.violations == 0


def green_identity_sweep(
    g: GroupSpec,
    pairs: Iterable[tuple[Element, Element]],
    green: EstimateFn,
    hit: EstimateFn,
    g0: Estimate,
    *,
    z: float = 3.0,
    absolute_tol: float = 1e-9,
) -> IdentityReport:
    """Compare two independent routes to ``G(x, y)`` over ``pairs``.

    ``green(z)`` and ``hit(z)`` are evaluated at the increment
    ``z = x^{-1} y`` (both sides are left-invariant) and cached per
    increment.  They should come from different computations (a
    series against a product formula, or a Fourier integral against an
    absorbing recursion), otherwise the identity holds by construction.
    The allowance is ``absolute_tol`` plus ``z`` times the propagated
    standard errors.
    """
    n = 0
    worst = 0.0
    worst_ratio = 0.0
    bad = 0
    cache: dict = {}
    mul, inv = g.mul_payload, g.inv_payload
    for x, y in pairs:
        key = mul(inv(x.payload), y.payload)
        if key not in cache:
            zz = g.element(key)
            gv = green(zz)
            fv = hit(zz)
            res = abs(gv.value - g0.value * fv.value)
            allowed = absolute_tol + z * combined_sigma(gv.stderr, fv.value * g0.stderr, g0.value * fv.stderr)
            cache[key] = (res, allowed)
        res, allowed = cache[key]
        n += 1
        worst = max(worst, res)
        worst_ratio = max(worst_ratio, res / allowed)
        bad += res > allowed
    return IdentityReport(n, worst, worst_ratio, int(bad), absolute_tol)


# -- metric axioms ---------------------------------------------------------------


@dataclass
class AxiomReport:
    triples: int
    violations: dict[str, int] = field(default_factory=dict)
    worst_excess: dict[str, float] = field(default_factory=dict)

    @property
    def total_violations(self) -> int:
        return sum(self.violations.values())


def random_elements(g: GroupSpec, rng: np.random.Generator, size: int, radius: int) -> list[Element]:
    """Uniform-ish elements: reduced words of random length up to ``radius``,
    or lattice points in the cube of half-side ``radius``."""
    out = []
    if g.is_lattice:
        pts = rng.integers(-radius, radius + 1, size=(size, g.rank))
        return [g.element(tuple(int(c) for c in p)) for p in pts]
    k = g.rank
    for _ in range(size):
        L = int(rng.integers(0, radius + 1))
        word: list[int] = []
        while len(word) < L:
            s = int(rng.integers(1, k + 1)) * (1 if rng.random() < 0.5 else -1)
            if word and word[-1] == -s:
                continue
            word.append(s)
        out.append(g.element(tuple(word)))
    return out


def metric_axiom_sweep(
    o: GreenOracle,
    triples: Sequence[tuple[Element, Element, Element]],
    *,
    tol: float | None = None,
    symmetric: bool | None = None,
) -> AxiomReport:
    """Count violations of the metric axioms for ``d_G`` on random triples.

    Checks ``d(x, x) = 0``, ``d >= 0``, the triangle inequality
    ``d(x, z) <= d(x, y) + d(y, z)``, left invariance ``d(xy, xz) = d(y, z)``
    and, for symmetric measures, ``d(x, y) = d(y, x)``.  ``tol`` is an
    absolute slack; it defaults to the oracle's relative rounding tolerance
    times the sizes involved.
    """
    g = o.group
    sym = o.measure.is_symmetric() if symmetric is None else symmetric
    d = o.green_distance
    names = ["zero_diagonal", "nonnegative", "triangle", "left_invariance"] + (["symmetry"] if sym else [])
    viol = {k: 0 for k in names}
    worst = {k: 0.0 for k in names}

    def note(key: str, excess: float, scale: float):
        slack = tol if tol is not None else o.tolerance * (1.0 + scale)
        worst[key] = max(worst[key], excess)
        if excess > slack:
            viol[key] += 1

    for x, y, z in triples:
        dxy, dyz, dxz = d(x, y), d(y, z), d(x, z)
        note("zero_diagonal", abs(d(x, x)), 0.0)
        note("nonnegative", -min(dxy, dyz, dxz), 0.0)
        note("triangle", dxz - dxy - dyz, dxy + dyz)
        note("left_invariance", abs(d(g.mul(x, y), g.mul(x, z)) - dyz), dyz)
        if sym:
            note("symmetry", abs(dxy - d(y, x)), dxy)
    return AxiomReport(len(triples), viol, worst)


# -- zero set ----------------------------------------------------------------------


def green_zero_set(o: GreenOracle, points: Iterable[Element], *, tol: float = 1e-12) -> list[Element]:
    """Non-identity points ``x`` with ``d_G(e, x) <= tol``, sorted."""
    g = o.group
    e = g.identity()
    return sorted(x for x in points if x != e and o.green_distance(e, x) <= tol)


def line_points(g: GroupSpec, span: int) -> list[Element]:
    return [g.element((i,)) for i in range(-span, span + 1)]


# -- first moment ------------------------------------------------------------------


@dataclass(frozen=True)
class FirstMoment:
    green_moment: float
    entropy: float

    @property
    def holds(self) -> bool:
        return self.green_moment <= self.entropy * (1 + 1e-12)


def green_first_moment(o: GreenOracle, m: StepMeasure | None = None) -> FirstMoment:
    """``E[d_G(e, Z_1)]`` next to ``H(mu)``; the first never exceeds the second."""
    m = m or o.measure
    e = m.group.identity()
    moment = math.fsum(p * o.green_distance(e, x) for x, p in m.atoms.items())
    return FirstMoment(moment, m.entropy())
