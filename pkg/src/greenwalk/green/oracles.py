"""Green function and hitting-probability oracles.

An oracle answers ``F(x, y)`` (probability of ever reaching ``y`` from
``x``) and ``G(x, y)`` (expected number of visits) for one step measure.
All walks here are left-invariant, so every query reduces to the increment
``z = x^{-1} y`` and oracles implement the ``_hit(z)`` / ``_green(z)`` hooks.
"""

from __future__ import annotations

import math

import numpy as np

from ..estimate import Estimate, combined_sigma
from ..groups import Element, GroupSpec
from ..measures import StepMeasure
from ..walks import stream
from .hitting import escape_tail_bound, monte_carlo_hitting, monte_carlo_visits


class MethodUnavailable(ValueError):
    """The requested oracle method does not apply to this group or measure."""


class RecurrentWalkError(MethodUnavailable):
    """Green functions diverge for recurrent walks."""


METHODS = ("closed_form", "lattice_dp", "fourier_integral", "monte_carlo")


class GreenOracle:
    """Common query interface.

    Subclasses set ``method`` and ``error_model`` (``"exact"``,
    ``"two-sided"`` or ``"one-sided downward"``) and override the hooks.
    ``tolerance`` is the relative rounding slack callers should allow when
    comparing values that are equal in exact arithmetic.
    """

    method = ""
    error_model = "two-sided"
    tolerance = 1e-12

    def __init__(self, m: StepMeasure):
        self.measure = m
        self.group: GroupSpec = m.group

    @property
    def exact(self) -> bool:
        return self.error_model == "exact"

    def parameters(self) -> dict:
        return {}

    def describe(self) -> dict:
        return {"method": self.method, "error_model": self.error_model, **self.parameters()}

    def _increment(self, x: Element, y: Element) -> Element:
        g = self.group
        return g.mul(g.inv(x), y)

    # -- hooks --------------------------------------------------------------

    def _hit(self, z: Element) -> Estimate:
        raise NotImplementedError

    def _green(self, z: Element) -> Estimate:
        raise NotImplementedError

    def _distance(self, z: Element) -> float:
        f = self._hit(z).value
        if f <= 0:
            return math.inf
        return max(0.0, -math.log(f))

    # -- queries ------------------------------------------------------------

    def hitting_prob(self, x: Element, y: Element) -> Estimate:
        if x == y:
            self.group._check(x)
            return Estimate(1.0, 0.0, 1, self.method)
        return self._hit(self._increment(x, y))

    def green_function(self, x: Element, y: Element) -> Estimate:
        return self._green(self._increment(x, y))

    def green_at_identity(self) -> Estimate:
        return self._green(self.group.identity())

    def green_distance(self, x: Element, y: Element) -> float:
        """Directed Green distance ``-ln F(x, y)``."""
        if x == y:
            self.group._check(x)
            return 0.0
        return self._distance(self._increment(x, y))

    def green_distance_sym(self, x: Element, y: Element) -> float:
        """``max(d_G(x, y), d_G(y, x))``, for diagnostics on asymmetric walks."""
        return max(self.green_distance(x, y), self.green_distance(y, x))

    def hit_via_green(self, z: Element) -> Estimate:
        """``F(e, z) = G(e, z) / G(e, e)`` with first-order error propagation."""
        gz = self._green(z)
        g0 = self.green_at_identity()
        v = gz.value / g0.value
        err = abs(v) * combined_sigma(gz.stderr / gz.value if gz.value else 0.0, g0.stderr / g0.value)
        return Estimate(min(v, 1.0), err, 1, self.method)


# -- free groups -------------------------------------------------------------


class TreeOracle(GreenOracle):
    """Exact oracle for nearest-neighbour (possibly lazy) walks on ``F_k``.

    On the Cayley tree every path from ``e`` to ``x`` crosses the geodesic
    edges in order, so ``F(e, x)`` is the product of one-letter first-passage
    probabilities ``F_s = F(e, s)``.  These solve
    ``F_s = mu(s) + F_s * sum_{t != s} mu(t) F_{t^{-1}}`` (the identity counts
    as ``t`` with ``F_e = 1``); the minimal solution is reached by monotone
    iteration from zero.  For isotropic walks the solution is ``1/(2k-1)``.
    """

    method = "closed_form"
    error_model = "exact"

    def __init__(self, m: StepMeasure, *, tol: float = 1e-16, max_iter: int = 1_000_000):
        g = m.group
        if not g.is_free or not m.is_nearest_neighbour():
            raise MethodUnavailable("closed form needs a nearest-neighbour measure on a free group")
        super().__init__(m)
        letters = [s.payload[0] for s in g.generators]
        mu = {s: m.mass(g.element((s,))) for s in letters}
        if min(mu.values()) <= 0:
            raise MethodUnavailable("every generator needs positive mass for an irreducible tree walk")
        self.isotropic = m.is_isotropic_free()
        alpha = m.laziness()
        k = g.rank
        if self.isotropic:
            q = 2 * k - 1
            self.first_passage = {s: 1.0 / q for s in letters}
            self.weights = {s: math.log(q) for s in letters}
            self._q = q
            self._g0 = q / ((1.0 - alpha) * (2 * k - 2))
        else:
            F = {s: 0.0 for s in letters}
            for _ in range(max_iter):
                new = {
                    s: mu[s] + F[s] * (alpha + sum(mu[t] * F[-t] for t in letters if t != s))
                    for s in letters
                }
                delta = max(abs(new[s] - F[s]) for s in letters)
                F = new
                if delta <= tol:
                    break
            self.first_passage = F
            self.weights = {s: -math.log(F[s]) for s in letters}
            self._q = None
            u = alpha + sum(mu[t] * F[-t] for t in letters)
            self._g0 = 1.0 / (1.0 - u)

    def _hit(self, z: Element) -> Estimate:
        if self._q is not None:
            v = float(self._q) ** -len(z.payload)
        else:
            v = math.prod(self.first_passage[s] for s in z.payload)
        return Estimate(v, 0.0, 1, self.method)

    def _distance(self, z: Element) -> float:
        if self._q is not None:
            return len(z.payload) * self.weights[1]
        return math.fsum(self.weights[s] for s in z.payload)

    def _green(self, z: Element) -> Estimate:
        return Estimate(self._g0 * self._hit(z).value, 0.0, 1, self.method)

    def return_series(self, z: Element, tol: float = 1e-14) -> Estimate:
        """``G(e, z) = sum_n mu^n(z)`` summed directly from the radial law.

        Independent of the first-passage algebra, so it cross-checks the
        product formula.  Isotropic walks only.
        """
        if not self.isotropic:
            raise MethodUnavailable("series route needs an isotropic walk")
        k = self.group.rank
        alpha = self.measure.laziness()
        move = 1.0 - alpha
        up, down = move * (2 * k - 1) / (2 * k), move / (2 * k)
        rho = alpha + move * 2 * math.sqrt(2 * k - 1) / (2 * k)
        r = len(z.payload)
        log_sphere = 0.0 if r == 0 else math.log(2 * k) + (r - 1) * math.log(2 * k - 1)
        scale = math.exp(-log_sphere)
        size = 64
        p = np.zeros(size)
        p[0] = 1.0
        total = p[r] * scale if r < size else 0.0
        n = 0
        while True:
            n += 1
            if n + 2 >= size:
                p = np.concatenate([p, np.zeros(size)])
                size *= 2
            new = alpha * p
            new[1] += move * p[0]
            new[2:] += up * p[1:-1]
            new[1:-1] += down * p[2:]
            new[0] += down * p[1]
            p = new
            term = p[r] * scale
            total += term
            tail = term * rho / (1.0 - rho)
            if n > r + 2 and term > 0 and tail < tol:
                return Estimate(float(total), float(tail), n, "series", "truncated series, geometric tail bound")


# -- the integer line --------------------------------------------------------


class LineOracle(GreenOracle):
    """Exact oracle for nearest-neighbour (possibly lazy) walks on ``Z``.

    With ``p = mu(+1)`` and ``q = mu(-1)``, gambler's ruin gives
    ``F(0, +1) = min(1, p/q)``, ``F(0, -1) = min(1, q/p)`` and
    ``G(0, 0) = 1 / |p - q|``.
    """

    method = "closed_form"
    error_model = "exact"

    def __init__(self, m: StepMeasure):
        g = m.group
        if not (g.is_lattice and g.rank == 1 and m.is_nearest_neighbour()):
            raise MethodUnavailable("closed form on Z needs a nearest-neighbour measure")
        p = m.mass(g.element((1,)))
        q = m.mass(g.element((-1,)))
        if p == q:
            raise RecurrentWalkError("driftless walk on Z is recurrent")
        super().__init__(m)
        self.p, self.q = p, q
        self.f_plus = 1.0 if p >= q else p / q
        self.f_minus = 1.0 if q >= p else q / p
        self._g0 = 1.0 / abs(p - q)

    def _hit(self, z: Element) -> Estimate:
        c = z.payload[0]
        v = self.f_plus**c if c >= 0 else self.f_minus ** (-c)
        return Estimate(v, 0.0, 1, self.method)

    def _distance(self, z: Element) -> float:
        c = z.payload[0]
        f = self.f_plus if c >= 0 else self.f_minus
        if f <= 0:
            return math.inf if c else 0.0
        return abs(c) * -math.log(f) + 0.0

    def _green(self, z: Element) -> Estimate:
        return Estimate(self._g0 * self._hit(z).value, 0.0, 1, self.method)

    def distance_batch(self, points: np.ndarray) -> np.ndarray:
        c = np.asarray(points).reshape(len(points), -1)[:, 0].astype(float)
        wp = -math.log(self.f_plus) if self.f_plus > 0 else math.inf
        wm = -math.log(self.f_minus) if self.f_minus > 0 else math.inf
        return np.where(c >= 0, c * wp, -c * wm) + 0.0


# -- Monte Carlo ---------------------------------------------------------------


class MonteCarloOracle(GreenOracle):
    """Finite-horizon simulation; available for every measure.

    Estimates of ``F`` and ``G`` count events up to ``horizon`` only, so
    they are biased downward; streams are keyed by the queried increment.
    """

    method = "monte_carlo"
    error_model = "one-sided downward"

    def __init__(self, m: StepMeasure, *, trials: int = 10_000, horizon: int | None = None, seed: int = 0):
        super().__init__(m)
        self.trials = trials
        self.horizon = horizon if horizon is not None else default_horizon(m, trials)
        self.seed = seed

    def parameters(self) -> dict:
        return {"trials": self.trials, "horizon": self.horizon, "seed": self.seed}

    def _rng(self, tag: str, z: Element) -> np.random.Generator:
        return stream(self.seed, tag, str(z))

    def _hit(self, z: Element) -> Estimate:
        e = self.group.identity()
        return monte_carlo_hitting(self.group, self.measure, e, z, self.trials, self.horizon, self._rng("hit", z))

    def _green(self, z: Element) -> Estimate:
        return monte_carlo_visits(self.measure, z, self.trials, self.horizon, self._rng("visits", z))


def default_horizon(m: StepMeasure, trials: int, cap: int = 100_000) -> int:
    """Smallest doubling horizon whose escape-tail bound is under a tenth of
    the binomial standard error at ``F = 1/2``; ``cap`` when none qualifies
    or no bound is available."""
    target = 0.1 * math.sqrt(0.25 / max(trials, 1))
    h = 50
    while h < cap:
        b = escape_tail_bound(m, h)
        if b is not None and b < target:
            return h
        h *= 2
    return cap


# -- selection -----------------------------------------------------------------


def make_oracle(m: StepMeasure, method: str | None = None, **params) -> GreenOracle:
    """Build the oracle named by ``method``, or the most exact one available."""
    from .lattice import LatticeDPOracle, LatticeFourierOracle

    g = m.group
    auto = method is None
    if method is None:
        if g.is_free and m.is_nearest_neighbour():
            method = "closed_form"
        elif g.is_lattice and g.rank == 1 and m.is_nearest_neighbour():
            method = "closed_form"
        elif g.is_lattice and g.rank >= 3 and np.allclose(m.mean(), 0.0, atol=1e-14):
            method = "lattice_dp"
        elif g.is_lattice and LatticeFourierOracle.applies(m):
            method = "fourier_integral"
        else:
            method = "monte_carlo"
    if method == "closed_form":
        if g.is_free:
            return TreeOracle(m, **params)
        return LineOracle(m, **params)
    if method == "lattice_dp":
        try:
            return LatticeDPOracle(m, **params)
        except MethodUnavailable:
            # the DP box grows like radius^d; in high dimension fall back to quadrature
            if not (auto and LatticeFourierOracle.applies(m)):
                raise
            return LatticeFourierOracle(m)
    if method == "fourier_integral":
        return LatticeFourierOracle(m, **params)
    if method == "monte_carlo":
        return MonteCarloOracle(m, **params)
    raise MethodUnavailable(f"unknown oracle method {method!r}; choose from {', '.join(METHODS)}")


# Module-level aliases mirroring the operation names.

def hitting_prob(o: GreenOracle, x: Element, y: Element) -> Estimate:
    return o.hitting_prob(x, y)


def green_function(o: GreenOracle, x: Element, y: Element) -> Estimate:
    return o.green_function(x, y)


def green_distance(o: GreenOracle, x: Element, y: Element) -> float:
    return o.green_distance(x, y)
