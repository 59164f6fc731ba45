"""Scenario execution: estimators first, then checks, then reports on disk."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from ..asymptotics.checks import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    CheckResult,
    decomposition_checks,
    entropy_decomposition,
    fundamental_inequality_check,
)
from ..asymptotics.estimators import (
    GreenMetric,
    LimitEstimate,
    WordMetric,
    entropy_estimate_convolution,
    entropy_estimate_pointwise,
    speed_estimate,
)
from ..asymptotics.report import speed_entropy_report
from ..groups import BallTooLarge
from ..green.growth import green_ball_count, log_volume_growth, word_growth_counts
from ..green.lattice import LatticeFourierOracle, heat_kernel_decay
from ..green.oracles import GreenOracle, LineOracle, MethodUnavailable, TreeOracle, make_oracle
from ..green.properties import (
    green_first_moment,
    green_identity_sweep,
    green_zero_set,
    line_points,
    metric_axiom_sweep,
    random_elements,
)
from ..martin import StabilizationFailure, boundary_integral, maximal_inequality_check
from ..measures import BudgetExceeded, exact_powers
from ..walks import SEED_DERIVATION, stream
from .config import ScenarioConfig

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_INCONCLUSIVE = 3


class StepBudgetExceeded(RuntimeError):
    """A requested walk length is above the per-trajectory step budget."""


@dataclass
class Outcome:
    """What one estimator produced, in a form every check can read."""

    name: str
    kind: str
    status: str  # "ok", "unavailable" or "budget"
    value: float = math.nan
    stderr: float = 0.0
    uncertainty: float = 0.0
    n_samples: int = 0
    method: str = ""
    notes: list[str] = field(default_factory=list)
    rows: list[tuple[str, float, float, float]] = field(default_factory=list)
    metric: str | None = None
    roles: tuple[str, ...] = ()
    budget_limited: bool = False
    payload: object = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def sigma(self) -> tuple[float, float]:
        return (self.value, self.uncertainty)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "kind": self.kind,
            "status": self.status,
            "value": self.value,
            "stderr": self.stderr,
            "uncertainty": self.uncertainty,
            "n_samples": self.n_samples,
            "method": self.method,
        }
        if self.metric:
            out["metric"] = self.metric
        if self.roles:
            out["roles"] = list(self.roles)
        if self.budget_limited:
            out["budget_limited"] = True
        if self.notes:
            out["notes"] = list(self.notes)
        return out


class Context:
    """Shared, lazily built state for one scenario run."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.group = cfg.group
        self.measure = cfg.measure
        self._lock = threading.Lock()
        self._oracle: GreenOracle | None = None
        self._powers = None
        self.outcomes: dict[str, Outcome] = {}

    @property
    def oracle(self) -> GreenOracle:
        with self._lock:
            if self._oracle is None:
                params = {k: v for k, v in self.cfg.oracle.items() if k != "method"}
                self._oracle = make_oracle(self.measure, self.cfg.oracle.get("method"), **params)
            return self._oracle

    def powers(self, n: int):
        """Exact powers up to ``n``, shared between estimators."""
        with self._lock:
            if self._powers is None or self._powers.n_max < n and not getattr(self._powers, "exhausted", None):
                self._powers = exact_powers(self.measure, n, budget=self.cfg.budgets["atoms"])
            return self._powers

    def rng(self, *key) -> np.random.Generator:
        return stream(self.cfg.seed, *key)

    def metric(self, name: str):
        return GreenMetric(self.oracle) if name == "green" else WordMetric(self.group)

    def steps_ok(self, steps: int) -> None:
        if steps > self.cfg.budgets["steps"]:
            raise StepBudgetExceeded(f"{steps} steps requested, budget is {self.cfg.budgets['steps']}")

    def with_role(self, role: str) -> list[Outcome]:
        return [o for o in self.outcomes.values() if o.ok and role in o.roles]

    def of_kind(self, kind: str) -> list[Outcome]:
        return [o for o in self.outcomes.values() if o.kind == kind]


# -- estimators ------------------------------------------------------------------


def _from_limit(name: str, kind: str, est: LimitEstimate, roles, metric=None) -> Outcome:
    return Outcome(
        name=name,
        kind=kind,
        status="ok",
        value=est.value,
        stderr=est.stderr,
        uncertainty=est.uncertainty,
        n_samples=est.n_samples,
        method=est.extrapolation_method,
        notes=list(est.notes),
        rows=[(lad, float(n), v, s) for lad, n, v, s in est.ladder_rows()],
        metric=metric,
        roles=tuple(roles),
        payload=est,
    )


def _est_speed(ctx: Context, name: str, p: dict) -> Outcome:
    ns = p["n"] if isinstance(p["n"], list) else [p["n"]]
    ctx.steps_ok(max(ns))
    est = speed_estimate(ctx.group, ctx.measure, ctx.metric(p["metric"]), ns, p["trials"], ctx.rng("estimator", name), name=name)
    role = "green_speed" if p["metric"] == "green" else "speed_word"
    return _from_limit(name, "speed", est, [role, f"speed_{p['metric']}"], p["metric"])


def _est_entropy_convolution(ctx: Context, name: str, p: dict) -> Outcome:
    pw = ctx.powers(p["n_max"])
    if pw.n_max < 2:
        raise BudgetExceeded(-1, ctx.cfg.budgets["atoms"])
    est = entropy_estimate_convolution(ctx.measure, p["n_max"], powers=pw, order=p["order"], name=name)
    out = _from_limit(name, "entropy_convolution", est, ["entropy"])
    out.budget_limited = pw.n_max < p["n_max"]
    return out


def _est_entropy_pointwise(ctx: Context, name: str, p: dict) -> Outcome:
    pw = ctx.powers(p["n"])
    if pw.n_max < p["n"]:
        raise BudgetExceeded(-1, ctx.cfg.budgets["atoms"])
    est = entropy_estimate_pointwise(
        ctx.group, ctx.measure, p["n"], p["trials"], ctx.rng("estimator", name), powers=pw, order=p["order"], name=name
    )
    return _from_limit(name, "entropy_pointwise", est, ["entropy"])


def _est_boundary_integral(ctx: Context, name: str, p: dict) -> Outcome:
    o = ctx.oracle
    if not isinstance(o, TreeOracle):
        raise MethodUnavailable("the boundary integral needs the exact tree oracle")
    res = boundary_integral(
        ctx.group,
        ctx.measure,
        p["samples"],
        ctx.rng("estimator", name),
        oracle=o,
        window=p["window"],
        max_steps=ctx.cfg.budgets["steps"],
    )
    e = res.estimate
    notes = [e.bias_note] if e.bias_note else []
    return Outcome(
        name, "boundary_integral", "ok", e.value, e.stderr, e.stderr, e.n_samples, "boundary Monte Carlo", notes,
        roles=("green_speed", "entropy"), payload=res,
    )


def _default_radii(ctx: Context, metric: str) -> list[float]:
    g = ctx.group
    if metric == "word":
        return [float(r) for r in range(1, 21)]
    o = ctx.oracle
    if isinstance(o, TreeOracle):
        step = min(o.weights.values())
        return [step * k for k in range(1, 9)]
    return [0.5 * k for k in range(2, 12)]


def _est_volume_growth(ctx: Context, name: str, p: dict) -> Outcome:
    metric = p["metric"]
    radii = p["radii"] or _default_radii(ctx, metric)
    rows = []
    if metric == "word":
        counts = word_growth_counts(ctx.group, [int(r) for r in radii])
        fit = log_volume_growth(counts, p["tail_fraction"])
        rows = [(name, float(r), float(c), 0.0) for r, c in counts]
        return Outcome(name, "volume_growth", "ok", fit.slope, fit.stderr, fit.stderr, len(counts),
                       "least-squares slope of ln V(R)", [fit.caveat], rows, metric,
                       ("growth_word", "growth"), payload={"slope": fit.slope})
    o = ctx.oracle
    if isinstance(o, LineOracle) and min(o.f_plus, o.f_minus) < 1:
        raise MethodUnavailable("Green balls are infinite for a walk with drift on Z")
    counts = [green_ball_count(o, float(r)) for r in radii]
    if any(not math.isfinite(c.upper) for c in counts):
        raise MethodUnavailable("Green balls are infinite")
    lo = log_volume_growth([(c.radius, max(c.lower, 1)) for c in counts], p["tail_fraction"])
    hi = log_volume_growth([(c.radius, c.upper) for c in counts], p["tail_fraction"])
    slopes = (lo.slope, hi.slope)
    value = 0.5 * (lo.slope + hi.slope)
    spread = 0.5 * abs(hi.slope - lo.slope)
    se = max(lo.stderr, hi.stderr)
    rows = [(f"{name}:lower", c.radius, float(c.lower), 0.0) for c in counts]
    rows += [(f"{name}:upper", c.radius, float(c.upper), 0.0) for c in counts]
    method = "least-squares slope of ln V(R)" + ("" if all(c.exact for c in counts) else ", bracketed counts")
    return Outcome(name, "volume_growth", "ok", value, se, se + spread, len(counts), method, [lo.caveat], rows, metric,
                   ("growth_green", "growth"), payload={"slope_lower": min(slopes), "slope_upper": max(slopes)})


def _est_decomposition(ctx: Context, name: str, p: dict) -> Outcome:
    ns = p["n"] if isinstance(p["n"], list) else [p["n"]]
    pw = ctx.powers(max(ns))
    if pw.n_max < max(ns):
        raise BudgetExceeded(-1, ctx.cfg.budgets["atoms"])
    metric = ctx.metric(p["metric"])
    enum = pw if hasattr(pw, "power") else None
    reps = [
        entropy_decomposition(
            ctx.measure, n, p["eps"], p["K"], metric, speed=p["speed"], powers=enum, budget=ctx.cfg.budgets["atoms"]
        )
        for n in ns
    ]
    worst = max(abs(r.residual) for r in reps)
    rows = [(f"{name}:residual", float(r.n), r.residual, 0.0) for r in reps]
    rows += [(f"{name}:entropy", float(r.n), r.total, 0.0) for r in reps]
    return Outcome(name, "decomposition", "ok", worst, 0.0, 0.0, len(reps), "exact partition of mu^n",
                   rows=rows, metric=p["metric"], payload=reps)


def _est_maximal(ctx: Context, name: str, p: dict) -> Outcome:
    o = ctx.oracle
    if not isinstance(o, TreeOracle):
        raise MethodUnavailable("the maximal inequality needs the exact tree oracle")
    ctx.steps_ok(p["horizon"])
    rep = maximal_inequality_check(ctx.group, ctx.measure, p["a"], p["trajectories"], p["horizon"], ctx.rng("estimator", name), oracle=o)
    rows = [(name, r.a, r.empirical, r.stderr) for r in rep.rows]
    worst = max(r.empirical - r.bound for r in rep.rows)
    return Outcome(name, "maximal_inequality", "ok", worst, 0.0, 0.0, rep.trajectories,
                   "finite-horizon supremum of the Martin kernel", [rep.note], rows, payload=rep)


def _est_heat_kernel(ctx: Context, name: str, p: dict) -> Outcome:
    if not ctx.group.is_lattice:
        raise MethodUnavailable("heat kernel DP needs a lattice")
    rep = heat_kernel_decay(ctx.group, ctx.measure, p["k_max"])
    rows = [(name, float(k), v, 0.0) for k, v in rep.rows]
    return Outcome(name, "heat_kernel", "ok", rep.slope, rep.slope_stderr, rep.slope_stderr, len(rep.rows),
                   f"log-log fit over k in [{rep.fit_range[0]}, {rep.fit_range[1]}]", rows=rows, payload=rep)


ESTIMATORS = {
    "speed": _est_speed,
    "entropy_convolution": _est_entropy_convolution,
    "entropy_pointwise": _est_entropy_pointwise,
    "boundary_integral": _est_boundary_integral,
    "volume_growth": _est_volume_growth,
    "decomposition": _est_decomposition,
    "maximal_inequality": _est_maximal,
    "heat_kernel": _est_heat_kernel,
}


def run_estimator(ctx: Context, spec) -> Outcome:
    try:
        return ESTIMATORS[spec.kind](ctx, spec.name, spec.params)
    except (BudgetExceeded, StepBudgetExceeded, BallTooLarge, StabilizationFailure) as exc:
        return Outcome(spec.name, spec.kind, "budget", notes=[f"budget exhausted: {exc}"])
    except MethodUnavailable as exc:
        return Outcome(spec.name, spec.kind, "unavailable", notes=[str(exc)])


# -- checks ------------------------------------------------------------------------


def _inconclusive(name: str, why: str) -> list[CheckResult]:
    return [CheckResult(name, math.nan, math.nan, math.nan, INCONCLUSIVE, {"reason": why})]


def _downgrade(results: list[CheckResult], limited: bool) -> list[CheckResult]:
    """A failure resting on a budget-shortened ladder is reported as inconclusive."""
    if limited:
        for r in results:
            if r.verdict == FAIL:
                r.verdict = INCONCLUSIVE
                r.detail["reason"] = "budget-limited input"
    return results


def _speed_entropy(ctx: Context, name: str, p: dict) -> list[CheckResult]:
    ls = ctx.with_role("green_speed")
    hs = ctx.with_role("entropy")
    if not ls or not hs:
        return _inconclusive(name, "needs at least one Green-speed and one entropy estimator")
    rep = speed_entropy_report({o.name: o.sigma for o in ls}, {o.name: o.sigma for o in hs}, absolute_bound=p.get("absolute_bound"))
    out = [c for c in rep.checks if c.name == name]
    return _downgrade(out, any(o.budget_limited for o in ls + hs))


def _fundamental(ctx: Context, name: str, p: dict) -> list[CheckResult]:
    hs = ctx.with_role("entropy")
    out = []
    for metric in p["metrics"]:
        speeds = ctx.with_role(f"speed_{metric}")
        growths = ctx.with_role(f"growth_{metric}")
        if not hs or not speeds or not growths:
            out += _inconclusive(name, f"{metric} metric needs entropy, speed and growth estimators")
            continue
        for h, l, v in itertools.product(hs, speeds, growths):
            proxy = metric == "green" or not ctx.group.is_free
            c = fundamental_inequality_check(h.sigma, l.sigma, v.sigma, growth_is_proxy=proxy, name=name)
            c.detail.update({"metric": metric, "entropy_estimator": h.name, "speed_estimator": l.name, "growth_estimator": v.name})
            out += _downgrade([c], h.budget_limited)
    return out


def _decomposition(ctx: Context, name: str, p: dict) -> list[CheckResult]:
    outs = [o for o in ctx.of_kind("decomposition") if o.ok]
    if not outs:
        return _inconclusive(name, "needs a decomposition estimator")
    res = []
    for o in outs:
        for rep in o.payload:
            res += [c for c in decomposition_checks(rep) if c.name == name]
    return res


def _maximal(ctx: Context, name: str, p: dict) -> list[CheckResult]:
    outs = [o for o in ctx.of_kind("maximal_inequality") if o.ok]
    if not outs:
        return _inconclusive(name, "needs a maximal_inequality estimator")
    res = []
    for o in outs:
        rep = o.payload
        for r in rep.rows:
            res.append(CheckResult(name, r.empirical, r.bound, r.stderr, PASS if r.verdict == "pass" else FAIL,
                                   {"a": r.a, "horizon": rep.horizon, "trajectories": rep.trajectories}))
    return res


def _series_green(o: TreeOracle):
    @lru_cache(maxsize=None)
    def by_length(r: int):
        return o.return_series(o.group.element((1,) * r))

    return lambda z: by_length(len(z.payload))


def _proportionality(ctx: Context, name: str, p: dict) -> list[CheckResult]:
    g, m, o = ctx.group, ctx.measure, ctx.oracle
    if isinstance(o, TreeOracle) and o.isotropic:
        ball = sorted(g.ball_enumerate(p["radius"]))
        pairs = itertools.product(ball, ball)
        green, hit, g0 = _series_green(o), o._hit, o.green_at_identity()
        route = "radial return series against the first-passage product"
        scope = {"pairs": "all", "radius": p["radius"]}
    elif g.is_lattice and LatticeFourierOracle.applies(m) and not isinstance(o, LatticeFourierOracle):
        f = LatticeFourierOracle(m)
        pts = random_elements(g, ctx.rng("check", name), 2 * p["pairs"], p["box"])
        pairs = list(zip(pts[0::2], pts[1::2]))
        if o.exact:
            # exact hitting probabilities against the Fourier Green function
            green, hit, g0 = f._green, o._hit, f.green_at_identity()
        else:
            green, hit, g0 = o._green, f.hit_via_green, o.green_at_identity()
        route = f"{o.method} against fourier_integral"
        scope = {"pairs": len(pairs), "box": p["box"]}
    else:
        return _inconclusive(name, "no independent second route to G for this walk")
    rep = green_identity_sweep(g, pairs, green, hit, g0)
    return [CheckResult(name, rep.max_residual, rep.max_residual / rep.max_ratio if rep.max_ratio else rep.absolute_tol,
                        0.0, PASS if rep.holds else FAIL,
                        {"route": route, "violations": rep.violations, "checked": rep.pairs, **scope})]


def _axiom_oracle(ctx: Context) -> tuple[GreenOracle, float | None]:
    o = ctx.oracle
    if o.exact:
        return o, None
    if ctx.group.is_lattice and LatticeFourierOracle.applies(ctx.measure):
        return LatticeFourierOracle(ctx.measure), 1e-9
    return o, 1e-6


def _axioms(ctx: Context, name: str, p: dict) -> list[CheckResult]:
    o, tol = _axiom_oracle(ctx)
    el = random_elements(ctx.group, ctx.rng("check", name), 3 * p["triples"], p["radius"])
    rep = metric_axiom_sweep(o, list(zip(el[0::3], el[1::3], el[2::3])), tol=tol)
    return [CheckResult(name, float(rep.total_violations), 0.0, 0.0, PASS if rep.total_violations == 0 else FAIL,
                        {"oracle": o.method, "triples": rep.triples, "violations": rep.violations,
                         "worst_excess": rep.worst_excess})]


def _zero_set(ctx: Context, name: str, p: dict) -> list[CheckResult]:
    g, o = ctx.group, ctx.oracle
    if g.is_lattice and g.rank == 1:
        pts = line_points(g, p["span"])
        drift = float(ctx.measure.mean()[0])
        sign = 0 if abs(drift) < 1e-14 else (1 if drift > 0 else -1)
        expected = sorted(g.element((sign * i,)) for i in range(1, p["span"] + 1)) if sign else []
        scope = {"span": p["span"]}
    else:
        pts = g.ball_enumerate(p["radius"])
        expected = []
        scope = {"radius": p["radius"]}
    found = green_zero_set(o, pts)
    mismatch = len(set(found) ^ set(expected))
    return [CheckResult(name, float(len(found)), float(len(expected)), 0.0, PASS if mismatch == 0 else FAIL,
                        {"zero_set": [g.format(x) for x in found][:50], "mismatches": mismatch, **scope})]


def _first_moment(ctx: Context, name: str, p: dict) -> list[CheckResult]:
    fm = green_first_moment(ctx.oracle)
    return [CheckResult(name, fm.green_moment, fm.entropy, 0.0, PASS if fm.holds else FAIL)]


def _growth_bound(ctx: Context, name: str, p: dict) -> list[CheckResult]:
    outs = ctx.with_role("growth_green")
    if not outs:
        return _inconclusive(name, "needs a Green-metric volume_growth estimator")
    res = []
    lower, upper = p["lower"], p["upper"]
    for o in outs:
        lo, hi = o.payload["slope_lower"], o.payload["slope_upper"]
        ok = (lower is None or min(lo, hi) >= lower) and (upper is None or max(lo, hi) <= upper)
        res.append(CheckResult(name, o.value, upper if upper is not None else math.inf, o.uncertainty, PASS if ok else FAIL,
                               {"slope_lower": lo, "slope_upper": hi, "lower": lower, "upper": upper}))
    return res


def _heat_kernel(ctx: Context, name: str, p: dict) -> list[CheckResult]:
    outs = [o for o in ctx.of_kind("heat_kernel") if o.ok]
    if not outs:
        return _inconclusive(name, "needs a heat_kernel estimator")
    expected = p["exponent"] if p["exponent"] is not None else -ctx.group.growth_degree / 2
    res = []
    for o in outs:
        rep = o.payload
        ok = abs(rep.slope - expected) <= p["tolerance"] and rep.bound_holds
        res.append(CheckResult(name, rep.slope, expected, rep.slope_stderr, PASS if ok else FAIL,
                               {"C_e": rep.C_e, "bound_holds": rep.bound_holds, "worst_ratio": rep.worst_ratio,
                                "tolerance": p["tolerance"]}))
    return res


CHECKS = {
    "entropy_equals_green_speed": _speed_entropy,
    "green_speed_le_entropy": _speed_entropy,
    "fundamental_inequality": _fundamental,
    "decomposition_identity": _decomposition,
    "annulus_mass_bound": _decomposition,
    "martin_maximal_inequality": _maximal,
    "green_hitting_proportionality": _proportionality,
    "green_metric_axioms": _axioms,
    "green_zero_set": _zero_set,
    "green_first_moment_le_entropy": _first_moment,
    "green_growth_bound": _growth_bound,
    "heat_kernel_decay": _heat_kernel,
}


def run_check(ctx: Context, spec) -> list[CheckResult]:
    try:
        return CHECKS[spec.name](ctx, spec.name, spec.params)
    except (BudgetExceeded, StepBudgetExceeded, BallTooLarge) as exc:
        return _inconclusive(spec.name, f"budget exhausted: {exc}")
    except MethodUnavailable as exc:
        return _inconclusive(spec.name, str(exc))


# -- orchestration -------------------------------------------------------------------


@dataclass
class RunResult:
    config: ScenarioConfig
    outcomes: list[Outcome]
    checks: list[CheckResult]
    oracle: dict

    @property
    def verdict(self) -> str:
        verdicts = {c.verdict for c in self.checks}
        if FAIL in verdicts:
            return FAIL
        if INCONCLUSIVE in verdicts:
            return INCONCLUSIVE
        return PASS

    @property
    def exit_code(self) -> int:
        return {PASS: EXIT_PASS, FAIL: EXIT_FAIL, INCONCLUSIVE: EXIT_INCONCLUSIVE}[self.verdict]


def run_scenario(cfg: ScenarioConfig, threads: int = 1) -> RunResult:
    """Run every estimator (in parallel when ``threads > 1``), then every check.

    Each estimator and check draws from its own stream keyed by its name,
    so results do not depend on scheduling.
    """
    ctx = Context(cfg)
    specs = cfg.estimators
    if threads > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda s: run_estimator(ctx, s), specs))
    else:
        results = [run_estimator(ctx, s) for s in specs]
    for o in results:
        ctx.outcomes[o.name] = o
    checks: list[CheckResult] = []
    done = set()
    for spec in cfg.checks:
        if spec.name in done:
            continue
        done.add(spec.name)
        checks += run_check(ctx, spec)
    try:
        oracle = ctx.oracle.describe()
    except MethodUnavailable as exc:
        oracle = {"method": None, "error": str(exc)}
    return RunResult(cfg, results, checks, oracle)


# -- output --------------------------------------------------------------------------


def _clean(x):
    """JSON-safe copy: non-finite floats become strings, numpy scalars plain."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    return x


def report_document(res: RunResult) -> dict:
    cfg = res.config
    return _clean(
        {
            "scenario": cfg.name,
            "description": cfg.description,
            "config": cfg.to_dict(),
            "seed": cfg.seed,
            "seed_derivation": {
                "scheme": SEED_DERIVATION,
                "estimator_stream": "stream(seed, 'estimator', <estimator name>)",
                "check_stream": "stream(seed, 'check', <check name>)",
            },
            "oracle": res.oracle,
            "estimators": [o.to_dict() for o in res.outcomes],
            "checks": [c.to_dict() for c in res.checks],
            "verdict": res.verdict,
        }
    )


def ladders_csv(res: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["estimator", "n", "value", "stderr"])
    for o in res.outcomes:
        for lad, n, v, s in o.rows:
            nn = int(n) if float(n).is_integer() else repr(float(n))
            w.writerow([lad, nn, repr(float(v)), repr(float(s))])
    return buf.getvalue()


def summary_text(res: RunResult) -> str:
    cfg = res.config
    lines = [
        f"scenario   {cfg.name}",
        f"walk       {cfg.measure_text} on {cfg.group.name}",
        f"seed       {cfg.seed}",
        f"oracle     {res.oracle.get('method')}",
        "",
        "estimators",
    ]
    for o in res.outcomes:
        if o.ok:
            lines.append(f"  {o.name:<28} {o.value:>12.6f} +/- {o.uncertainty:.6f}  ({o.method})")
        else:
            lines.append(f"  {o.name:<28} {o.status}: {'; '.join(o.notes)}")
    lines += ["", "checks"]
    for c in res.checks:
        label = ", ".join(f"{k}={v}" for k, v in c.detail.items() if k.endswith("estimator") or k in ("metric", "a", "n"))
        lines.append(f"  {c.verdict:<24} {c.name}  lhs={c.lhs:.6g} rhs={c.rhs:.6g} sigma={c.sigma:.3g}" + (f"  [{label}]" if label else ""))
    lines += ["", f"verdict    {res.verdict}"]
    return "\n".join(lines) + "\n"


def write_outputs(res: RunResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report_document(res), indent=2) + "\n", encoding="utf-8")
    (out / "ladders.csv").write_text(ladders_csv(res), encoding="utf-8")
    (out / "summary.txt").write_text(summary_text(res), encoding="utf-8")
