import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from greenwalk.groups import ball_enumerate, parse_group
from greenwalk.green import (
    LatticeDPOracle,
    LatticeFourierOracle,
    LineOracle,
    MethodUnavailable,
    MonteCarloOracle,
    RecurrentWalkError,
    TreeOracle,
    escape_tail_bound,
    first_hitting_times,
    first_passage_probability,
    green_ball_count,
    green_first_moment,
    green_identity_sweep,
    green_zero_set,
    heat_kernel_decay,
    hit_fractions,
    line_points,
    log_volume_growth,
    make_oracle,
    metric_axiom_sweep,
    monte_carlo_hitting,
    random_elements,
    word_growth_counts,
)
from greenwalk.measures import lazy, parse_measure, srw
from greenwalk.walks import stream

from reference import (
    GREEN_Z4,
    WATSON_Z3,
    line_hitting,
    tree_green_identity,
    tree_hitting,
    z3_neighbour_hitting,
    z3_return_probability,
)

F2 = parse_group("F_2")
F3 = parse_group("F_3")
Z = parse_group("Z")
Z3 = parse_group("Z^3")


@pytest.fixture(scope="module")
def fourier_z3():
    return LatticeFourierOracle(srw(Z3))


@pytest.fixture(scope="module")
def dp_z3():
    return LatticeDPOracle(srw(Z3))


# -- free groups -----------------------------------------------------------------


@pytest.mark.parametrize("k", [2, 3, 4])
def test_tree_oracle_closed_form(k):
    g = parse_group(f"F_{k}")
    o = TreeOracle(srw(g))
    a = g.element((1,))
    assert o.hitting_prob(g.identity(), a).value == pytest.approx(tree_hitting(k), rel=1e-14)
    assert o.green_at_identity().value == pytest.approx(tree_green_identity(k), rel=1e-14)
    x = g.element((1, 2, -1, 2))
    assert o.green_distance(g.identity(), x) == pytest.approx(4 * math.log(2 * k - 1), rel=1e-14)


def test_tree_oracle_lazy_and_iterated():
    m = lazy(0.3, srw(F2))
    o = TreeOracle(m)
    # laziness does not change F, and G(e,e) scales by 1/(1 - alpha)
    assert o.first_passage[1] == pytest.approx(1 / 3, rel=1e-14)
    assert o.green_at_identity().value == pytest.approx(1.5 / 0.7, rel=1e-14)
    skew = parse_measure("srw", F2)
    atoms = {F2.element((1,)): 0.4, F2.element((-1,)): 0.2, F2.element((2,)): 0.3, F2.element((-2,)): 0.1}
    skew = type(skew)(F2, atoms)
    t = TreeOracle(skew)
    F = t.first_passage
    others = lambda s: sum(atoms[F2.element((u,))] * F[-u] for u in F if u != s)
    for s in F:
        assert F[s] == pytest.approx(atoms[F2.element((s,))] + F[s] * others(s), abs=1e-14)
        assert 0 < F[s] < 1


@given(st.lists(st.sampled_from([1, -1, 2, -2]), max_size=8).map(tuple))
def test_tree_series_matches_product(word):
    o = TreeOracle(srw(F2))
    z = F2.element(word)
    series = o.return_series(z)
    assert abs(series.value - o.green_function(F2.identity(), z).value) <= 1e-12


def test_tree_oracle_refuses_non_nearest_neighbour():
    from greenwalk.measures import convolution_power

    with pytest.raises(MethodUnavailable):
        TreeOracle(convolution_power(srw(F2), 2))


# -- the line ------------------------------------------------------------------


@pytest.mark.parametrize("p", [0.6, 2 / 3, 0.9, 0.25])
def test_line_oracle(p):
    o = make_oracle(parse_measure(f"biased({p})", Z))
    assert isinstance(o, LineOracle)
    fp, fm = line_hitting(p)
    e = Z.identity()
    assert o.hitting_prob(e, Z.element((3,))).value == pytest.approx(fp**3, rel=1e-14)
    assert o.hitting_prob(e, Z.element((-2,))).value == pytest.approx(fm**2, rel=1e-14)
    assert o.green_at_identity().value == pytest.approx(1 / abs(2 * p - 1), rel=1e-13)


def test_recurrent_walks_refused():
    with pytest.raises(RecurrentWalkError):
        make_oracle(srw(Z))
    with pytest.raises(RecurrentWalkError):
        LatticeFourierOracle(srw(parse_group("Z^2")))


# -- Z^3 ------------------------------------------------------------------------


def test_z3_green_at_origin(fourier_z3, dp_z3):
    f = fourier_z3.green_at_identity()
    assert abs(f.value - WATSON_Z3) <= 1e-10
    d = dp_z3.green_at_identity()
    assert abs(d.value - WATSON_Z3) <= 3 * d.stderr + 1e-9


def test_high_dimension_falls_back_to_quadrature():
    # the DP box for Z^4 is over budget, so the default choice is the Fourier oracle
    o = make_oracle(srw(parse_group("Z^4")))
    assert o.method == "fourier_integral"
    assert abs(o.green_at_identity().value - GREEN_Z4) <= 1e-8
    with pytest.raises(MethodUnavailable):
        make_oracle(srw(parse_group("Z^4")), method="lattice_dp")


def test_z3_neighbour_hitting(fourier_z3, dp_z3):
    e, e1 = Z3.identity(), Z3.element((1, 0, 0))
    assert fourier_z3.hitting_prob(e, e1).value == pytest.approx(z3_neighbour_hitting(), abs=1e-10)
    d = dp_z3.hitting_prob(e, e1)
    assert abs(d.value - z3_neighbour_hitting()) <= 3 * d.stderr
    fp = first_passage_probability(srw(Z3), e1)
    assert abs(fp.value - z3_neighbour_hitting()) <= 3 * fp.stderr + 1e-4


def test_z3_oracles_agree_off_axis(fourier_z3, dp_z3):
    for p in [(1, 1, 0), (2, -1, 1), (3, 0, 0), (2, 2, 2)]:
        x = Z3.element(p)
        a = fourier_z3.green_function(Z3.identity(), x)
        b = dp_z3.green_function(Z3.identity(), x)
        assert abs(a.value - b.value) <= 3 * math.hypot(a.stderr, b.stderr) + 1e-9


def test_z3_green_decays_like_inverse_distance(fourier_z3):
    # G(0, x) ~ 3 / (2 pi |x|) for SRW on Z^3
    x = Z3.element((12, 0, 0))
    g = fourier_z3.green_function(Z3.identity(), x).value
    assert g * 2 * math.pi * 12 / 3 == pytest.approx(1.0, abs=0.01)


def test_drifted_lattice_fourier():
    m = type(srw(Z3))(Z3, {Z3.element(v): p for v, p in [((1, 0, 0), 0.3), ((-1, 0, 0), 0.1), ((0, 1, 0), 0.15), ((0, -1, 0), 0.15), ((0, 0, 1), 0.15), ((0, 0, -1), 0.15)]})
    o = LatticeFourierOracle(m)
    e = Z3.identity()
    # forward and backward hitting differ under drift
    assert o.hitting_prob(e, Z3.element((1, 0, 0))).value > o.hitting_prob(e, Z3.element((-1, 0, 0))).value


def test_monte_carlo_oracle_brackets_exact_value():
    o = MonteCarloOracle(srw(F2), trials=4000, seed=4)
    est = o.hitting_prob(F2.identity(), F2.element((1,)))
    assert abs(est.value - 1 / 3) <= 4 * est.stderr + 1e-3
    assert o.error_model == "one-sided downward"


def test_hitting_machinery():
    m = parse_measure("biased(0.75)", Z)
    times = first_hitting_times(m, Z.element((-1,)), 20_000, 200, stream(0, "hit"))
    rows = hit_fractions(times, [1, 10, 200])
    assert rows[0][1] <= rows[1][1] <= rows[2][1]
    assert abs(rows[-1][1] - 1 / 3) < 5 * rows[-1][2] + 1e-3
    est = monte_carlo_hitting(Z, m, Z.identity(), Z.element((-1,)), 20_000, 200, stream(0, "hit"))
    assert est.value == rows[-1][1]
    b1, b2 = escape_tail_bound(srw(F2), 50), escape_tail_bound(srw(F2), 100)
    assert b2 < b1


# -- heat kernel -------------------------------------------------------------------


def test_heat_kernel_exact_returns():
    rep = heat_kernel_decay(Z3, srw(Z3), 60)
    rows = dict(rep.rows)
    for k in range(0, 61):
        assert rows[k] == pytest.approx(float(z3_return_probability(k)), rel=1e-12, abs=1e-300)
    assert rows[4] == float(Fraction(90, 1296))


def test_heat_kernel_bound_constant():
    rep = heat_kernel_decay(Z3, srw(Z3), 80)
    assert rep.bound_holds
    for k, p in rep.rows:
        if k > 0:
            assert p <= rep.C_e * k ** (-rep.exponent) * (1 + 1e-12)


def test_heat_kernel_needs_lattice():
    with pytest.raises(MethodUnavailable):
        heat_kernel_decay(F2, srw(F2), 10)


# -- identity, axioms, zero set, first moment ---------------------------------------


def test_identity_sweep_on_tree():
    o = TreeOracle(srw(F2))
    ball = sorted(ball_enumerate(F2, 3), key=lambda x: x.payload)
    pairs = [(x, y) for x in ball for y in ball]
    rep = green_identity_sweep(F2, pairs, lambda z: o.return_series(z), lambda z: o.hitting_prob(F2.identity(), z), o.green_at_identity())
    assert rep.pairs == len(ball) ** 2
    assert rep.holds and rep.max_residual <= 1e-12


def test_identity_sweep_detects_a_wrong_route():
    o = TreeOracle(srw(F2))
    pairs = [(F2.identity(), F2.element((1,)))]
    rep = green_identity_sweep(F2, pairs, lambda z: o.return_series(z), lambda z: type(o.hitting_prob(F2.identity(), z))(0.3), o.green_at_identity())
    assert not rep.holds


@pytest.mark.parametrize("spec,radius", [("F_2:srw", 6), ("F_3:lazy(0.4, srw)", 5), ("Z:biased(2/3)", 20)])
def test_metric_axioms_exact(spec, radius):
    gname, mtext = spec.split(":")
    g = parse_group(gname)
    o = make_oracle(parse_measure(mtext, g))
    rng = np.random.default_rng(11)
    pts = random_elements(g, rng, 1500, radius)
    triples = list(zip(pts[0::3], pts[1::3], pts[2::3]))
    rep = metric_axiom_sweep(o, triples)
    assert rep.total_violations == 0
    assert ("symmetry" in rep.violations) == o.measure.is_symmetric()


def test_metric_axioms_catch_a_broken_distance():
    o = TreeOracle(srw(F2))
    o._distance = lambda z: float(len(z.payload) ** 2)
    pts = random_elements(F2, np.random.default_rng(1), 300, 5)
    rep = metric_axiom_sweep(o, list(zip(pts[0::3], pts[1::3], pts[2::3])))
    assert rep.violations["triangle"] > 0


def test_zero_sets():
    o = make_oracle(parse_measure("biased(2/3)", Z))
    zs = green_zero_set(o, line_points(Z, 20))
    assert [x.payload[0] for x in zs] == list(range(1, 21))
    t = TreeOracle(srw(F2))
    assert green_zero_set(t, ball_enumerate(F2, 4)) == []


@pytest.mark.parametrize(
    "group,measure",
    [("F_2", "srw"), ("F_3", "srw"), ("F_4", "srw"), ("F_2", "lazy(1/2, srw)"), ("Z", "biased(0.6)"), ("Z", "biased(0.9)")],
)
def test_first_moment_below_entropy(group, measure):
    o = make_oracle(parse_measure(measure, group))
    fm = green_first_moment(o)
    assert fm.holds


def test_first_moment_f2_golden():
    fm = green_first_moment(TreeOracle(srw(F2)))
    assert fm.green_moment == pytest.approx(math.log(3), rel=1e-14)
    assert fm.entropy == pytest.approx(math.log(4), rel=1e-14)


# -- growth ----------------------------------------------------------------------


@pytest.mark.parametrize("r", [0, 1, 3, 6])
def test_tree_green_ball_is_word_ball(r):
    o = TreeOracle(srw(F2))
    c = green_ball_count(o, r * math.log(3))
    assert c.exact and c.value == F2.ball_size(r)


def test_drifted_line_ball_is_infinite():
    o = make_oracle(parse_measure("biased(2/3)", Z))
    assert math.isinf(green_ball_count(o, 1.0).value)


def test_lattice_ball_bracket(fourier_z3):
    c = green_ball_count(fourier_z3, 1.5)
    assert 1 <= c.lower <= c.upper < math.inf
    # the bracket contains the brute-force count over a box that covers the ball
    e = Z3.identity()
    box = range(-3, 4)
    brute = sum(fourier_z3.green_distance(e, Z3.element((a, b, d))) <= 1.5 for a in box for b in box for d in box)
    assert c.lower <= brute <= c.upper


def test_log_volume_growth_recovers_slope():
    counts = [(r, math.exp(1.7 * r + 0.3)) for r in range(1, 11)]
    est = log_volume_growth(counts)
    assert est.slope == pytest.approx(1.7, abs=1e-12)
    words = word_growth_counts(F2, range(1, 12))
    assert log_volume_growth(words).slope == pytest.approx(math.log(3), abs=0.01)
    with pytest.raises(ValueError):
        log_volume_growth(counts[:2])
