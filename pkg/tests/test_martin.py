import math

import numpy as np
import pytest

from greenwalk.groups import parse_group
from greenwalk.green import MethodUnavailable, TreeOracle
from greenwalk.martin import (
    BoundaryPoint,
    boundary_integral,
    boundary_kernel,
    entropy_integral,
    green_speed_integral,
    kernel_integrand,
    martin_kernel,
    maximal_inequality_check,
    sample_boundary,
    sample_prefixes,
    sup_log_kernel,
)
from greenwalk.measures import lazy, parse_measure, srw
from greenwalk.walks import stream

from reference import tree_green_speed

F2 = parse_group("F_2")
F3 = parse_group("F_3")


@pytest.fixture(scope="module")
def tree():
    return TreeOracle(srw(F2))


def test_martin_kernel_values(tree):
    a, b = F2.element((1,)), F2.element((2,))
    y = F2.element((1, 1, 2))
    # x on the geodesic to y: F(x, y) / F(e, y) = 3^{|y| - d(x, y)}
    assert martin_kernel(tree, a, y).value == 3.0
    assert martin_kernel(tree, b, y).value == pytest.approx(1 / 3, rel=1e-15)
    assert martin_kernel(tree, F2.identity(), y).value == 1.0


def test_martin_kernel_is_harmonic_off_the_target(tree):
    # sum_s mu(s) K(x s, y) = K(x, y) for x away from y
    y = F2.element((1, 2, 1, 2, 1))
    for x in [F2.identity(), F2.element((2,)), F2.element((-1, -2))]:
        avg = sum(p * martin_kernel(tree, x * s, y).value for s, p in srw(F2))
        assert avg == pytest.approx(martin_kernel(tree, x, y).value, rel=1e-13)


def test_boundary_kernel_is_the_limit(tree):
    xi = sample_boundary(F2, srw(F2), stream(1, "xi"), 8)
    assert len(xi.prefix) == 8
    x = F2.element((1, -2))
    far = xi.element()
    assert boundary_kernel(tree, x, xi).value == pytest.approx(martin_kernel(tree, x, far).value, rel=1e-14)
    assert kernel_integrand(tree, x, xi.prefix) == pytest.approx(-boundary_kernel(tree, x, xi).log_value)


def test_boundary_point_prefix_is_stable():
    xi = BoundaryPoint(F2, srw(F2), stream(3, "xi"), window=20)
    xi.extend(3)
    p3 = xi.prefix
    xi.extend(6)
    assert xi.prefix[:3] == p3 and len(xi) == 6
    assert "\t" in xi.to_text()


def test_boundary_needs_free_group():
    z = parse_group("Z")
    with pytest.raises(MethodUnavailable):
        BoundaryPoint(z, parse_measure("biased(0.7)", z), stream(0))


def test_first_letters_of_ends_are_uniform():
    pre, ok = sample_prefixes(srw(F2), 40_000, stream(2, "ends"), 2)
    assert ok.all()
    counts = np.array([np.sum(pre[:, 0] == s) for s in (1, -1, 2, -2)])
    assert np.all(np.abs(counts / 40_000 - 0.25) < 5 * math.sqrt(0.25 * 0.75 / 40_000))
    assert np.all(pre[:, 1] != -pre[:, 0])


@pytest.mark.parametrize("k", [2, 3])
def test_boundary_integral_matches_green_speed(k):
    g = parse_group(f"F_{k}")
    res = boundary_integral(g, srw(g), 20_000, stream(5, "bi"))
    assert res.failures == 0
    assert abs(res.estimate.value - tree_green_speed(k)) <= 4 * res.estimate.stderr + 0.01


def test_boundary_integral_shared_sampler():
    a = green_speed_integral(F2, srw(F2), 2000, 9)
    b = entropy_integral(F2, srw(F2), 2000, 9)
    assert a == b


def test_boundary_integral_lazy_walk():
    m = lazy(0.5, srw(F2))
    est = green_speed_integral(F2, m, 20_000, stream(6, "bi"))
    # the step is e half the time, where the kernel is 1, so the rate halves
    assert abs(est.value - 0.5 * tree_green_speed(2)) <= 4 * est.stderr + 0.01


def test_maximal_inequality_small():
    rep = maximal_inequality_check(F2, srw(F2), [1.5, 3, 9], 5000, 200, stream(7, "max"))
    assert rep.passed
    rows = {r.a: r for r in rep.rows}
    # K(s, .) only takes the values 3 and 1/3, so the sup reaches 3 exactly when Z_n starts with s
    assert rows[9].empirical == 0.0
    assert rows[1.5].empirical == rows[3].empirical
    assert rows[3].empirical == pytest.approx(1 / 3, abs=5 * rows[3].stderr + 0.01)


def test_sup_log_kernel_range():
    sup = sup_log_kernel(srw(F2), 3000, 50, stream(8, "sup"))
    assert np.all(np.isclose(sup, math.log(3)) | np.isclose(sup, 0.0) | np.isclose(sup, -math.log(3)))
