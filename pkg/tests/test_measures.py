import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from greenwalk.groups import parse_group
from greenwalk.measures import (
    BudgetExceeded,
    EnumeratedPowers,
    MeasureError,
    RadialPowers,
    StepMeasure,
    conditional_entropy,
    convolution_power,
    convolve,
    exact_powers,
    lazy,
    parse_measure,
    srw,
)

from reference import free_srw_power, lattice_srw_power, shannon

F2 = parse_group("F_2")
Z3 = parse_group("Z^3")
Z = parse_group("Z")


def as_text(word):
    return "".join(chr(96 + c) if c > 0 else chr(96 - c).upper() for c in word)


def test_srw_masses():
    m = srw(F2)
    assert len(m) == 4 and all(p == 0.25 for _, p in m)
    assert m.is_symmetric() and m.is_nearest_neighbour() and m.is_isotropic_free()
    assert m.entropy() == pytest.approx(math.log(4), abs=1e-15)


@pytest.mark.parametrize(
    "text,group,masses",
    [
        ("biased(2/3)", "Z", {(1,): 2 / 3, (-1,): 1 / 3}),
        ("biased(0.75)", "Z", {(1,): 0.75, (-1,): 0.25}),
        ("lazy(1/2, srw)", "Z", {(0,): 0.5, (1,): 0.25, (-1,): 0.25}),
    ],
)
def test_parse_measure(text, group, masses):
    m = parse_measure(text, group)
    assert m.payload_masses == pytest.approx(masses, abs=1e-15)


@pytest.mark.parametrize("text,group", [("biased(2)", "Z"), ("biased(0.5)", "Z^2"), ("lazy(1, srw)", "F_2"), ("walk", "F_2"), ("srw(1)", "Z")])
def test_parse_measure_rejects(text, group):
    with pytest.raises(MeasureError):
        parse_measure(text, group)


def test_measure_validation():
    with pytest.raises(MeasureError):
        StepMeasure(Z, {Z.element((1,)): 0.5})
    with pytest.raises(MeasureError):
        StepMeasure(Z, {Z.element((1,)): 1.5, Z.element((-1,)): -0.5})
    with pytest.raises(MeasureError):
        StepMeasure(Z, {F2.element((1,)): 1.0})


def test_reversed_and_mean():
    m = parse_measure("biased(0.7)", Z)
    r = m.reversed()
    assert r.mass(Z.element((-1,))) == pytest.approx(0.7)
    assert m.mean()[0] == pytest.approx(0.4)
    assert np.allclose(srw(Z3).covariance(), np.eye(3) / 3)


def test_text_roundtrip():
    m = lazy(0.25, srw(F2))
    assert StepMeasure.from_text(F2, m.to_text()) == m


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_free_convolution_against_reference(n):
    ref = free_srw_power(2, n)
    got = convolution_power(srw(F2), n)
    assert {as_text(x.payload) for x in got.support} == set(ref)
    for x, p in got:
        assert p == pytest.approx(float(ref[as_text(x.payload)]), abs=1e-15)
    assert got.entropy() == pytest.approx(shannon(ref), abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_lattice_convolution_against_reference(n):
    ref = lattice_srw_power(3, n)
    got = convolution_power(srw(Z3), n)
    assert len(got) == len(ref)
    for x, p in got:
        assert p == pytest.approx(float(ref[x.payload]), abs=1e-15)


def test_radial_powers_match_enumeration():
    m = lazy(0.2, srw(F2))
    rad = RadialPowers(m, 7)
    enum = EnumeratedPowers(m, 7)
    for n in range(1, 8):
        assert rad.entropy(n) == pytest.approx(enum.entropy(n), abs=1e-12)
        for x, p in enum.power(n):
            assert rad.mass(n, x) == pytest.approx(p, rel=1e-12, abs=1e-18)
    assert isinstance(exact_powers(srw(F2), 3), RadialPowers)
    assert isinstance(exact_powers(srw(Z3), 3), EnumeratedPowers)


def test_pruning_accounts_for_discarded_mass():
    m = srw(Z3)
    p4 = convolution_power(m, 4)
    pruned = convolve(convolution_power(m, 3), m, budget=len(p4) - 1, eps_prune=1e-3)
    assert pruned.discarded_mass > 0 and pruned.discarded_atoms > 0
    kept = math.fsum(p for _, p in pruned)
    assert kept + pruned.discarded_mass == pytest.approx(1.0, abs=1e-12)
    assert abs(pruned.entropy() - p4.entropy()) <= pruned.entropy_error_bound()
    with pytest.raises(BudgetExceeded):
        convolve(convolution_power(m, 3), m, budget=10, prune=False)


def test_enumerated_powers_stop_at_budget():
    pw = EnumeratedPowers(srw(Z3), 12, budget=500, eps_prune=0.0)
    assert pw.exhausted is not None
    assert 1 <= pw.n_max < 12


def test_sampling_frequencies():
    m = parse_measure("biased(0.3)", Z)
    idx = m.sample_indices(np.random.default_rng(5), 200_000)
    sup = m.support
    frac = np.mean([sup[i].payload[0] == 1 for i in idx])
    assert abs(frac - 0.3) < 5 * math.sqrt(0.21 / 200_000)


@given(st.integers(1, 60))
def test_entropy_sequence_shape(n):
    # H(mu^n) is subadditive and its increments do not increase
    pw = RadialPowers(srw(F2), 61)
    H = [pw.entropy(j) for j in range(0, 62)]
    for j in range(1, 62 - n):
        assert H[n + j] <= H[n] + H[j] + 1e-9
    assert H[n + 1] - H[n] <= H[n] - H[n - 1] + 1e-9


def test_entropy_increments_on_lattice():
    pw = EnumeratedPowers(srw(Z3), 8)
    H = [0.0] + [pw.entropy(n) for n in range(1, 9)]
    inc = np.diff(H)
    assert np.all(np.diff(inc) <= 1e-12)


@given(st.sets(st.integers(-4, 4), min_size=1))
def test_conditional_entropy_bounded_by_log_size(points):
    law = convolution_power(srw(Z), 4)
    A = [Z.element((p,)) for p in points]
    if sum(law.mass(x) for x in A) == 0:
        with pytest.raises(MeasureError):
            conditional_entropy(law, A)
        return
    h = conditional_entropy(law, A)
    assert 0 <= h <= math.log(len(A)) + 1e-12
