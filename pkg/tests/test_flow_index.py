import numpy as np
import pytest
from hypothesis import given, strategies as st

from dirac3t.errors import FlowError
from dirac3t.flow_index import (
    concatenated_flow,
    index_element,
    sections_exist,
    spectral_flow_closed_form,
    spectral_flow_numeric,
    track_crossings,
)
from dirac3t.spectrum_engine import TWO_PI
from dirac3t.torus_geometry import cup_pairing, decompose_spinc, saturate_and_cosets

k10 = st.integers(-10, 10)
k5 = st.integers(-5, 5)
khats = st.tuples(k10, k10, k10)
loops = st.tuples(k5, k5, k5).filter(lambda v: v != (0, 0, 0))
bases = st.tuples(*[st.floats(-10, 10, allow_nan=False)] * 3)


def test_example_flow():
    res = spectral_flow_numeric((0, 0, 2), (0, 0, 1))
    assert res.flow == 2
    assert len(res.crossings) == 2
    assert {c.m for c in res.crossings} == {0, 1}
    # lambda_0 sits on zero at t = 0; the half-open rule counts it there
    assert all(c.t == 0.0 and c.direction == 1 for c in res.crossings)


@given(khats, loops, bases)
def test_numeric_equals_pairing(khat, a, base):
    res = spectral_flow_numeric(khat, a, base_alpha=base)
    assert res.flow == spectral_flow_closed_form(khat, a) == cup_pairing(khat, a)
    if khat != (0, 0, 0):
        h = decompose_spinc(khat).h
        assert len(res.crossings) == abs(res.flow)
        assert len(res.crossings) % h == 0
        assert all(0.0 <= c.t < 1.0 for c in res.crossings)


def test_trivial_structure_is_symmetric():
    res = spectral_flow_numeric((0, 0, 0), (1, 2, 3))
    assert res.flow == 0 and res.symmetric and not res.crossings


def test_perpendicular_loop_has_no_crossings():
    res = spectral_flow_numeric((0, 0, 3), (1, -2, 0))
    assert res.flow == 0 and res.crossings == ()


@given(st.tuples(k5, k5, k5), st.lists(st.tuples(k5, k5, k5), min_size=1, max_size=3))
def test_concatenation_is_additive(khat, legs):
    total = concatenated_flow(khat, legs)
    assert total == sum(cup_pairing(khat, a) for a in legs)


def test_track_crossings_half_open():
    ts = np.linspace(0, 1, 5)
    vals = np.array([-1.0, 0.0, 1.0, 0.0, -1.0])
    out = track_crossings(vals, ts)
    assert [(t, d) for t, d, _ in out] == [(0.25, 1), (0.75, -1)]


def test_track_crossings_interpolates():
    ts = np.linspace(0, 1, 3)
    out = track_crossings(np.array([-1.0, 1.0, 3.0]), ts)
    assert out[0][0] == pytest.approx(0.25)
    assert not out[0][2]


@pytest.mark.parametrize("a,samples", [((0, 0, 0), 64), ((1, 0, 0), 8)])
def test_flow_rejects(a, samples):
    with pytest.raises(FlowError):
        spectral_flow_numeric((0, 0, 1), a, samples=samples)


def test_index_element():
    lat = saturate_and_cosets([(1, 0, 0), (0, 1, 0)])
    el = index_element((0, 0, 2), lat)
    assert el.values == (0, 0) and el.is_zero
    assert sections_exist((0, 0, 2), lat)
    el = index_element((1, 0, 2), [(1, 0, 0), (0, 2, 0)])
    assert el.values == (1, 0) and not el.is_zero
    assert not sections_exist((1, 0, 2), [(1, 0, 0), (0, 2, 0)])


def test_flow_along_alpha_shift_matches_samples():
    # dense sampling reproduces the same crossing times
    a, b = spectral_flow_numeric((1, 2, 0), (1, 1, 0), samples=16), spectral_flow_numeric(
        (1, 2, 0), (1, 1, 0), samples=512
    )
    assert a.flow == b.flow == 3
    assert np.allclose([c.t for c in a.crossings], [c.t for c in b.crossings], atol=1e-12)
    assert TWO_PI > 0


@pytest.mark.parametrize("eps", [0.0, 3.7e-113, -3.7e-113, 1e-17, -1e-17])
@pytest.mark.parametrize("a", [(0, 1, 0), (0, -1, 0), (0, 3, 0)])
def test_crossing_on_loop_endpoint(eps, a):
    res = spectral_flow_numeric((0, 1, 0), a, base_alpha=(0.0, eps, 0.0))
    assert res.flow == a[1]
