import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dirac3t.errors import SectionError
from dirac3t.spectral_sections import (
    boundary_projector,
    build_fields,
    build_projector_field_nontrivial,
    build_projector_field_trivial,
    classify_small_R,
    disc_field,
    epsilon_bound,
    k_difference,
    minimal_representative,
    relative_degree,
    trivial_descriptor,
    verify_spectral_section,
)
from dirac3t.spectrum_engine import dirac_block
from dirac3t.topology import (
    ProjectorField,
    bloch_vectors,
    chern_number,
    projector_defects,
    projector_from_bloch,
    round_checked,
    solid_angles,
    torus_degree,
)
from dirac3t.torus_geometry import saturate_and_cosets

PLANE = [(1, 0, 0), (0, 1, 0)]


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


# -- Projectors and solid angles --------------------------------------------


@given(st.tuples(*[st.floats(-5, 5, allow_nan=False)] * 3).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_projector_from_bloch(u):
    p = projector_from_bloch(_unit(u))
    herm, idem = projector_defects(p)
    assert herm < 1e-15 and idem < 1e-15
    assert np.allclose(bloch_vectors(p), _unit(u))


def test_octant_solid_angle():
    e = np.eye(3)
    assert solid_angles(e[0], e[1], e[2]) == pytest.approx(math.pi / 2)
    assert solid_angles(e[0], e[2], e[1]) == pytest.approx(-math.pi / 2)


def _torus_map(d, N):
    s = (np.arange(N) + 0.5) / N
    s1, s2 = np.meshgrid(s, s, indexing="ij")
    z = np.tan(np.pi * (s1 - 0.5)) + 1j * np.tan(np.pi * (s2 - 0.5))
    w = z**d if d >= 0 else np.conj(z) ** (-d)
    big = np.abs(w) ** 2
    return np.stack([2 * w.real, 2 * w.imag, 1 - big], -1) / (1 + big)[..., None]


@pytest.mark.parametrize("d", [-2, -1, 0, 1, 2])
def test_chern_of_line_field_equals_degree(d):
    u = _torus_map(d, 32)
    assert torus_degree(u) == d
    field = ProjectorField(kind="torus", values=projector_from_bloch(u))
    assert chern_number(field) == d


def test_round_checked():
    assert round_checked(2.01, "x") == 2
    with pytest.raises(SectionError):
        round_checked(1.5, "x")


def test_coarse_grid_detected():
    with pytest.raises(SectionError, match="coarse"):
        torus_degree(_torus_map(3, 4))


def test_chern_rejects_non_torus():
    field = disc_field(1, 1.0, 16)
    with pytest.raises(SectionError):
        chern_number(field)


# -- Boundary values and degrees --------------------------------------------


@given(st.tuples(*[st.floats(-5, 5, allow_nan=False)] * 2).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_boundary_projector_is_positive_projector(beta):
    p = boundary_projector(beta)
    d = dirac_block((beta[0], beta[1], 0.0))
    vals, vecs = np.linalg.eigh(d)
    pos = np.outer(vecs[:, 1], vecs[:, 1].conj())
    assert np.allclose(p, pos, atol=1e-12)


def test_boundary_projector_undefined_at_zero():
    with pytest.raises(SectionError):
        boundary_projector((0.0, 0.0))


@pytest.mark.parametrize("n", [-2, -1, 0, 1, 2, 3])
def test_relative_degree_small_grid(n):
    assert relative_degree(disc_field(n, 0.7, 48)) == n


@settings(max_examples=10)
@given(st.integers(-3, 3), st.floats(0.1, 3.0))
def test_relative_degree_in_frame(n, R):
    frame = saturate_and_cosets([(1, 1, 0), (0, 1, 1)]).orthonormal_frame()
    assert relative_degree(disc_field(n, R, 64, frame)) == n


def test_relative_degree_rejects_wrong_boundary():
    field = disc_field(1, 1.0, 32)
    field.values[-1] = field.values[0, 0]
    with pytest.raises(SectionError):
        relative_degree(field)


@pytest.mark.parametrize("h", [2, 3])
@pytest.mark.parametrize("d", [-2, 0, 2])
def test_nontrivial_field(h, d):
    f = build_projector_field_nontrivial(h, (1, d), 24)
    assert f.dim == h
    assert chern_number(f) == d
    if h > 2:
        assert chern_number(build_projector_field_nontrivial(h, (2, d), 24)) == d


@pytest.mark.parametrize("desc", [(0, 1), (2, 1), (3, 0), (-1, 0)])
def test_nontrivial_field_rejects(desc):
    with pytest.raises(SectionError):
        build_projector_field_nontrivial(2, desc, 16)


# -- Classification ---------------------------------------------------------


def test_epsilon_bounds():
    assert epsilon_bound((0, 0, 0), PLANE) == pytest.approx(2 * math.pi)
    assert epsilon_bound((0, 0, 0), [(1, 1, 1)]) == pytest.approx(2 * math.pi * math.sqrt(2 / 3))
    assert epsilon_bound((0, 0, 2), PLANE) == pytest.approx(math.sqrt(4 * math.pi))
    assert epsilon_bound((0, 0, 1), PLANE) == pytest.approx(math.sqrt(2 * math.pi))
    with pytest.raises(SectionError):
        epsilon_bound((1, 0, 0), PLANE)


def test_classify_nontrivial():
    cls = classify_small_R((0, 0, 3), PLANE)
    assert cls.ranks == (0, 1, 2, 3)
    assert cls.free_chern_ranks == (1, 2)
    pairs = {(d.rank, d.chern) for d in cls.descriptors}
    assert pairs == {(0, 0), (3, 0)} | {(r, c) for r in (1, 2) for c in (-1, 0, 1)}
    assert all(d.R == pytest.approx(cls.epsilon / 2) for d in cls.descriptors)


def test_classify_nontrivial_line_base():
    cls = classify_small_R((0, 0, 2), [(1, 0, 0)])
    assert {(d.rank, d.chern) for d in cls.descriptors} == {(0, 0), (1, 0), (2, 0)}
    assert cls.note


def test_classify_trivial():
    cls = classify_small_R((0, 0, 0), [(2, 0, 0), (0, 1, 0)])
    assert len(cls.lattice.cosets) == 2
    assert [d.degrees for d in cls.descriptors] == [(-1, 0), (0, 0), (1, 0)]
    assert cls.certificates == (-1, 0, 1)
    line = classify_small_R((0, 0, 0), [(1, 2, 0)])
    assert len(line.descriptors) == 1


def test_k_difference_and_minimal_system():
    lat = saturate_and_cosets([(2, 0, 0), (0, 2, 0)])
    a = trivial_descriptor(lat, 1.0, {0: 1, 3: -2})
    b = trivial_descriptor(lat, 1.0, [0, 0, -1, 0])
    assert k_difference(a, b).as_tuple() == (0, 0)
    assert minimal_representative(a) == minimal_representative(b)
    c = trivial_descriptor(lat, 1.0, {1: 2})
    assert k_difference(c, b).as_tuple() == (0, 3)
    with pytest.raises(SectionError):
        trivial_descriptor(lat, 1.0, {7: 1})
    with pytest.raises(SectionError):
        trivial_descriptor(lat, 1.0, [1, 2])


# -- Construction and verification ------------------------------------------


def test_trivial_section_verifies():
    lat = saturate_and_cosets([(2, 0, 0), (0, 1, 0)])
    R = epsilon_bound((0, 0, 0), lat) / 2
    desc = trivial_descriptor(lat, R, [2, -1])
    fields = build_projector_field_trivial(lat, R, desc, 64)
    kinds = [f.kind for f in fields]
    assert kinds[:2] == ["disc", "disc"] and set(kinds[2:]) == {"patch"}
    assert [relative_degree(f) for f in fields[:2]] == [2, -1]
    report = verify_spectral_section(fields, (0, 0, 0), lat, R)
    assert report.passed
    for entry in report.checks["fields"]:
        assert entry["spectral_action_defect"] < 1e-10
        assert entry["C"] < entry["limit"]


def test_line_lattice_section_verifies():
    lat = saturate_and_cosets([(3, 0, 0)])
    R = epsilon_bound((0, 0, 0), lat) / 2
    desc = trivial_descriptor(lat, R, [0, 0, 0])
    fields = build_fields((0, 0, 0), lat, desc, 32)
    assert [f.kind for f in fields[:3]] == ["line"] * 3
    assert verify_spectral_section(fields, (0, 0, 0), lat, R).passed


def test_verification_reports_failures():
    lat = saturate_and_cosets(PLANE)
    R = 1.0
    fields = build_projector_field_trivial(lat, R, trivial_descriptor(lat, R, [1]), 48)
    fields[0].values[-1, 0] = np.eye(2) - fields[0].values[-1, 0]
    report = verify_spectral_section(fields, (0, 0, 0), lat, R, strict=False)
    assert not report.passed
    checks = {f["check"] for f in report.failures}
    assert "spectral_action" in checks
    with pytest.raises(SectionError):
        verify_spectral_section(fields, (0, 0, 0), lat, R)


def test_verification_rejects_large_R():
    lat = saturate_and_cosets(PLANE)
    fields = build_projector_field_trivial(lat, 1.0, trivial_descriptor(lat, 1.0, [0]), 32)
    with pytest.raises(SectionError):
        verify_spectral_section(fields, (0, 0, 0), lat, 7.0)


def test_trivial_build_rejects():
    lat = saturate_and_cosets(PLANE)
    desc = trivial_descriptor(lat, 1.0, [0])
    with pytest.raises(SectionError):
        build_projector_field_trivial(lat, 7.0, desc, 32)
    with pytest.raises(SectionError):
        build_projector_field_trivial(lat, 1.0, desc, 8)
    with pytest.raises(SectionError):
        build_projector_field_trivial(lat, 1.0, desc, 1000)


def test_nontrivial_build_on_line_base_rejects_chern():
    cls = classify_small_R((0, 0, 2), [(1, 0, 0)])
    bad = type(cls.descriptors[0])("nontrivial", cls.descriptors[0].R, rank=1, chern=1)
    with pytest.raises(SectionError):
        build_fields((0, 0, 2), [(1, 0, 0)], bad, 16)
