"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line (shown in the terminal summary)
before asserting.
"""

import math
import time

import numpy as np
import pytest

from dirac3t.flow_index import index_element, sections_exist, spectral_flow_numeric
from dirac3t.lattice_oracle import baseline_grid, count_zero_modes, landau_check, mode_block_oracle
from dirac3t.spectral_sections import (
    build_fields,
    build_projector_field_nontrivial,
    classify_small_R,
    disc_field,
    epsilon_bound,
    k_difference,
    minimal_representative,
    relative_degree,
    trivial_descriptor,
    verify_spectral_section,
)
from dirac3t.spectrum_engine import (
    TWO_PI,
    block_eigen_data,
    block_matrix,
    clifford_block,
    enumerate_spectrum,
    kernel_dimension,
)
from dirac3t.topology import chern_number, disc_solid_angle, unit_bloch
from dirac3t.torus_geometry import cross, cup_pairing, saturate_and_cosets


def _rng(seed):
    return np.random.default_rng(seed)


def _random_lattice(rng, bound=3):
    while True:
        rank = int(rng.integers(1, 3))
        gens = [tuple(int(x) for x in rng.integers(-bound, bound + 1, 3)) for _ in range(rank)]
        if any(g == (0, 0, 0) for g in gens):
            continue
        if rank == 2 and cross(*gens) == (0, 0, 0):
            continue
        return gens


def test_criterion_01_spectral_flow(acceptance):
    rng = _rng(1)
    pairs = []
    while len(pairs) < 500:
        khat = tuple(int(x) for x in rng.integers(-10, 11, 3))
        a = tuple(int(x) for x in rng.integers(-5, 6, 3))
        if a != (0, 0, 0):
            pairs.append((khat, a))
    start = time.perf_counter()
    bad = [(k, a) for k, a in pairs if spectral_flow_numeric(k, a).flow != cup_pairing(k, a)]
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 10.0
    acceptance(1, "spectral flow equals <khat, a>", ok, f"{len(pairs)} pairs, {len(bad)} mismatches, {elapsed:.2f}s")
    assert ok, bad[:5]


def test_criterion_02_existence(acceptance):
    rng = _rng(2)
    cases = []
    while len(cases) < 200:
        gens = _random_lattice(rng)
        if rng.random() < 0.5:
            # force a pairing-free khat: a multiple of the normal, or of a vector across a line
            scale = int(rng.integers(-2, 3))
            if len(gens) == 2:
                khat = tuple(scale * x for x in cross(*gens))
            else:
                other = tuple(int(x) for x in rng.integers(-3, 4, 3))
                khat = tuple(scale * x for x in cross(gens[0], other))
        else:
            khat = tuple(int(x) for x in rng.integers(-6, 7, 3))
        cases.append((khat, gens))
    bad = []
    exist = 0
    for khat, gens in cases:
        el = index_element(khat, gens)
        pairing_zero = all(cup_pairing(khat, g) == 0 for g in gens)
        ex = sections_exist(khat, gens)
        exist += ex
        if not (ex == el.is_zero == pairing_zero):
            bad.append((khat, gens))
    ok = not bad
    acceptance(2, "existence iff index element vanishes", ok, f"200 cases, {exist} with sections, {len(bad)} mismatches")
    assert ok, bad[:5]


@pytest.mark.slow
def test_criterion_03_kernel_dimension(acceptance):
    rng = _rng(3)
    closed_bad = []
    for h in range(1, 6):
        for _ in range(20):
            while True:
                k = tuple(int(x) for x in rng.integers(-4, 5, 3))
                if k != (0, 0, 0) and math.gcd(*k) == 1:
                    break
            a = rng.integers(-3, 4, 3)
            v = rng.normal(size=3)
            v -= (v @ np.array(k)) / np.dot(k, k) * np.array(k, dtype=float)
            alpha = TWO_PI * a + v
            khat = tuple(h * x for x in k)
            if kernel_dimension(khat, alpha) != h:
                closed_bad.append((khat, alpha))
    start = time.perf_counter()
    counts = {h: count_zero_modes(h, baseline_grid(h)) for h in range(1, 5)}
    elapsed = time.perf_counter() - start
    oracle_ok = all(counts[h][0] == h for h in counts)
    ok = not closed_bad and oracle_ok and elapsed < 60.0
    detail = ", ".join(
        f"h={h} N={baseline_grid(h)}: {p} physical + {m} mirror" for h, (p, m) in counts.items()
    )
    acceptance(3, "kernel dimension h", ok, f"closed form 100/100={not closed_bad}; {detail}; {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_04_landau_levels(acceptance):
    start = time.perf_counter()
    rows = []
    ok = True
    for h in (1, 2, 3):
        N = baseline_grid(h)
        coarse = landau_check(h, N=N, n_max=3, zero_modes=False)
        fine = landau_check(h, N=2 * N, n_max=3, zero_modes=False)
        e1, e2 = coarse.level_errors(), fine.level_errors()
        good = (
            coarse.conclusive
            and fine.conclusive
            and len(e1) == len(e2) == 3
            and max(e1) < 0.05
            and max(e2) < 0.025
            and all(b <= 0.5 * a for a, b in zip(e1, e2))
        )
        ok &= good
        rows.append(f"h={h} N={N}: max {max(e1):.2e} -> {max(e2):.2e}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 300.0
    acceptance(4, "Landau levels 2 pi h |k| n", ok, "; ".join(rows) + f"; {elapsed:.1f}s")
    assert ok


def test_criterion_05_trivial_spectrum(acceptance):
    rng = _rng(5)
    cutoff = 20.0
    b = np.array(np.meshgrid(*[np.arange(-7, 8)] * 3, indexing="ij")).reshape(3, -1).T
    worst = 0.0
    bad = 0
    for _ in range(100):
        alpha = rng.uniform(-10, 10, 3)
        norms = np.linalg.norm(alpha + TWO_PI * b, axis=1)
        norms = norms[norms <= cutoff]
        ref = np.sort(np.concatenate([norms, -norms]))
        got = enumerate_spectrum((0, 0, 0), alpha, cutoff).values()
        if got.shape != ref.shape or not np.array_equal(got, -got[::-1]):
            bad += 1
            continue
        worst = max(worst, float(np.abs(got - ref).max()))
    ok = bad == 0 and worst <= 1e-12
    acceptance(5, "trivial spectrum equals brute force", ok, f"100 alphas, {bad} shape/symmetry failures, max dev {worst:.1e}")
    assert ok


def test_criterion_06_block_algebra(acceptance):
    rng = _rng(6)
    lam = rng.normal(size=10_000) * 10
    mu = np.abs(rng.normal(size=10_000)) * 10
    eig_dev = ortho = 0.0
    for l, m in zip(lam, mu):
        s = math.hypot(l, m)
        vals = np.linalg.eigvalsh(block_matrix(l, m))
        eig_dev = max(eig_dev, float(np.abs(vals - [-s, s]).max()) / s)
        data = block_eigen_data(l, m)
        ortho = max(
            ortho,
            abs(float(data.vplus @ data.vminus))
            / (np.linalg.norm(data.vplus) * np.linalg.norm(data.vminus)),
        )
    beta = rng.normal(size=(10_000, 3)) * 10
    cliff_dev = 0.0
    for b in beta:
        n = np.linalg.norm(b)
        cliff_dev = max(cliff_dev, float(np.abs(np.linalg.eigvalsh(clifford_block(b)) - [-n, n]).max()))
    oracle = mode_block_oracle(count=10_000, seed=6)
    ok = eig_dev <= 1e-10 and ortho <= 1e-10 and cliff_dev <= 1e-12 and oracle.max_block_eig_rel_dev <= 1e-10
    acceptance(
        6,
        "2x2 block algebra",
        ok,
        f"eig rel {eig_dev:.1e}, <v+,v-> {ortho:.1e}, Clifford {cliff_dev:.1e}, vplus angle {oracle.max_vplus_angle:.1e}",
    )
    assert ok


def test_criterion_07_gauge_periodicity(acceptance):
    rng = _rng(7)
    worst = 0.0
    bad = 0
    for i in range(100):
        khat = (0, 0, 0) if i % 4 == 0 else tuple(int(x) for x in rng.integers(-4, 5, 3))
        alpha = rng.uniform(-8, 8, 3)
        a = rng.integers(-5, 6, 3)
        v0 = enumerate_spectrum(khat, alpha, 12.0).values()
        v1 = enumerate_spectrum(khat, alpha + TWO_PI * a, 12.0).values()
        if v0.shape != v1.shape:
            bad += 1
            continue
        if v0.size:
            worst = max(worst, float((np.abs(v0 - v1) / np.maximum(1.0, np.abs(v0))).max()))
    ok = bad == 0 and worst <= 1e-12
    acceptance(7, "gauge periodicity alpha -> alpha + 2 pi a", ok, f"100 cases, {bad} multiplicity mismatches, max rel dev {worst:.1e}")
    assert ok


def test_criterion_08_degree_classification(acceptance):
    start = time.perf_counter()
    R = 1.0
    ref = unit_bloch(disc_field(0, R, 128))
    results = []
    worst = 0.0
    for n in range(-3, 4):
        field = disc_field(n, R, 128)
        raw = (disc_solid_angle(unit_bloch(field)) - disc_solid_angle(ref)) / (4 * math.pi)
        worst = max(worst, abs(raw - n))
        results.append(relative_degree(field) == n)
    elapsed = time.perf_counter() - start
    ok = all(results) and worst < 0.02 and elapsed < 30.0
    acceptance(8, "relative degree of continuations", ok, f"n=-3..3 on 128x128, residual {worst:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_09_chern_certification(acceptance):
    checked = 0
    bad = []
    for h in range(1, 5):
        for r in range(0, h + 1):
            for d in range(-3, 4):
                if r in (0, h) and d != 0:
                    continue
                got = chern_number(build_projector_field_nontrivial(h, (r, d), 24))
                checked += 1
                if got != d:
                    bad.append((h, r, d, got))
    ok = not bad
    acceptance(9, "Chern number of built fields", ok, f"{checked} (h, rank, d) combinations on 24x24, {len(bad)} wrong")
    assert ok, bad


SECTION_CASES = [
    ((0, 0, 0), [(1, 0, 0), (0, 1, 0)]),
    ((0, 0, 0), [(2, 0, 0), (0, 1, 0)]),
    ((0, 0, 0), [(1, 1, 0), (0, 2, 2)]),
    ((0, 0, 0), [(2, 0, 0), (0, 2, 0)]),
    ((0, 0, 0), [(1, 2, 3)]),
    ((0, 0, 0), [(3, 0, 0)]),
    ((0, 0, 1), [(1, 0, 0), (0, 1, 0)]),
    ((0, 0, 2), [(1, 0, 0), (0, 1, 0)]),
    ((3, 3, 0), [(1, -1, 0), (0, 0, 1)]),
    ((0, 2, 0), [(1, 0, 0)]),
]


def test_criterion_10_section_validity(acceptance):
    built = 0
    failures = []
    worst_c = 0.0
    for khat, ell in SECTION_CASES:
        cls = classify_small_R(khat, ell)
        R = epsilon_bound(khat, ell) / 2
        for desc in cls.descriptors:
            assert desc.R == pytest.approx(R)
            grid = 64 if khat == (0, 0, 0) else 24
            fields = build_fields(khat, ell, desc, grid)
            report = verify_spectral_section(fields, khat, ell, R, strict=False)
            built += 1
            worst_c = max([worst_c] + [f["C"] / f["limit"] for f in report.checks["fields"]])
            if not report.passed:
                failures.append((khat, ell, desc.to_dict(), report.failures[:2]))
    ok = not failures
    acceptance(10, "classified sections verify at R = epsilon/2", ok, f"{built} descriptors over {len(SECTION_CASES)} cases, {len(failures)} failed, max C/limit {worst_c:.2f}")
    assert ok, failures[:3]


def test_criterion_11_k_difference(acceptance):
    rng = _rng(11)
    checked = equal = 0
    bad = []
    lattices = [[(2, 0, 0), (0, 3, 0)], [(2, 0, 0), (0, 2, 0)], [(1, 1, 0), (0, 2, 2)], [(3, 0, 0), (0, 1, 0)]]
    for gens in lattices:
        lat = saturate_and_cosets(gens)
        count = len(lat.cosets)
        for _ in range(100):
            g1 = rng.integers(-3, 4, count)
            if rng.random() < 0.4:
                g2 = rng.permutation(g1)  # same total, different distribution
            else:
                g2 = rng.integers(-3, 4, count)
            d1 = trivial_descriptor(lat, 1.0, g1.tolist())
            d2 = trivial_descriptor(lat, 1.0, g2.tolist())
            diff = k_difference(d1, d2).as_tuple()
            same = minimal_representative(d1) == minimal_representative(d2)
            checked += 1
            equal += same
            if diff != (0, int(g1.sum() - g2.sum())) or (diff == (0, 0)) != same:
                bad.append((gens, g1.tolist(), g2.tolist(), diff))
    ok = not bad
    acceptance(11, "K-difference (0, sum g1 - sum g2)", ok, f"{checked} pairs, {equal} identified by the minimal system, {len(bad)} wrong")
    assert ok, bad[:3]
