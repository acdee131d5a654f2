"""Independent numerical checks of the closed-form spectra.

The transverse operator is discretised as a U(1) flux lattice on a square
2-torus of area ``1/|k|`` carrying ``h`` flux quanta. A local chirally
symmetric stencil must contain a mirror species of opposite chirality; the
Wilson-type terms below push its Landau levels above the fourth physical
level, and its zero modes sit in the opposite chirality sector, so the
physical sector reproduces the continuum low spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .errors import OracleError
from .spectrum_engine import (
    PAULI,
    TWO_PI,
    BranchLabel,
    SpectrumEntry,
    SpectrumSlice,
    as_alpha,
    as_spinc,
    block_eigen_data,
    clifford_block,
    fibre_mode_range,
    lambda_l,
)

# Complex Wilson coefficients. Their phases put the mirror species at an
# effective field about 4.2 times the physical one.
WILSON_X = 3.0 * np.exp(1j * 2.618)
WILSON_Y = 3.0 * np.exp(1j * 5.236)
ZERO_MODE_TOL = 1e-6
CLUSTER_FRACTION = 0.3


def baseline_grid(h: int) -> int:
    return max(32, math.ceil(8.0 * math.sqrt(h)) * 8)


def _check_params(h: int, N: int, area: float) -> None:
    if h < 1:
        raise OracleError("flux h must be a positive integer")
    if N < 8:
        raise OracleError("grid size N must be at least 8")
    if N * N < 64 * h:
        raise OracleError(f"N={N} too coarse for h={h}: need N^2 >= 64 h")
    if not area > 0.0:
        raise OracleError("area must be positive")


@dataclass(frozen=True)
class FluxLattice:
    """Link variables of a uniform field on an ``N x N`` periodic lattice.

    Landau gauge: ``U_y(i, j) = exp(i phi i)`` on every vertical link and
    ``U_x(i, j) = 1`` except the boundary column ``U_x(N-1, j) = exp(-i phi N j)``,
    with ``phi = 2 pi h / N^2``.
    """

    N: int
    h: int
    area: float
    link_x: np.ndarray = field(repr=False)
    link_y: np.ndarray = field(repr=False)

    @property
    def phi(self) -> float:
        return TWO_PI * self.h / self.N**2

    @property
    def spacing(self) -> float:
        return math.sqrt(self.area) / self.N

    def plaquette_fluxes(self) -> np.ndarray:
        ux, uy = self.link_x, self.link_y
        loop = ux * np.roll(uy, -1, axis=0) * np.conj(np.roll(ux, -1, axis=1)) * np.conj(uy)
        return np.angle(loop)

    def total_holonomy(self) -> complex:
        return complex(np.exp(1j * np.sum(self.plaquette_fluxes())))

    def gauge_transform(self, chi: np.ndarray) -> "FluxLattice":
        """Links after ``psi -> exp(i chi) psi``."""
        g = np.exp(1j * np.asarray(chi, dtype=float))
        ux = g * self.link_x * np.conj(np.roll(g, -1, axis=0))
        uy = g * self.link_y * np.conj(np.roll(g, -1, axis=1))
        return FluxLattice(self.N, self.h, self.area, ux, uy)

    def to_dict(self) -> dict:
        flux = self.plaquette_fluxes()
        return {
            "N": self.N,
            "h": self.h,
            "area": self.area,
            "plaquette_flux": self.phi,
            "max_flux_deviation": float(np.abs(flux - self.phi).max()),
            "total_flux": float(np.sum(flux)),
        }


def build_flux_lattice(h: int, N: int, area: float = 1.0) -> FluxLattice:
    h, N, area = int(h), int(N), float(area)
    _check_params(h, N, area)
    phi = TWO_PI * h / N**2
    i = np.arange(N)[:, None] * np.ones((1, N))
    uy = np.exp(1j * phi * i)
    ux = np.ones((N, N), dtype=complex)
    ux[N - 1, :] = np.exp(-1j * phi * N * np.arange(N))
    return FluxLattice(N, h, area, ux, uy.astype(complex))


def chiral_block(lattice: FluxLattice) -> sp.csr_matrix:
    """Off-diagonal block ``A`` with symbol ``i sin p_x - sin p_y + w.(1 - cos p)``."""
    N = lattice.N
    idx = np.arange(N * N).reshape(N, N)
    ux, uy = lattice.link_x.ravel(), lattice.link_y.ravel()
    # links arriving from the previous site, seen from the current one
    ux_back = np.roll(lattice.link_x, 1, axis=0).ravel()
    uy_back = np.roll(lattice.link_y, 1, axis=1).ravel()
    here = idx.ravel()
    east = np.roll(idx, -1, axis=0).ravel()
    west = np.roll(idx, 1, axis=0).ravel()
    north = np.roll(idx, -1, axis=1).ravel()
    south = np.roll(idx, 1, axis=1).ravel()
    wx, wy = WILSON_X, WILSON_Y
    rows = np.concatenate([here] * 5)
    cols = np.concatenate([east, west, north, south, here])
    vals = np.concatenate(
        [
            0.5 * (1.0 - wx) * ux,
            -0.5 * (1.0 + wx) * np.conj(ux_back),
            0.5 * (1j - wy) * uy,
            -0.5 * (1j + wy) * np.conj(uy_back),
            np.full(N * N, wx + wy),
        ]
    )
    a = sp.csr_matrix((vals, (rows, cols)), shape=(N * N, N * N))
    return a / lattice.spacing


def build_flux_dirac(
    h: int, N: int, area: float = 1.0, lattice: FluxLattice | None = None
) -> sp.csr_matrix:
    """Hermitian ``D = [[0, A^*], [A, 0]] / sqrt 2`` of dimension ``2 N^2``.

    The normalisation matches the closed-form Landau levels ``2 pi h |k| n``
    for ``D^2``.
    """
    if lattice is None:
        lattice = build_flux_lattice(h, N, area)
    a = chiral_block(lattice)
    d = sp.bmat([[None, a.conj().T], [a, None]], format="csr")
    return d / math.sqrt(2.0)


def chirality(N: int) -> sp.dia_matrix:
    return sp.diags(np.concatenate([np.ones(N * N), -np.ones(N * N)]))


def dump_matrix(matrix: sp.spmatrix, path) -> None:
    """Write ``row col re im`` lines (0-based) after a ``# rows cols nnz`` header."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")


def _start_vector(n: int) -> np.ndarray:
    """Fixed ARPACK start vector so repeated calls give identical output."""
    return np.random.default_rng(0).normal(size=n)


def _lowest(h_mat: sp.spmatrix, count: int, shift: float) -> np.ndarray:
    """Lowest ``count`` eigenvalues of a positive semidefinite sparse matrix."""
    n = h_mat.shape[0]
    if n <= 512:
        vals = np.linalg.eigvalsh(h_mat.toarray())
        return vals[:count]
    vals = sla.eigsh(
        h_mat.tocsc(),
        k=count,
        sigma=-shift,
        which="LM",
        return_eigenvectors=False,
        tol=1e-12,
        v0=_start_vector(n),
    )
    return np.sort(vals)


@dataclass(frozen=True)
class OracleReport:
    h: int
    N: int
    norm_k: float
    computed_levels: tuple[float, ...]
    predicted_levels: tuple[float, ...]
    clusters: tuple[tuple[float, int], ...]
    zero_modes: int
    mirror_zero_modes: int
    max_rel_error: float
    conclusive: bool

    @property
    def gap(self) -> float:
        return TWO_PI * self.h * self.norm_k

    def level_errors(self) -> list[float]:
        """Largest relative error per level ``n >= 1``."""
        out = []
        h = self.h
        for n in range(1, len(self.computed_levels) // h):
            block = np.array(self.computed_levels[n * h : (n + 1) * h])
            out.append(float(np.abs(block - n * self.gap).max() / (n * self.gap)))
        return out

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "N": self.N,
            "norm_k": self.norm_k,
            "computed_levels": list(self.computed_levels),
            "predicted_levels": list(self.predicted_levels),
            "clusters": [{"level": v, "mult": m} for v, m in self.clusters],
            "zero_modes": self.zero_modes,
            "mirror_zero_modes": self.mirror_zero_modes,
            "max_rel_error": self.max_rel_error,
            "conclusive": self.conclusive,
        }


def cluster_levels(values: Sequence[float], spacing: float) -> list[tuple[float, int]]:
    """Group sorted values whose neighbours differ by less than a fraction of ``spacing``."""
    out: list[list[float]] = []
    for v in sorted(values):
        if out and v - out[-1][-1] < CLUSTER_FRACTION * spacing:
            out[-1].append(v)
        else:
            out.append([v])
    return [(float(np.mean(c)), len(c)) for c in out]


def count_zero_modes(h: int, N: int, norm_k: float = 1.0) -> tuple[int, int]:
    """Numerically zero eigenvalues of D split by chirality.

    Returns ``(physical, mirror)``: the dimensions of the chirality +1 and -1
    parts of the eigenspace with ``|lambda| < 1e-6 sqrt(2 pi h |k|)``.
    """
    h, N = int(h), int(N)
    d = build_flux_dirac(h, N, 1.0 / float(norm_k))
    scale = math.sqrt(TWO_PI * h * norm_k)
    count = 2 * h + 4
    n = d.shape[0]
    if n <= 512:
        vals, vecs = np.linalg.eigh(d.toarray())
    else:
        # a small nonzero shift keeps the factorisation regular
        vals, vecs = sla.eigsh(
            d.tocsc(), k=count, sigma=1e-3 * scale, which="LM", tol=1e-12, v0=_start_vector(n)
        )
    near = np.abs(vals) < ZERO_MODE_TOL * scale
    v = vecs[:, near]
    half = n // 2
    gram = v[:half].conj().T @ v[:half] - v[half:].conj().T @ v[half:]
    signs = np.linalg.eigvalsh(gram)
    return int(np.sum(signs > 0.0)), int(np.sum(signs < 0.0))


def landau_check(
    h: int, norm_k: float = 1.0, N: int | None = None, n_max: int = 3, zero_modes: bool = True
) -> OracleReport:
    """Compare the physical-sector spectrum of ``D^2`` with ``2 pi h |k| n``.

    Zero-mode counts are ``-1`` when ``zero_modes`` is False. Levels below
    ``ZERO_MODE_TOL * gap`` are reported as exactly 0 so output is reproducible.
    """
    h = int(h)
    N = baseline_grid(h) if N is None else int(N)
    norm_k = float(norm_k)
    if n_max < 0:
        raise OracleError("n_max must be nonnegative")
    lat = build_flux_lattice(h, N, 1.0 / norm_k)
    a = chiral_block(lat)
    gap = TWO_PI * h * norm_k
    count = (n_max + 1) * h
    physical = _lowest((a.conj().T @ a) / 2.0, count, 1e-3 * gap)
    physical = np.where(np.abs(physical) < ZERO_MODE_TOL * gap, 0.0, physical)
    if zero_modes:
        zero, mirror_zero = count_zero_modes(h, N, norm_k)
    else:
        zero = mirror_zero = -1
    predicted = [gap * n for n in range(n_max + 1) for _ in range(h)]
    clusters = cluster_levels(physical, gap)
    conclusive = len(clusters) == n_max + 1 and all(m == h for _, m in clusters)
    rel = [
        abs(c - p) / p for c, p in zip(physical, predicted) if p > 0.0
    ]
    return OracleReport(
        h=h,
        N=N,
        norm_k=norm_k,
        computed_levels=tuple(float(x) for x in physical),
        predicted_levels=tuple(predicted),
        clusters=tuple(clusters),
        zero_modes=zero,
        mirror_zero_modes=mirror_zero,
        max_rel_error=float(max(rel, default=0.0)),
        conclusive=conclusive,
    )


def assemble_3d_spectrum(spinc, alpha, cutoff: float, report: OracleReport) -> SpectrumSlice:
    """Closed-form fibre eigenvalues combined with oracle transverse levels."""
    spinc = as_spinc(spinc)
    alpha = as_alpha(alpha)
    if spinc.is_trivial:
        raise OracleError("the flux oracle applies to nontrivial structures")
    if report.h != spinc.h or abs(report.norm_k - spinc.norm_k) > 1e-12:
        raise OracleError("oracle report was computed for a different structure")
    cutoff = float(cutoff)
    levels = [(v, m) for v, m in report.clusters[1:]]
    if levels and levels[-1][0] < cutoff**2:
        top = len(report.clusters) - 1
        if (top + 1) * report.gap <= cutoff**2:
            raise OracleError("oracle report does not reach the cutoff; raise n_max")
    entries = []
    for l in fibre_mode_range(spinc, alpha, cutoff):
        lam = lambda_l(spinc, alpha, l)
        if abs(lam) > cutoff:
            continue
        entries.append(SpectrumEntry(lam, spinc.h, BranchLabel("nontrivial", 0, l=l, n=0)))
        for n, (level, mult) in enumerate(levels, start=1):
            nu = math.sqrt(lam * lam + level)
            if nu > cutoff:
                break
            entries.append(SpectrumEntry(nu, mult, BranchLabel("nontrivial", 1, l=l, n=n)))
            entries.append(SpectrumEntry(-nu, mult, BranchLabel("nontrivial", -1, l=l, n=n)))
    entries.sort(key=lambda e: (e.value, e.label))
    return SpectrumSlice(alpha=tuple(float(x) for x in alpha), entries=tuple(entries))


@dataclass(frozen=True)
class BlockOracleReport:
    count: int
    max_beta_eig_dev: float
    max_beta_projector_dev: float
    max_block_eig_rel_dev: float
    max_vplus_angle: float
    max_orthogonality: float
    zero_beta_kernel: int

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "max_beta_eig_dev": self.max_beta_eig_dev,
            "max_beta_projector_dev": self.max_beta_projector_dev,
            "max_block_eig_rel_dev": self.max_block_eig_rel_dev,
            "max_vplus_angle": self.max_vplus_angle,
            "max_orthogonality": self.max_orthogonality,
            "zero_beta_kernel": self.zero_beta_kernel,
        }


def mode_block_oracle(count: int = 10_000, seed: int = 0, scale: float = 10.0) -> BlockOracleReport:
    """Diagonalise random Clifford and fibre blocks numerically against the closed forms."""
    count = int(count)
    if count < 1:
        raise OracleError("count must be positive")
    rng = np.random.default_rng(seed)

    beta = rng.normal(size=(count, 3)) * scale
    cliff = np.einsum("ni,iab->nab", beta, PAULI)
    vals, vecs = np.linalg.eigh(cliff)
    norm = np.linalg.norm(beta, axis=1)
    eig_dev = np.abs(vals - np.stack([-norm, norm], axis=1)).max()
    neg = vecs[:, :, 0]
    p_num = np.einsum("na,nb->nab", neg, neg.conj())
    p_closed = 0.5 * (np.eye(2) - np.einsum("ni,iab->nab", beta / norm[:, None], PAULI))
    proj_dev = np.abs(p_num - p_closed).max()

    lam = rng.normal(size=count) * scale
    mu = np.abs(rng.normal(size=count)) * scale
    mats = np.stack([np.stack([lam, mu], 1), np.stack([mu, -lam], 1)], 1)
    bvals, bvecs = np.linalg.eigh(mats)
    s = np.hypot(lam, mu)
    block_dev = (np.abs(bvals - np.stack([-s, s], 1)).max(axis=1) / s).max()
    angles = []
    ortho = []
    for i in range(count):
        data = block_eigen_data(lam[i], mu[i])
        up, _ = data.orthonormal_vectors()
        ref = bvecs[i, :, 1]
        # the sine form keeps full precision for nearly parallel vectors
        angles.append(math.asin(min(1.0, abs(float(up[0] * ref[1] - up[1] * ref[0])))))
        ortho.append(abs(float(data.vplus @ data.vminus)) / (data.s**2))
    zero_kernel = int(np.sum(np.abs(np.linalg.eigvalsh(clifford_block(np.zeros(3)))) < 1e-12))
    return BlockOracleReport(
        count=count,
        max_beta_eig_dev=float(eig_dev),
        max_beta_projector_dev=float(proj_dev),
        max_block_eig_rel_dev=float(block_dev),
        max_vplus_angle=float(max(angles)),
        max_orthogonality=float(max(ortho)),
        zero_beta_kernel=zero_kernel,
    )
