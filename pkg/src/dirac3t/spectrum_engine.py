"""Closed-form spectra of the twisted Dirac family on the flat 3-torus.

Nontrivial structures ``khat = h k`` decompose into fibre modes ``l`` and
Landau levels ``n``; the trivial structure decomposes into plane waves
``b`` on which the operator is a 2x2 Clifford block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import SpectrumError
from .torus_geometry import SpincStructure, decompose_spinc

TWO_PI = 2.0 * math.pi
ZERO_TOL = 1e-9

# Pauli triple used for Clifford multiplication: E_i E_j + E_j E_i = 2 delta_ij.
PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def as_spinc(spinc) -> SpincStructure:
    if isinstance(spinc, SpincStructure):
        return spinc
    return decompose_spinc(spinc)


def as_alpha(alpha) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise SpectrumError(f"alpha must be a finite real 3-vector, got {alpha!r}")
    return a


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class BranchLabel:
    """Branch of the spectrum.

    Nontrivial case: fibre mode ``l``, Landau index ``n`` and ``sign`` in
    {+1, 0, -1}; sign 0 marks the h-fold ``lambda_l`` branch. Trivial case:
    lattice vector ``b`` and ``sign`` in {+1, -1}.
    """

    case: str
    sign: int
    l: int | None = None
    n: int | None = None
    b: tuple[int, int, int] | None = None

    def to_dict(self) -> dict:
        if self.case == "nontrivial":
            return {"case": self.case, "l": self.l, "n": self.n, "sign": self.sign}
        return {"case": self.case, "b": list(self.b), "sign": self.sign}

    def short(self) -> str:
        sign = {1: "+", 0: "0", -1: "-"}[self.sign]
        if self.case == "nontrivial":
            return f"l={self.l};n={self.n};sign={sign}"
        return f"b={self.b[0]},{self.b[1]},{self.b[2]};sign={sign}"


@dataclass(frozen=True)
class SpectrumEntry:
    value: float
    mult: int
    label: BranchLabel

    def to_dict(self) -> dict:
        return {"value": self.value, "mult": self.mult, "label": self.label.to_dict()}


@dataclass(frozen=True)
class SpectrumSlice:
    alpha: tuple[float, float, float]
    entries: tuple[SpectrumEntry, ...]

    def values(self) -> np.ndarray:
        """Eigenvalues repeated by multiplicity, ascending."""
        return np.array(
            sorted(v for e in self.entries for v in [e.value] * e.mult), dtype=float
        )

    def multiset(self, decimals: int = 9) -> dict[float, int]:
        """Multiplicities keyed by value rounded to ``decimals`` places."""
        out: dict[float, int] = {}
        for e in self.entries:
            key = round(e.value, decimals) + 0.0
            out[key] = out.get(key, 0) + e.mult
        return dict(sorted(out.items()))

    @property
    def total_multiplicity(self) -> int:
        return sum(e.mult for e in self.entries)

    def to_dict(self) -> dict:
        return {"alpha": list(self.alpha), "entries": [e.to_dict() for e in self.entries]}


@dataclass(frozen=True)
class HarmonicForm:
    """Constant 1-form ``alpha`` with its parts along and across ``k``."""

    alpha: tuple[float, float, float]

    def split(self, k: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        a = np.asarray(self.alpha, dtype=float)
        kv = np.asarray(k, dtype=float)
        perp = (a @ kv) / (kv @ kv) * kv
        return a - perp, perp


@dataclass(frozen=True)
class BlockEigenData:
    """Eigen-data of ``[[lam, mu], [mu, -lam]]``.

    ``vplus = (lam+mu+s, -lam+mu+s)`` and ``vminus = (lam+mu-s, -lam+mu-s)``
    are evaluated in cancellation-free form. ``vminus`` vanishes when
    ``lam = 0 < mu``; :meth:`orthonormal_vectors` handles that case.
    """

    lam: float
    mu: float
    s: float
    vplus: np.ndarray
    vminus: np.ndarray

    def orthonormal_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit eigenvectors for ``+s`` and ``-s`` (rotation fallback)."""
        np_, nm = math.hypot(*self.vplus), math.hypot(*self.vminus)
        if np_ == 0.0 and nm == 0.0:
            return np.array([1.0, 0.0]), np.array([0.0, 1.0])
        if np_ >= nm:
            up = self.vplus / np_
            return up, np.array([-up[1], up[0]])
        um = self.vminus / nm
        return np.array([um[1], -um[0]]), um


def _sum_plus_s(x: float, s: float, prod: float) -> float:
    """``x + s`` where ``s^2 - x^2 = prod``, without cancellation."""
    if x >= 0.0:
        return x + s
    denom = s - x
    return prod / denom if denom != 0.0 else 0.0


def _diff_minus_s(x: float, s: float, prod: float) -> float:
    """``x - s`` where ``s^2 - x^2 = prod``, without cancellation."""
    if x <= 0.0:
        return x - s
    denom = x + s
    return -prod / denom if denom != 0.0 else 0.0


def block_eigen_data(lam: float, mu: float) -> BlockEigenData:
    lam, mu = float(lam), float(mu)
    s = math.hypot(lam, mu)
    two = 2.0 * lam * mu
    # s^2 - (lam+mu)^2 = -2 lam mu ; s^2 - (mu-lam)^2 = 2 lam mu
    vplus = np.array([_sum_plus_s(lam + mu, s, -two), _sum_plus_s(mu - lam, s, two)])
    vminus = np.array([_diff_minus_s(lam + mu, s, -two), _diff_minus_s(mu - lam, s, two)])
    return BlockEigenData(lam=lam, mu=mu, s=s, vplus=vplus, vminus=vminus)


# ---------------------------------------------------------------------------
# Closed-form eigenvalues
# ---------------------------------------------------------------------------


def _require_nontrivial(spinc: SpincStructure, what: str) -> None:
    if spinc.is_trivial:
        raise SpectrumError(f"{what} is defined only for khat != 0")


def fibre_phase(spinc, alpha) -> tuple[int, float]:
    """Split ``<k, alpha> / 2 pi = j + f`` with integer ``j`` and ``f`` in [-1/2, 1/2)."""
    spinc = as_spinc(spinc)
    _require_nontrivial(spinc, "fibre_phase")
    theta = float(np.dot(np.asarray(spinc.k, dtype=float), as_alpha(alpha))) / TWO_PI
    j = math.floor(theta + 0.5)
    return j, theta - j


def lambda_l(spinc, alpha, l: int) -> float:
    spinc = as_spinc(spinc)
    _require_nontrivial(spinc, "lambda_l")
    j, f = fibre_phase(spinc, alpha)
    return TWO_PI * ((int(l) + j) + f) / spinc.norm_k


def landau_level(spinc, n: int) -> float:
    """Squared transverse eigenvalue ``2 pi h |k| n``."""
    spinc = as_spinc(spinc)
    _require_nontrivial(spinc, "landau_level")
    return TWO_PI * spinc.h * spinc.norm_k * int(n)


def mu_m(spinc, m: int) -> float:
    spinc = as_spinc(spinc)
    _require_nontrivial(spinc, "mu_m")
    m = int(m)
    if m == 0:
        return 0.0
    return math.copysign(math.sqrt(landau_level(spinc, abs(m) // spinc.h)), m)


def block_matrix(lam: float, mu: float) -> np.ndarray:
    lam, mu = float(lam), float(mu)
    return np.array([[lam, mu], [mu, -lam]])


def clifford_block(beta) -> np.ndarray:
    """``beta_1 E_1 + beta_2 E_2 + beta_3 E_3`` with the Pauli triple."""
    b = np.asarray(beta, dtype=float)
    return np.tensordot(b, PAULI, axes=1)


def dirac_block(beta) -> np.ndarray:
    """The operator on the two-dimensional plane-wave block with momentum ``beta``.

    With Clifford multiplication ``c(v) = i v.E`` the block is
    ``-clifford_block(beta)``; its positive eigenspace is the negative
    eigenspace of :func:`clifford_block`.
    """
    return -clifford_block(beta)


def _sorted_slice(alpha: np.ndarray, entries: Iterable[SpectrumEntry]) -> SpectrumSlice:
    ordered = sorted(entries, key=lambda e: (e.value, e.label))
    return SpectrumSlice(alpha=tuple(float(x) for x in alpha), entries=tuple(ordered))


def fibre_mode_range(spinc, alpha, cutoff: float) -> range:
    """All ``l`` with ``|lambda_l| <= cutoff``, plus a one-step margin."""
    spinc = as_spinc(spinc)
    j, f = fibre_phase(spinc, alpha)
    reach = cutoff * spinc.norm_k / TWO_PI
    lo = math.floor(-f - reach) - j - 1
    hi = math.ceil(-f + reach) - j + 1
    return range(lo, hi + 1)


def enumerate_spectrum(spinc, alpha, cutoff: float) -> SpectrumSlice:
    spinc = as_spinc(spinc)
    alpha = as_alpha(alpha)
    cutoff = float(cutoff)
    if not (cutoff > 0.0 and math.isfinite(cutoff)):
        raise SpectrumError(f"cutoff must be a positive real, got {cutoff}")
    if spinc.is_trivial:
        return _enumerate_trivial(alpha, cutoff)
    return _enumerate_nontrivial(spinc, alpha, cutoff)


def _enumerate_nontrivial(spinc: SpincStructure, alpha: np.ndarray, cutoff: float):
    h = spinc.h
    gap = landau_level(spinc, 1)
    entries = []
    for l in fibre_mode_range(spinc, alpha, cutoff):
        lam = lambda_l(spinc, alpha, l)
        if abs(lam) > cutoff:
            continue
        entries.append(SpectrumEntry(lam, h, BranchLabel("nontrivial", 0, l=l, n=0)))
        n_max = int((cutoff * cutoff - lam * lam) // gap) + 1
        for n in range(1, n_max + 1):
            nu = math.sqrt(lam * lam + gap * n)
            if nu > cutoff:
                break
            entries.append(SpectrumEntry(nu, h, BranchLabel("nontrivial", 1, l=l, n=n)))
            entries.append(SpectrumEntry(-nu, h, BranchLabel("nontrivial", -1, l=l, n=n)))
    return _sorted_slice(alpha, entries)


def lattice_box(alpha: np.ndarray, cutoff: float) -> np.ndarray:
    """Integer points ``b`` with ``|alpha_i + 2 pi b_i| <= cutoff`` for each i."""
    axes = [
        np.arange(math.ceil((-cutoff - a) / TWO_PI), math.floor((cutoff - a) / TWO_PI) + 1)
        for a in alpha
    ]
    if any(len(ax) == 0 for ax in axes):
        return np.zeros((0, 3), dtype=int)
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1).astype(int)


def _enumerate_trivial(alpha: np.ndarray, cutoff: float):
    bs = lattice_box(alpha, cutoff)
    beta = alpha[None, :] + TWO_PI * bs
    norms = np.sqrt(np.einsum("ij,ij->i", beta, beta))
    entries = []
    for b, nb in zip(bs, norms):
        if nb > cutoff:
            continue
        bt = tuple(int(x) for x in b)
        entries.append(SpectrumEntry(float(nb), 1, BranchLabel("trivial", 1, b=bt)))
        entries.append(SpectrumEntry(-float(nb), 1, BranchLabel("trivial", -1, b=bt)))
    return _sorted_slice(alpha, entries)


def kernel_dimension(spinc, alpha) -> int:
    spinc = as_spinc(spinc)
    alpha = as_alpha(alpha)
    if spinc.is_trivial:
        red = alpha - TWO_PI * np.round(alpha / TWO_PI)
        return 2 if float(np.linalg.norm(red)) < ZERO_TOL else 0
    _, f = fibre_phase(spinc, alpha)
    return spinc.h if abs(f) < ZERO_TOL else 0
