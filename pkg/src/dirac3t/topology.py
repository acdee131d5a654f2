"""Projector fields on grids and their integer invariants.

Degrees of sphere-valued maps are computed from signed solid angles of
triangulated images; first Chern numbers from gauge-invariant plaquette
products of local frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import SectionError
from .spectrum_engine import PAULI

HERMITIAN_TOL = 1e-10
RESIDUAL_TOL = 0.02
# spherical triangles with edges longer than this make the signed area ambiguous
MAX_EDGE_ANGLE = 0.5 * math.pi


@dataclass
class ProjectorField:
    """Samples of a projector family on a structured grid.

    ``values`` has shape ``(n1, n2, d, d)``. Grid kinds:

    ``disc``
        polar grid in the beta plane; axis 0 is the radius
        ``radii[i]`` (starting at 0), axis 1 the angle ``2 pi j / n2``.
    ``line``
        segment of the beta line, ``radii`` holds signed positions, ``n2 = 1``.
    ``torus``
        periodic grid over the base torus with cell centres ``(i + 1/2) / n``.
    ``patch``
        closed (non-periodic) grid over a fundamental domain of the base.
    """

    kind: str
    values: np.ndarray
    radii: np.ndarray | None = None
    R: float | None = None
    frame: np.ndarray | None = None  # rows f1, f2, f3 of the beta plane frame
    coset: int | None = None
    b: tuple[int, int, int] | None = None
    degree: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[0], self.values.shape[1]

    @property
    def dim(self) -> int:
        return self.values.shape[-1]

    def angles(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.shape[1]) / self.shape[1]

    def beta_points(self) -> np.ndarray:
        """Momentum ``beta`` in R^3 at each sample of a disc or line field."""
        if self.kind == "disc":
            th = self.angles()
            planar = np.stack(
                [np.outer(self.radii, np.cos(th)), np.outer(self.radii, np.sin(th))], axis=-1
            )
            return planar @ self.frame[:2]
        if self.kind == "line":
            return self.radii[:, None, None] * self.frame[0][None, None, :]
        if "beta" in self.meta:
            return self.meta["beta"]
        raise SectionError(f"{self.kind} field carries no beta coordinates")

    def to_dict(self) -> dict:
        n1, n2 = self.shape
        flat = self.values.reshape(n1 * n2, self.dim * self.dim)
        out = {
            "kind": self.kind,
            "grid": [n1, n2],
            "dim": self.dim,
            "values": [[[float(z.real), float(z.imag)] for z in row] for row in flat],
        }
        for key in ("R", "coset", "degree"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        if self.b is not None:
            out["b"] = list(self.b)
        return out

    def bloch_csv_rows(self) -> list[list[float]]:
        """``(i, j, u1, u2, u3)`` rows for rank-1 2x2 fields."""
        u = bloch_vectors(self.values)
        n1, n2 = self.shape
        return [
            [i, j, *(float(x) for x in u[i, j])] for i in range(n1) for j in range(n2)
        ]


def projector_from_bloch(u: np.ndarray) -> np.ndarray:
    """``(1 + u.E) / 2`` for Bloch vectors of shape ``(..., 3)``."""
    u = np.asarray(u, dtype=float)
    eye = np.eye(2, dtype=complex)
    return 0.5 * (eye + np.tensordot(u, PAULI, axes=([-1], [0])))


def bloch_vectors(values: np.ndarray) -> np.ndarray:
    """Inverse of :func:`projector_from_bloch`: ``u_i = tr(P E_i)``."""
    return np.einsum("...ab,iba->...i", values, PAULI).real


def projector_defects(values: np.ndarray) -> tuple[float, float]:
    """Largest Hermiticity and idempotency defects over all samples."""
    herm = np.abs(values - np.conj(np.swapaxes(values, -1, -2))).max(initial=0.0)
    idem = np.abs(values @ values - values).max(initial=0.0)
    return float(herm), float(idem)


def sample_ranks(values: np.ndarray) -> np.ndarray:
    return np.rint(np.einsum("...ii->...", values).real).astype(int)


def check_projectors(values: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    herm, idem = projector_defects(values)
    if herm > tol or idem > tol:
        bad = np.argwhere(
            np.abs(values @ values - values).max(axis=(-1, -2)) > tol
        )
        where = bad[0].tolist() if len(bad) else None
        raise SectionError(
            f"samples are not Hermitian idempotents (defects {herm:.3g}, {idem:.3g})",
            detail={"sample": where},
        )


# ---------------------------------------------------------------------------
# Solid angles and degrees
# ---------------------------------------------------------------------------


def solid_angles(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Signed solid angles of spherical triangles (Van Oosterom-Strackee)."""
    num = np.einsum("...i,...i->...", a, np.cross(b, c))
    den = (
        1.0
        + np.einsum("...i,...i->...", a, b)
        + np.einsum("...i,...i->...", b, c)
        + np.einsum("...i,...i->...", c, a)
    )
    return 2.0 * np.arctan2(num, den)


def _edge_angle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.arctan2(
        np.linalg.norm(np.cross(a, b), axis=-1), np.einsum("...i,...i->...", a, b)
    )


def _triangle_sum(tris: Iterable[tuple[np.ndarray, np.ndarray, np.ndarray]]) -> float:
    total = 0.0
    longest = 0.0
    for a, b, c in tris:
        total += float(np.sum(solid_angles(a, b, c)))
        longest = max(
            longest,
            float(np.max(_edge_angle(a, b), initial=0.0)),
            float(np.max(_edge_angle(b, c), initial=0.0)),
            float(np.max(_edge_angle(c, a), initial=0.0)),
        )
    if longest > MAX_EDGE_ANGLE:
        raise SectionError(
            f"grid too coarse: neighbouring Bloch vectors {longest:.3f} rad apart"
        )
    return total


def disc_solid_angle(u: np.ndarray) -> float:
    """Signed area swept by a polar-grid map ``u[i_r, j_theta]``.

    Ring 0 is the centre; triangles are oriented counter-clockwise in the
    ``(x, y)`` plane.
    """
    centre = u[0, 0]
    ring1 = u[1]
    ring1n = np.roll(ring1, -1, axis=0)
    tris = [(np.broadcast_to(centre, ring1.shape), ring1, ring1n)]
    inner, outer = u[1:-1], u[2:]
    inner_n, outer_n = np.roll(inner, -1, axis=1), np.roll(outer, -1, axis=1)
    tris.append((inner, outer, outer_n))
    tris.append((inner, outer_n, inner_n))
    return _triangle_sum(tris)


def torus_degree_float(u: np.ndarray) -> float:
    """Degree of a periodic map ``u[i, j]`` from the 2-torus to the sphere."""
    u_i = np.roll(u, -1, axis=0)
    u_ij = np.roll(u_i, -1, axis=1)
    u_j = np.roll(u, -1, axis=1)
    total = _triangle_sum([(u, u_i, u_ij), (u, u_ij, u_j)])
    return total / (4.0 * math.pi)


def round_checked(value: float, what: str) -> int:
    nearest = round(value)
    if abs(value - nearest) >= RESIDUAL_TOL:
        raise SectionError(
            f"{what} {value:.4f} is not within {RESIDUAL_TOL} of an integer; refine the grid"
        )
    return int(nearest)


def torus_degree(u: np.ndarray) -> int:
    return round_checked(torus_degree_float(u), "torus degree")


def unit_bloch(field: ProjectorField) -> np.ndarray:
    if field.dim != 2:
        raise SectionError("Bloch vectors need 2x2 projector samples")
    check_projectors(field.values)
    ranks = sample_ranks(field.values)
    if np.any(ranks != 1):
        raise SectionError("Bloch vectors need rank-1 projector samples")
    u = bloch_vectors(field.values)
    return u / np.linalg.norm(u, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# Chern numbers
# ---------------------------------------------------------------------------


def _frames(values: np.ndarray, rank: int) -> np.ndarray:
    _, vecs = np.linalg.eigh(values)
    return vecs[..., -rank:]


def _links(frames: np.ndarray, axis: int) -> np.ndarray:
    shifted = np.roll(frames, -1, axis=axis)
    overlap = np.einsum("...ai,...aj->...ij", frames.conj(), shifted)
    det = np.linalg.det(overlap)
    size = np.abs(det)
    if np.any(size < 1e-8):
        raise SectionError("grid too coarse: neighbouring frames are orthogonal")
    return det / size


def chern_number_float(values: np.ndarray) -> float:
    """Plaquette sum of link-variable phases over a periodic grid.

    With this orientation ``(1 + u.E)/2`` has Chern number ``deg u``.
    """
    ranks = sample_ranks(values)
    rank = int(ranks.flat[0])
    if np.any(ranks != rank):
        raise SectionError(
            "projector rank jumps across the grid",
            detail={"sample": np.argwhere(ranks != rank)[0].tolist()},
        )
    if rank == 0 or rank == values.shape[-1]:
        return 0.0
    frames = _frames(values, rank)
    u1 = _links(frames, 0)
    u2 = _links(frames, 1)
    plaq = u1 * np.roll(u2, -1, axis=0) * np.conj(np.roll(u1, -1, axis=1)) * np.conj(u2)
    return float(np.sum(np.angle(plaq))) / (2.0 * math.pi)


def chern_number(field: ProjectorField | np.ndarray) -> int:
    values = field.values if isinstance(field, ProjectorField) else np.asarray(field)
    if isinstance(field, ProjectorField) and field.kind != "torus":
        raise SectionError("chern_number needs a periodic torus-grid field")
    check_projectors(values)
    return round_checked(chern_number_float(values), "Chern number")
