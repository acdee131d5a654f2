"""Small-R spectral sections: classification, explicit fields, verification.

Trivial structure: the family splits into 2x2 plane-wave blocks and a
section is fixed by a continuation of the forced boundary values across
each disc ``|beta| < R`` around a kernel point. Nontrivial structure: the
spectrum is constant along the family and a section is a subbundle of the
h-dimensional kernel bundle over the base torus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import SectionError
from .flow_index import sections_exist
from .spectrum_engine import (
    TWO_PI,
    as_spinc,
    enumerate_spectrum,
    kernel_dimension,
)
from .topology import (
    HERMITIAN_TOL,
    ProjectorField,
    disc_solid_angle,
    projector_defects,
    projector_from_bloch,
    round_checked,
    sample_ranks,
    unit_bloch,
)
from .torus_geometry import ParameterLattice, nearest_offplane_points, saturate_and_cosets

ZERO_TOL = 1e-9
DISC_MARGIN = 1.25  # disc fields extend to this multiple of R
MIN_RINGS = 8
MAX_GRID = 256


def as_lattice(ell) -> ParameterLattice:
    if isinstance(ell, ParameterLattice):
        return ell
    return saturate_and_cosets(ell)


# ---------------------------------------------------------------------------
# Descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SectionDescriptor:
    """A small-R section class.

    ``case == "nontrivial"``: ``rank`` and ``chern`` of the kernel subbundle.
    ``case == "trivial"``: ``degrees[i]`` is the degree on coset ``i``.
    """

    case: str
    R: float
    rank: int | None = None
    chern: int | None = None
    degrees: tuple[int, ...] | None = None

    def to_dict(self) -> dict:
        out: dict = {"case": self.case, "R": self.R}
        if self.case == "nontrivial":
            out.update(rank=self.rank, chern=self.chern)
        else:
            out["degrees"] = list(self.degrees)
        return out


@dataclass(frozen=True)
class KDifference:
    delta_rank: int
    delta_c1: int

    def as_tuple(self) -> tuple[int, int]:
        return self.delta_rank, self.delta_c1

    def to_dict(self) -> dict:
        return {"delta_rank": self.delta_rank, "delta_c1": self.delta_c1}


@dataclass(frozen=True)
class Classification:
    case: str
    R_inf: float
    epsilon: float
    lattice: ParameterLattice
    h: int
    descriptors: tuple[SectionDescriptor, ...]
    ranks: tuple[int, ...] = ()
    free_chern_ranks: tuple[int, ...] = ()
    base_coset: int | None = None
    reference: tuple[int, ...] | None = None
    note: str = ""
    certificates: tuple[int, ...] = field(default=())

    def to_dict(self) -> dict:
        out: dict = {
            "case": self.case,
            "R_inf": self.R_inf,
            "epsilon": self.epsilon,
            "lattice": self.lattice.to_dict(),
        }
        if self.case == "nontrivial":
            out.update(
                h=self.h,
                ranks=list(self.ranks),
                free_chern_ranks=list(self.free_chern_ranks),
            )
        else:
            out.update(
                cosets=len(self.lattice.cosets),
                base_coset=self.base_coset,
                reference=list(self.reference),
                free_integers=1 if self.lattice.rank == 2 else 0,
                delta_c1=list(self.certificates),
            )
        if self.note:
            out["note"] = self.note
        out["descriptors"] = [d.to_dict() for d in self.descriptors]
        return out


def _require_sections(spinc, lat: ParameterLattice) -> None:
    if not sections_exist(spinc, lat):
        raise SectionError(
            "spectral sections do not exist: khat pairs nontrivially with the lattice"
        )


def epsilon_bound(spinc, ell) -> float:
    """Upper bound on R below which small-R sections are classified here."""
    spinc = as_spinc(spinc)
    lat = as_lattice(ell)
    _require_sections(spinc, lat)
    if spinc.is_trivial:
        dist, _ = nearest_offplane_points(lat)
        return TWO_PI * dist
    # the spectrum is constant along the family, so alpha = 0 is representative
    cutoff = 1.5 * max(TWO_PI / spinc.norm_k, math.sqrt(TWO_PI * spinc.h * spinc.norm_k))
    vals = np.abs(enumerate_spectrum(spinc, (0.0, 0.0, 0.0), cutoff).values())
    return float(np.min(vals[vals > ZERO_TOL]))


def classify_small_R(spinc, ell, sample_range: int = 1) -> Classification:
    """Index set of a minimal system of small-R sections with sample descriptors.

    Sample descriptors vary each free integer over ``[-sample_range, sample_range]``.
    """
    spinc = as_spinc(spinc)
    lat = as_lattice(ell)
    eps = epsilon_bound(spinc, lat)
    R = eps / 2.0
    samples = range(-sample_range, sample_range + 1)
    if not spinc.is_trivial:
        h = spinc.h
        free = tuple(range(1, h)) if lat.rank == 2 else ()
        descs = []
        for r in range(h + 1):
            for d in samples if r in free else (0,):
                descs.append(SectionDescriptor("nontrivial", R, rank=r, chern=d))
        note = "" if lat.rank == 2 else "one-dimensional base: classes are fixed by rank"
        return Classification(
            case="nontrivial",
            R_inf=0.0,
            epsilon=eps,
            lattice=lat,
            h=h,
            descriptors=tuple(descs),
            ranks=tuple(range(h + 1)),
            free_chern_ranks=free,
            note=note,
        )
    count = len(lat.cosets)
    reference = (0,) * count
    if lat.rank == 1:
        desc = SectionDescriptor("trivial", R, degrees=reference)
        return Classification(
            case="trivial",
            R_inf=0.0,
            epsilon=eps,
            lattice=lat,
            h=0,
            descriptors=(desc,),
            base_coset=0,
            reference=reference,
            note="one-dimensional lattice: a single section class",
            certificates=(0,),
        )
    descs = tuple(
        SectionDescriptor("trivial", R, degrees=(g,) + reference[1:]) for g in samples
    )
    return Classification(
        case="trivial",
        R_inf=0.0,
        epsilon=eps,
        lattice=lat,
        h=0,
        descriptors=descs,
        base_coset=0,
        reference=reference,
        certificates=tuple(d.degrees[0] - reference[0] for d in descs),
    )


def minimal_representative(desc: SectionDescriptor) -> SectionDescriptor:
    """The member of the minimal system equivalent to ``desc``.

    Trivial case: all degree moved to the base coset. Nontrivial case: the
    descriptor itself.
    """
    if desc.case != "trivial":
        return desc
    degrees = (sum(desc.degrees),) + (0,) * (len(desc.degrees) - 1)
    return SectionDescriptor("trivial", desc.R, degrees=degrees)


def k_difference(d1: SectionDescriptor, d2: SectionDescriptor) -> KDifference:
    if d1.case != d2.case:
        raise SectionError("cannot compare descriptors of different cases")
    if d1.case == "nontrivial":
        return KDifference(d1.rank - d2.rank, d1.chern - d2.chern)
    if len(d1.degrees) != len(d2.degrees):
        raise SectionError("descriptors have different coset counts")
    return KDifference(0, sum(d1.degrees) - sum(d2.degrees))


def trivial_descriptor(lattice, R: float, degrees: Mapping[int, int] | Sequence[int]):
    """Descriptor from a coset-index map or a full degree list."""
    lat = as_lattice(lattice)
    count = len(lat.cosets)
    if isinstance(degrees, Mapping):
        bad = [i for i in degrees if not 0 <= int(i) < count]
        if bad:
            raise SectionError(f"coset indices {bad} out of range 0..{count - 1}")
        full = tuple(int(degrees.get(i, 0)) for i in range(count))
    else:
        full = tuple(int(g) for g in degrees)
        if len(full) != count:
            raise SectionError(f"expected {count} degrees, got {len(full)}")
    return SectionDescriptor("trivial", float(R), degrees=full)


# ---------------------------------------------------------------------------
# Boundary values and continuations
# ---------------------------------------------------------------------------


def boundary_projector(beta, frame: np.ndarray | None = None) -> np.ndarray:
    """Negative eigenprojector of ``clifford_block`` at an in-plane momentum.

    ``beta`` has planar coordinates with respect to the first two rows of
    ``frame`` (default: the standard basis). Equals ``(1 + u.E)/2`` with
    ``u = -beta / |beta|``.
    """
    b = np.asarray(beta, dtype=float)
    if b.shape[-1] != 2:
        raise SectionError("beta must be a planar 2-vector")
    norm = np.linalg.norm(b, axis=-1, keepdims=True)
    if np.any(norm == 0.0):
        raise SectionError("boundary_projector is undefined at beta = 0")
    f = np.eye(3) if frame is None else np.asarray(frame, dtype=float)
    u = -(b / norm) @ f[:2]
    return projector_from_bloch(u)


def bubble_continuation(n: int, R: float):
    """Reference continuation ``(r, theta) -> u`` of degree ``n`` on the disc.

    Outer annulus ``R/2 <= r <= R``: meridian from the south pole to the
    boundary value ``-(cos theta, sin theta, 0)``. Inner disc: a bubble
    wrapping the sphere ``n`` times, south pole on its rim. Beyond ``R``
    the boundary value is continued.
    """
    n = int(n)
    R = float(R)
    if not R > 0.0:
        raise SectionError("R must be positive")

    def u(r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        r, theta = np.broadcast_arrays(r, theta)
        phi = np.pi * (2.0 * np.minimum(r, R) - R) / (2.0 * R)
        outer = np.stack(
            [-np.sin(phi) * np.cos(theta), -np.sin(phi) * np.sin(theta), -np.cos(phi)], -1
        )
        big = np.pi * (1.0 - 2.0 * r / R)
        inner = np.stack(
            [
                np.sin(big) * np.cos(n * theta),
                np.sin(big) * np.sin(n * theta),
                -np.cos(big),
            ],
            -1,
        )
        return np.where((r < R / 2.0)[..., None], inner, outer)

    return u


def disc_radii(R: float, N: int) -> np.ndarray:
    return DISC_MARGIN * R * np.arange(N + 1) / N


def disc_field(n: int, R: float, N: int, frame: np.ndarray | None = None, **kw):
    """Polar-grid field of degree ``n`` with ``N`` rings and ``N`` angles."""
    N = int(N)
    if N < 4:
        raise SectionError("disc grids need at least 4 rings")
    f = np.eye(3) if frame is None else np.asarray(frame, dtype=float)
    radii = disc_radii(R, N)
    theta = 2.0 * np.pi * np.arange(N) / N
    rr, tt = np.meshgrid(radii, theta, indexing="ij")
    u_frame = bubble_continuation(n, R)(rr, tt)
    values = projector_from_bloch(u_frame @ f)
    outside = rr >= R
    if np.any(outside):
        planar = np.stack([np.cos(tt[outside]), np.sin(tt[outside])], -1) * rr[outside, None]
        values[outside] = boundary_projector(planar, f)
    return ProjectorField(
        kind="disc", values=values, radii=radii, R=float(R), frame=f, degree=int(n), **kw
    )


def line_field(R: float, N: int, frame: np.ndarray, **kw) -> ProjectorField:
    """Section on a one-dimensional beta line through a kernel point."""
    N = int(N)
    ts = DISC_MARGIN * R * np.linspace(-1.0, 1.0, 2 * N + 1)
    f = np.asarray(frame, dtype=float)
    ang = 0.5 * np.pi * np.clip(ts / R, -1.0, 1.0)
    u_frame = np.stack([-np.sin(ang), np.zeros_like(ang), -np.cos(ang)], -1)
    values = projector_from_bloch(u_frame @ f)[:, None]
    return ProjectorField(kind="line", values=values, radii=ts, R=float(R), frame=f, **kw)


def relative_degree(field: ProjectorField) -> int:
    """Degree of a disc field relative to the degree-0 reference on the same grid."""
    if field.kind != "disc":
        raise SectionError("relative_degree needs a disc field")
    u = unit_bloch(field)
    ref = disc_field(0, field.R, field.shape[0] - 1, field.frame)
    if ref.values.shape != field.values.shape or not np.allclose(ref.radii, field.radii):
        raise SectionError("field grid does not match the reference construction")
    u0 = unit_bloch(ref)
    outside = field.radii >= field.R
    if np.any(outside):
        mismatch = float(np.abs(u[outside] - u0[outside]).max())
        if mismatch > 1e-8:
            raise SectionError(
                f"field boundary deviates from the forced values by {mismatch:.3g}"
            )
    value = (disc_solid_angle(u) - disc_solid_angle(u0)) / (4.0 * math.pi)
    return round_checked(value, "relative degree")


# ---------------------------------------------------------------------------
# Field construction
# ---------------------------------------------------------------------------


def _rings_inside(R: float, N: int) -> int:
    return int(np.sum(disc_radii(R, N)[1:] < R))


def _offplane_patch(lat: ParameterLattice, b, N: int) -> ProjectorField:
    """Forced field for an off-plane block over a fundamental domain of the base."""
    s = np.linspace(0.0, 1.0, N + 1)
    gens = np.asarray(lat.generators, dtype=float)
    if lat.rank == 2:
        s1, s2 = np.meshgrid(s, s, indexing="ij")
        x = s1[..., None] * gens[0] + s2[..., None] * gens[1]
    else:
        x = s[:, None, None] * gens[0][None, None, :]
    beta = TWO_PI * (x + np.asarray(b, dtype=float))
    norm = np.linalg.norm(beta, axis=-1, keepdims=True)
    values = projector_from_bloch(-beta / norm)
    return ProjectorField(
        kind="patch", values=values, b=tuple(int(v) for v in b), meta={"beta": beta}
    )


def build_projector_field_trivial(
    ell, R: float, descriptor: SectionDescriptor, N: int, offplane: int = 4
) -> list[ProjectorField]:
    """Fields of a trivial-structure section: one per coset, then off-plane blocks.

    Disc fields use the beta frame of the lattice plane; off-plane blocks
    (the ``offplane`` nearest ones) are sampled over a fundamental domain.
    """
    lat = as_lattice(ell)
    R = float(R)
    N = int(N)
    if descriptor.case != "trivial":
        raise SectionError("descriptor is not for the trivial structure")
    if len(descriptor.degrees) != len(lat.cosets):
        raise SectionError("descriptor degree count does not match the coset count")
    eps = epsilon_bound((0, 0, 0), lat)
    if not 0.0 < R < eps:
        raise SectionError(f"R={R:.6g} must lie in (0, epsilon={eps:.6g})")
    if N > MAX_GRID:
        raise SectionError(f"grid size {N} exceeds the cap {MAX_GRID}")
    if _rings_inside(R, N) < MIN_RINGS:
        raise SectionError(f"grid N={N} puts fewer than {MIN_RINGS} rings inside the disc")
    frame = lat.orthonormal_frame()
    fields = []
    for idx, (rep, g) in enumerate(zip(lat.cosets, descriptor.degrees)):
        if lat.rank == 2:
            fld = disc_field(g, R, N, frame, coset=idx, b=rep)
        else:
            if g != 0:
                raise SectionError("one-dimensional lattices carry no degrees")
            fld = line_field(R, N, frame, coset=idx, b=rep)
        fields.append(fld)
    _, near = nearest_offplane_points(lat)
    for b in near[:offplane]:
        fields.append(_offplane_patch(lat, b, N))
    return fields


def build_projector_field_nontrivial(h: int, descriptor, N: int) -> ProjectorField:
    """Rank-r projector field with Chern number d on an N x N base-torus grid.

    A degree-d Bloch map (pinch to the sphere, then ``z -> z^d``) gives a
    line in the first two coordinates; ``r - 1`` further coordinate
    directions are added as constant summands.
    """
    h, N = int(h), int(N)
    if isinstance(descriptor, SectionDescriptor):
        r, d = descriptor.rank, descriptor.chern
    else:
        r, d = (int(x) for x in descriptor)
    if h < 1:
        raise SectionError("h must be positive")
    if not 0 <= r <= h:
        raise SectionError(f"rank {r} outside 0..{h}")
    if r in (0, h) and d != 0:
        raise SectionError(f"rank {r} subbundles of the trivial C^{h} bundle have chern 0")
    if N < 4 or N > MAX_GRID:
        raise SectionError(f"grid size must lie in 4..{MAX_GRID}")
    values = np.zeros((N, N, h, h), dtype=complex)
    if r == h:
        values[:] = np.eye(h)
    elif r > 0:
        s = (np.arange(N) + 0.5) / N
        s1, s2 = np.meshgrid(s, s, indexing="ij")
        z = np.tan(np.pi * (s1 - 0.5)) + 1j * np.tan(np.pi * (s2 - 0.5))
        w = z**d if d >= 0 else np.conj(z) ** (-d)
        big = np.abs(w) ** 2
        u = np.stack([2 * w.real, 2 * w.imag, 1.0 - big], -1) / (1.0 + big)[..., None]
        values[..., :2, :2] = projector_from_bloch(u)
        for i in range(2, r + 1):
            values[..., i, i] = 1.0
    return ProjectorField(kind="torus", values=values, degree=d, meta={"rank": r, "h": h})


def build_fields(spinc, ell, descriptor: SectionDescriptor, N: int) -> list[ProjectorField]:
    spinc = as_spinc(spinc)
    if spinc.is_trivial:
        return build_projector_field_trivial(ell, descriptor.R, descriptor, N)
    lat = as_lattice(ell)
    _require_sections(spinc, lat)
    if lat.rank == 1 and descriptor.chern != 0:
        raise SectionError("a one-dimensional base carries no Chern number")
    return [build_projector_field_nontrivial(spinc.h, descriptor, N)]


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


@dataclass
class VerificationReport:
    passed: bool
    checks: dict
    failures: list

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": self.checks, "failures": self.failures}


def _max_jump(field: ProjectorField) -> float:
    v = field.values
    jumps = []
    periodic = {
        "torus": (True, True),
        "disc": (False, True),
        "line": (False, False),
        "patch": (False, False),
    }[field.kind]
    for axis, wrap in enumerate(periodic):
        if v.shape[axis] < 2:
            continue
        if wrap:
            diff = v - np.roll(v, -1, axis=axis)
        else:
            diff = np.diff(v, axis=axis)
        jumps.append(float(np.linalg.norm(diff, ord=2, axis=(-2, -1)).max()))
    return max(jumps, default=0.0)


def _spectral_action(field: ProjectorField, R: float) -> tuple[float, list]:
    """Deviation from identity above R and zero below -R on each 2x2 block."""
    beta = field.beta_points()
    norm = np.linalg.norm(beta, axis=-1)
    mask = norm > R
    if not np.any(mask):
        return 0.0, []
    bhat = beta[mask] / norm[mask][:, None]
    # the block operator is -beta.E, so its positive eigenprojector is (1 - bhat.E)/2
    q_plus = projector_from_bloch(-bhat)
    q_minus = projector_from_bloch(bhat)
    p = field.values[mask]
    dev = np.maximum(
        np.abs(p @ q_plus - q_plus).max(axis=(-1, -2)),
        np.abs(p @ q_minus).max(axis=(-1, -2)),
    )
    idx = np.argwhere(mask)
    bad = [idx[i].tolist() for i in np.nonzero(dev > HERMITIAN_TOL)[0][:5]]
    return float(dev.max()), bad


def verify_spectral_section(
    fields, spinc, ell, R: float, jump_constant: float | None = None, strict: bool = True
) -> VerificationReport:
    """Check the spectral-section conditions on sampled fields.

    Continuity passes when the largest neighbour jump (operator norm) is
    below ``jump_constant / N``; the default constant is ``10 max(1, |deg|)``
    with ``deg`` the disc degree or Chern number. The measured
    ``C = N * jump`` is always reported.
    """
    spinc = as_spinc(spinc)
    lat = as_lattice(ell)
    if isinstance(fields, ProjectorField):
        fields = [fields]
    eps = epsilon_bound(spinc, lat)
    R = float(R)
    if not 0.0 < R < eps:
        raise SectionError(f"R={R:.6g} violates 0 < R < epsilon={eps:.6g}")
    failures: list = []
    per_field = []
    for k, fld in enumerate(fields):
        herm, idem = projector_defects(fld.values)
        ranks = np.unique(sample_ranks(fld.values)).tolist()
        entry = {
            "field": k,
            "kind": fld.kind,
            "hermitian_defect": herm,
            "idempotent_defect": idem,
            "ranks": ranks,
        }
        if herm > HERMITIAN_TOL or idem > HERMITIAN_TOL:
            failures.append({"field": k, "check": "projector", "defects": [herm, idem]})
        if len(ranks) != 1:
            failures.append({"field": k, "check": "constant_rank", "ranks": ranks})
        if spinc.is_trivial:
            dev, bad = _spectral_action(fld, R)
            entry["spectral_action_defect"] = dev
            if bad:
                failures.append({"field": k, "check": "spectral_action", "samples": bad})
            n = fld.shape[0] - 1 if fld.kind in ("disc", "patch") else max(fld.shape[0] // 2, 1)
        else:
            n = fld.shape[0]
        deg = abs(fld.degree or 0)
        limit = 10.0 * max(1, deg) if jump_constant is None else jump_constant
        jump = _max_jump(fld)
        entry.update(max_jump=jump, N=n, C=jump * n, limit=limit)
        if jump * n >= limit:
            failures.append({"field": k, "check": "continuity", "C": jump * n, "limit": limit})
        per_field.append(entry)

    checks: dict = {"R": R, "epsilon": eps, "fields": per_field}
    if not spinc.is_trivial:
        # kernel of dimension h and nothing else in [-R, R] at every base point
        kdim = kernel_dimension(spinc, (0.0, 0.0, 0.0))
        vals = enumerate_spectrum(spinc, (0.0, 0.0, 0.0), max(2.0 * R, eps)).values()
        inside = vals[(np.abs(vals) <= R) & (np.abs(vals) > ZERO_TOL)]
        checks.update(kernel_dimension=kdim, eigenvalues_in_window=int(inside.size))
        if kdim != spinc.h or inside.size:
            failures.append({"check": "spectral_gap", "kernel": kdim, "inside": int(inside.size)})
        for k, fld in enumerate(fields):
            if fld.dim != spinc.h:
                failures.append({"field": k, "check": "block_size", "dim": fld.dim})
    report = VerificationReport(passed=not failures, checks=checks, failures=failures)
    if strict and failures:
        raise SectionError("spectral section verification failed", detail=failures)
    return report
