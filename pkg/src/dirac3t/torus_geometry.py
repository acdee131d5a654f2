"""Exact integer and rational lattice algebra on the flat 3-torus.

Everything that ends up as an index, a flow or a degree is computed with
Python integers and :class:`fractions.Fraction`; only lengths, areas and
points on tori are returned as floats.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

from .errors import GeometryError

IntVec = tuple[int, int, int]


def as_intvec(v: Sequence[int], name: str = "vector") -> IntVec:
    try:
        out = tuple(int(x) for x in v)
    except (TypeError, ValueError) as exc:
        raise GeometryError(f"{name} must be an integer 3-vector") from exc
    if len(out) != 3 or any(out[i] != v[i] for i in range(3)):
        raise GeometryError(f"{name} must be an integer 3-vector, got {list(v)}")
    return out  # type: ignore[return-value]


def dot(a: Sequence, b: Sequence):
    return sum(x * y for x, y in zip(a, b))


def cross(a: Sequence, b: Sequence):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def _gcd_all(values) -> int:
    return reduce(math.gcd, (abs(int(v)) for v in values), 0)


# ---------------------------------------------------------------------------
# Spin^c structures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpincStructure:
    """A class ``khat`` in H^2(T^3; Z) = Z^3 split as ``khat = h * k``."""

    khat: IntVec
    h: int
    k: IntVec | None

    @property
    def is_trivial(self) -> bool:
        return self.h == 0

    @property
    def norm_k(self) -> float:
        if self.k is None:
            return 0.0
        return math.sqrt(dot(self.k, self.k))

    @property
    def norm_k_squared(self) -> int:
        return 0 if self.k is None else dot(self.k, self.k)

    def to_dict(self) -> dict:
        return {
            "khat": list(self.khat),
            "h": self.h,
            "k": None if self.k is None else list(self.k),
            "norm_k": self.norm_k,
        }


def decompose_spinc(khat: Sequence[int]) -> SpincStructure:
    khat = as_intvec(khat, "khat")
    h = _gcd_all(khat)
    if h == 0:
        return SpincStructure(khat=khat, h=0, k=None)
    k = tuple(c // h for c in khat)
    return SpincStructure(khat=khat, h=h, k=k)  # type: ignore[arg-type]


def cup_pairing(khat: Sequence[int], a: Sequence[int]) -> int:
    """Evaluate ``khat ∪ a`` on the fundamental class (a dot product here)."""
    return int(dot(as_intvec(khat, "khat"), as_intvec(a, "a")))


# ---------------------------------------------------------------------------
# Small exact linear algebra helpers
# ---------------------------------------------------------------------------


def _det3(m) -> Fraction | int:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def _inv3(m):
    """Inverse of a 3x3 matrix over the rationals (adjugate formula)."""
    det = Fraction(_det3(m))
    if det == 0:
        raise GeometryError("singular 3x3 matrix")
    cof = [[0] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            minor = [
                [m[r][c] for c in range(3) if c != j] for r in range(3) if r != i
            ]
            cof[i][j] = (-1) ** (i + j) * (
                minor[0][0] * minor[1][1] - minor[0][1] * minor[1][0]
            )
    return [[Fraction(cof[j][i]) / det for j in range(3)] for i in range(3)]


def _unimodular_completion(k: IntVec) -> list[list[int]]:
    """Integer matrix with det ±1 whose first column is the primitive ``k``."""
    v = list(k)
    u = [[int(i == j) for j in range(3)] for i in range(3)]
    while sum(1 for x in v if x != 0) > 1:
        i = min((idx for idx in range(3) if v[idx] != 0), key=lambda idx: abs(v[idx]))
        for j in range(3):
            if j != i and v[j] != 0:
                q = v[j] // v[i]
                v[j] -= q * v[i]
                u[j] = [a - q * b for a, b in zip(u[j], u[i])]
    i = next(idx for idx in range(3) if v[idx] != 0)
    if abs(v[i]) != 1:
        raise GeometryError(f"k={list(k)} is not primitive")
    if v[i] < 0:
        u[i] = [-a for a in u[i]]
    u[0], u[i] = u[i], u[0]
    # u @ k = e1, so k is the first column of u^{-1}
    inv = _inv3(u)
    out = [[int(x) for x in row] for row in inv]
    if [out[r][0] for r in range(3)] != list(k):
        raise AssertionError("unimodular completion failed")
    return out


def smith_normal_form(matrix: Sequence[Sequence[int]]):
    """Smith normal form ``U @ M @ V = D`` of an integer matrix.

    Returns ``(D, U, V, V_inv)`` as nested lists of Python ints; ``U`` and
    ``V`` are unimodular and ``D`` is diagonal with ``d_i | d_{i+1}``.
    """
    a = [[int(x) for x in row] for row in matrix]
    m = len(a)
    n = len(a[0]) if m else 0
    u = [[int(i == j) for j in range(m)] for i in range(m)]
    v = [[int(i == j) for j in range(n)] for i in range(n)]
    vinv = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]
        vinv[i], vinv[j] = vinv[j], vinv[i]

    def add_row(dst, src, q):  # row_dst += q * row_src
        a[dst] = [x + q * y for x, y in zip(a[dst], a[src])]
        u[dst] = [x + q * y for x, y in zip(u[dst], u[src])]

    def add_col(dst, src, q):  # col_dst += q * col_src
        for row in a:
            row[dst] += q * row[src]
        for row in v:
            row[dst] += q * row[src]
        vinv[src] = [x - q * y for x, y in zip(vinv[src], vinv[dst])]

    for t in range(min(m, n)):
        entries = [(abs(a[i][j]), i, j) for i in range(t, m) for j in range(t, n) if a[i][j]]
        if not entries:
            break
        _, i, j = min(entries)
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            for i in range(t + 1, m):
                if a[i][t]:
                    add_row(i, t, -(a[i][t] // a[t][t]))
            for j in range(t + 1, n):
                if a[t][j]:
                    add_col(j, t, -(a[t][j] // a[t][t]))
            rest = [(abs(a[i][t]), i, t) for i in range(t + 1, m) if a[i][t]]
            rest += [(abs(a[t][j]), t, j) for j in range(t + 1, n) if a[t][j]]
            if rest:
                _, i, j = min(rest)
                if j == t:
                    swap_rows(t, i)
                else:
                    swap_cols(t, j)
                continue
            bad = [
                i
                for i in range(t + 1, m)
                for j in range(t + 1, n)
                if a[i][j] % a[t][t]
            ]
            if bad:
                add_row(t, bad[0], 1)
                continue
            break
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]
    return a, u, v, vinv


# ---------------------------------------------------------------------------
# Projected lattice and the circle-bundle trivialisation
# ---------------------------------------------------------------------------


def _proj_exact(z: Sequence[int], k: IntVec) -> tuple[Fraction, ...]:
    kk = dot(k, k)
    t = Fraction(dot(z, k), kk)
    return tuple(Fraction(zi) - t * ki for zi, ki in zip(z, k))


def _metric(z1, z2, k: IntVec) -> Fraction:
    return Fraction(dot(z1, z2)) - Fraction(dot(z1, k) * dot(z2, k), dot(k, k))


@dataclass(frozen=True)
class ProjectedLattice:
    """Reduced basis ``w1, w2`` of ``pi_k(Z^3)`` inside the plane ``W ⊥ k``.

    ``z1, z2`` are integer preimages of ``w1, w2`` and ``c1, c2`` the
    offsets with ``w_i - c_i k`` integral.
    """

    k: IntVec
    w1_exact: tuple[Fraction, Fraction, Fraction]
    w2_exact: tuple[Fraction, Fraction, Fraction]
    z1: IntVec
    z2: IntVec
    c1_exact: Fraction
    c2_exact: Fraction

    @property
    def w1(self) -> np.ndarray:
        return np.array([float(x) for x in self.w1_exact])

    @property
    def w2(self) -> np.ndarray:
        return np.array([float(x) for x in self.w2_exact])

    @property
    def c1(self) -> float:
        return float(self.c1_exact)

    @property
    def c2(self) -> float:
        return float(self.c2_exact)

    @property
    def area(self) -> float:
        g11 = dot(self.w1_exact, self.w1_exact)
        g22 = dot(self.w2_exact, self.w2_exact)
        g12 = dot(self.w1_exact, self.w2_exact)
        return math.sqrt(g11 * g22 - g12 * g12)

    @property
    def frame(self) -> np.ndarray:
        """Columns ``w1, w2, k``; maps fibre coordinates to R^3."""
        return np.column_stack([self.w1, self.w2, np.array(self.k, dtype=float)])

    def to_dict(self) -> dict:
        return {
            "k": list(self.k),
            "w1": self.w1.tolist(),
            "w2": self.w2.tolist(),
            "z1": list(self.z1),
            "z2": list(self.z2),
            "c1": self.c1,
            "c2": self.c2,
            "area": self.area,
        }

    def coordinates(self, x) -> np.ndarray:
        """Solve ``x = chi1 w1 + chi2 w2 + chi k`` for ``(chi1, chi2, chi)``."""
        return np.linalg.solve(self.frame, np.asarray(x, dtype=float))

    def point(self, chi) -> np.ndarray:
        return self.frame @ np.asarray(chi, dtype=float)


def _lex_key(vec):
    return tuple(vec)


def projected_lattice(k: Sequence[int]) -> ProjectedLattice:
    k = as_intvec(k, "k")
    if k == (0, 0, 0):
        raise GeometryError("k must be nonzero")
    if _gcd_all(k) != 1:
        raise GeometryError(f"k={list(k)} is not primitive")
    basis = _unimodular_completion(k)
    b1 = tuple(basis[r][1] for r in range(3))
    b2 = tuple(basis[r][2] for r in range(3))

    # Lagrange-Gauss reduction with the exact projected metric.
    n1, n2 = _metric(b1, b1, k), _metric(b2, b2, k)
    if n2 < n1:
        b1, b2, n1, n2 = b2, b1, n2, n1
    while True:
        mu = _metric(b1, b2, k) / n1
        q = math.floor(mu + Fraction(1, 2))
        b2 = tuple(x - q * y for x, y in zip(b2, b1))
        n2 = _metric(b2, b2, k)
        if n2 >= n1:
            break
        b1, b2, n1, n2 = b2, b1, n2, n1

    # Canonical choice among equally short vectors.
    combos = []
    for i, j in itertools.product(range(-3, 4), repeat=2):
        if (i, j) == (0, 0):
            continue
        z = tuple(i * x + j * y for x, y in zip(b1, b2))
        combos.append(((i, j), z, _metric(z, z, k), _proj_exact(z, k)))
    shortest = min(c[2] for c in combos)
    first = max((c for c in combos if c[2] == shortest), key=lambda c: _lex_key(c[3]))
    (i1, j1), z_first, _, w_first = first
    kf = tuple(Fraction(x) for x in k)
    seconds = []
    for (i, j), z, norm, w in combos:
        if abs(i1 * j - j1 * i) != 1:
            continue
        if _det3([w_first, w, kf]) <= 0:
            continue
        seconds.append((norm, w, z))
    best_norm = min(s[0] for s in seconds)
    _, w_second, z_second = max(
        (s for s in seconds if s[0] == best_norm), key=lambda s: _lex_key(s[1])
    )

    kk = dot(k, k)
    # w_i - c_i k must be integral; w_i = z_i - (z_i.k/|k|^2) k fixes the sign.
    c1 = (-Fraction(dot(z_first, k), kk)) % 1
    c2 = (-Fraction(dot(z_second, k), kk)) % 1
    return ProjectedLattice(
        k=k,
        w1_exact=w_first,  # type: ignore[arg-type]
        w2_exact=w_second,  # type: ignore[arg-type]
        z1=z_first,  # type: ignore[arg-type]
        z2=z_second,  # type: ignore[arg-type]
        c1_exact=c1,
        c2_exact=c2,
    )


class TrivializedPoint(NamedTuple):
    torus: tuple[float, float]  # coordinates of [chi1 w1 + chi2 w2] in T_Lambda
    plane_point: np.ndarray  # representative of that class in W
    fiber: float  # circle coordinate in R/Z


def _lattice_for(data) -> ProjectedLattice:
    if isinstance(data, ProjectedLattice):
        return data
    if isinstance(data, SpincStructure):
        if data.is_trivial:
            raise GeometryError("the trivial Spin^c structure has no fibration")
        return projected_lattice(data.k)
    return projected_lattice(data)


def trivialize(data, chi) -> TrivializedPoint:
    """Map ``[chi1 w1 + chi2 w2 + chi k]`` to ``T_Lambda x R/Z``."""
    lat = _lattice_for(data)
    chi1, chi2, chi3 = (float(x) for x in chi)
    t1, t2 = chi1 % 1.0, chi2 % 1.0
    fiber = (lat.c1 * chi1 + lat.c2 * chi2 + chi3) % 1.0
    return TrivializedPoint((t1, t2), t1 * lat.w1 + t2 * lat.w2, fiber)


def untrivialize(data, torus, fiber) -> np.ndarray:
    """Inverse of :func:`trivialize`, returning fibre coordinates ``chi``."""
    lat = _lattice_for(data)
    t1, t2 = (float(x) for x in torus)
    return np.array([t1, t2, float(fiber) - lat.c1 * t1 - lat.c2 * t2])


@dataclass(frozen=True)
class FiberFormSplit:
    l: int
    omega_par: np.ndarray
    omega_perp: np.ndarray
    total_exact: tuple[Fraction, Fraction, Fraction]

    @property
    def total(self) -> np.ndarray:
        return np.array([float(x) for x in self.total_exact])


def fiber_form_split(data, l: int) -> FiberFormSplit:
    """Split ``l (c1 dchi1 + c2 dchi2 + dchi)`` into parts along and across ``W``.

    The covector is expressed in standard coordinates through the dual
    basis of ``(w1, w2, k)``.
    """
    lat = _lattice_for(data)
    l = int(l)
    kf = tuple(Fraction(x) for x in lat.k)
    m = [[lat.w1_exact[r], lat.w2_exact[r], kf[r]] for r in range(3)]
    dual = _inv3(m)  # rows are d chi1, d chi2, d chi
    coeffs = (lat.c1_exact, lat.c2_exact, Fraction(1))
    total = tuple(
        l * sum(coeffs[i] * dual[i][col] for i in range(3)) for col in range(3)
    )
    kk = dot(lat.k, lat.k)
    t = dot(total, kf) / kk
    perp = tuple(t * x for x in kf)
    par = tuple(a - b for a, b in zip(total, perp))
    return FiberFormSplit(
        l=l,
        omega_par=np.array([float(x) for x in par]),
        omega_perp=np.array([float(x) for x in perp]),
        total_exact=total,  # type: ignore[arg-type]
    )


# ---------------------------------------------------------------------------
# Parameter lattices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParameterLattice:
    """A rank 1 or 2 sublattice ``l`` of Z^3 with its saturation ``l_Z``."""

    generators: tuple[IntVec, ...]
    saturation: tuple[IntVec, ...]
    invariants: tuple[int, ...]
    cosets: tuple[IntVec, ...] = field(repr=False)
    snf_basis: tuple[IntVec, ...] = field(repr=False, default=())

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def index(self) -> int:
        return math.prod(self.invariants)

    @property
    def normal(self) -> IntVec | None:
        """Primitive integer normal of the plane ``l ⊗ R`` (rank 2 only)."""
        if self.rank != 2:
            return None
        n = cross(*self.saturation)
        g = _gcd_all(n)
        return tuple(x // g for x in n)  # type: ignore[return-value]

    def orthonormal_frame(self) -> np.ndarray:
        """Rows ``f1, f2, f3``: positively oriented, ``f1`` (and ``f2``) span ``l ⊗ R``."""
        s = [np.array(v, dtype=float) for v in self.saturation]
        f1 = s[0] / np.linalg.norm(s[0])
        if self.rank == 2:
            f2 = s[1] - (s[1] @ f1) * f1
            f2 /= np.linalg.norm(f2)
        else:
            trial = np.eye(3)[int(np.argmin(np.abs(f1)))]
            f2 = trial - (trial @ f1) * f1
            f2 /= np.linalg.norm(f2)
        f3 = np.cross(f1, f2)
        return np.vstack([f1, f2, f3])

    def saturation_coordinates(self, b: Sequence[int]) -> tuple[Fraction, ...] | None:
        """Rational coordinates of ``b`` in the saturation basis, or None."""
        return _solve_in_span(self.saturation, b)

    def in_plane(self, b: Sequence[int]) -> bool:
        return self.saturation_coordinates(b) is not None

    def coset_index(self, b: Sequence[int]) -> int:
        """Index into :attr:`cosets` of the class of ``b ∈ l_Z`` modulo ``l``."""
        coords = _solve_in_span(self.snf_basis, b)
        if coords is None or any(c.denominator != 1 for c in coords):
            raise GeometryError(f"{list(b)} does not lie in the saturation l_Z")
        key = tuple(int(c) % d for c, d in zip(coords, self.invariants))
        return _coset_keys(self.invariants).index(key)

    def to_dict(self) -> dict:
        return {
            "generators": [list(g) for g in self.generators],
            "saturation": [list(s) for s in self.saturation],
            "invariants": list(self.invariants),
            "index": self.index,
            "cosets": [list(c) for c in self.cosets],
        }


def _coset_keys(invariants: Sequence[int]) -> list[tuple[int, ...]]:
    return list(itertools.product(*(range(d) for d in invariants)))


def _solve_in_span(basis, b) -> tuple[Fraction, ...] | None:
    """Rational coordinates of ``b`` in ``basis`` (1 or 2 rows), or None."""
    s = basis
    r = len(s)
    gram = [[Fraction(dot(s[i], s[j])) for j in range(r)] for i in range(r)]
    rhs = [Fraction(dot(s[i], b)) for i in range(r)]
    if r == 1:
        coords = (rhs[0] / gram[0][0],)
    else:
        det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0]
        coords = (
            (rhs[0] * gram[1][1] - rhs[1] * gram[0][1]) / det,
            (gram[0][0] * rhs[1] - gram[1][0] * rhs[0]) / det,
        )
    back = tuple(sum(c * s[i][col] for i, c in enumerate(coords)) for col in range(3))
    if any(Fraction(x) != y for x, y in zip(b, back)):
        return None
    return coords


def hermite_normal_form(rows: Sequence[Sequence[int]]) -> list[list[int]]:
    """Row-style Hermite normal form of a full-row-rank integer matrix."""
    a = [[int(x) for x in row] for row in rows]
    m, n = len(a), len(a[0])
    r = 0
    for col in range(n):
        if r == m:
            break
        while True:
            nz = [i for i in range(r, m) if a[i][col]]
            if not nz:
                break
            p = min(nz, key=lambda i: abs(a[i][col]))
            a[r], a[p] = a[p], a[r]
            done = True
            for i in range(r + 1, m):
                if a[i][col]:
                    q = a[i][col] // a[r][col]
                    a[i] = [x - q * y for x, y in zip(a[i], a[r])]
                    done = done and a[i][col] == 0
            if done:
                break
        if a[r][col] == 0:
            continue
        if a[r][col] < 0:
            a[r] = [-x for x in a[r]]
        for i in range(r):
            q = a[i][col] // a[r][col]
            a[i] = [x - q * y for x, y in zip(a[i], a[r])]
        r += 1
    return a


def saturate_and_cosets(generators: Sequence[Sequence[int]]) -> ParameterLattice:
    gens = tuple(as_intvec(g, "generator") for g in generators)
    if len(gens) == 0:
        raise GeometryError("a parameter lattice needs at least one generator")
    if len(gens) > 2:
        raise GeometryError("parameter lattices must have non-maximal rank (at most 2)")
    if len(gens) == 1 and gens[0] == (0, 0, 0):
        raise GeometryError("generator must be nonzero")
    if len(gens) == 2 and cross(*gens) == (0, 0, 0):
        raise GeometryError("generators are linearly dependent")
    d, _, _, vinv = smith_normal_form(gens)
    r = len(gens)
    invariants = tuple(d[i][i] for i in range(r))
    # rows of V^{-1}: gens = U^{-1} D V^{-1}, so d_i * vinv[i] span l
    snf_basis = tuple(tuple(vinv[i]) for i in range(r))
    cosets = tuple(
        tuple(sum(a * snf_basis[i][col] for i, a in enumerate(key)) for col in range(3))
        for key in _coset_keys(invariants)
    )
    saturation = tuple(tuple(row) for row in hermite_normal_form(snf_basis))
    return ParameterLattice(
        generators=gens,
        saturation=saturation,  # type: ignore[arg-type]
        invariants=invariants,
        cosets=cosets,  # type: ignore[arg-type]
        snf_basis=snf_basis,  # type: ignore[arg-type]
    )


def distance_to_span(b: Sequence[int], lattice: ParameterLattice) -> float:
    """Euclidean distance from ``b`` to the subspace ``l ⊗ R``."""
    f = lattice.orthonormal_frame()[: lattice.rank]
    v = np.asarray(b, dtype=float)
    return float(np.linalg.norm(v - f.T @ (f @ v)))


def nearest_offplane_points(lattice: ParameterLattice) -> tuple[float, list[IntVec]]:
    """Minimal distance from ``l ⊗ R`` to integer points off it, and minimisers.

    Any off-plane point can be translated by ``l_Z`` into the fundamental cell
    of the saturation, so the search box radius below bounds every minimiser.
    """
    trial = [e for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1)) if not lattice.in_plane(e)]
    upper = min(distance_to_span(e, lattice) for e in trial)
    cell = sum(math.sqrt(dot(s, s)) for s in lattice.saturation) / 2
    radius = math.ceil(math.sqrt(upper**2 + cell**2)) + 1
    axis = np.arange(-radius, radius + 1)
    box = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), -1).reshape(-1, 3)
    # exact integer membership test for l tensor R
    if lattice.rank == 2:
        off = box @ np.asarray(lattice.normal) != 0
    else:
        off = np.any(np.cross(box, np.asarray(lattice.generators[0])) != 0, axis=1)
    box = box[off]
    f = lattice.orthonormal_frame()[: lattice.rank]
    v = box.astype(float)
    dist = np.linalg.norm(v - (v @ f.T) @ f, axis=1)
    best = float(dist.min())
    found = [tuple(int(x) for x in b) for b in box[dist <= best + 1e-12]]
    return best, sorted(found)
