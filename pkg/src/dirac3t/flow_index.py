"""Spectral flow along integer loops, the family index and section existence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import FlowError
from .spectrum_engine import TWO_PI, BranchLabel, as_spinc, enumerate_spectrum
from .torus_geometry import ParameterLattice, as_intvec, cup_pairing, saturate_and_cosets

DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class Crossing:
    t: float
    branch: BranchLabel
    direction: int
    m: int | None = None

    def to_dict(self) -> dict:
        branch = self.branch.to_dict()
        if self.m is not None:
            branch["m"] = self.m
        return {"t": self.t, "branch": branch, "dir": self.direction}


@dataclass(frozen=True)
class FlowResult:
    loop: tuple[int, int, int]
    flow: int
    crossings: tuple[Crossing, ...]
    symmetric: bool | None = None
    warnings: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        out = {
            "loop": list(self.loop),
            "flow": self.flow,
            "crossings": [c.to_dict() for c in self.crossings],
        }
        if self.symmetric is not None:
            out["symmetric"] = self.symmetric
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out


@dataclass(frozen=True)
class IndexElement:
    generators: tuple[tuple[int, int, int], ...]
    values: tuple[int, ...]

    @property
    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values)

    def to_dict(self) -> dict:
        return {"generators": [list(g) for g in self.generators], "values": list(self.values)}


def spectral_flow_closed_form(spinc, a: Sequence[int]) -> int:
    spinc = as_spinc(spinc)
    return cup_pairing(spinc.khat, as_intvec(a, "loop"))


def _bisect(fn: Callable[[float], float], lo: float, hi: float, iters: int = 60) -> float:
    """Root of ``fn`` in ``(lo, hi]`` with ``fn(lo) <= 0 < fn(hi)`` or reverse."""
    f_lo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if (f_mid <= 0.0) == (f_lo <= 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def track_crossings(
    values: np.ndarray, ts: np.ndarray, fn: Callable[[float], float] | None = None
) -> list[tuple[float, int, bool]]:
    """Signed zero crossings of one sampled branch on the half-open loop.

    A step ``v_j <= 0 < v_{j+1}`` counts +1 and ``v_j > 0 >= v_{j+1}`` counts
    -1. Returns ``(t, direction, near_sample)`` triples; ``t`` is refined by
    bisection on ``fn`` when given, else linearly interpolated.
    """
    out = []
    for j in range(len(ts) - 1):
        v0, v1 = values[j], values[j + 1]
        if v0 <= 0.0 < v1:
            direction = 1
        elif v0 > 0.0 >= v1:
            direction = -1
        else:
            continue
        if v0 == 0.0:
            t = float(ts[j])
        elif v1 == 0.0:
            t = float(ts[j + 1])
        elif fn is not None:
            t = _bisect(fn, float(ts[j]), float(ts[j + 1]))
        else:
            t = float(ts[j] + (ts[j + 1] - ts[j]) * (-v0) / (v1 - v0))
        near = min(abs(t - ts[j]), abs(ts[j + 1] - t)) < DEGENERACY_TOL
        out.append((t % 1.0, direction, near))
    return out


def spectral_flow_numeric(
    spinc, a: Sequence[int], samples: int = 64, base_alpha=(0.0, 0.0, 0.0)
) -> FlowResult:
    """Count zero crossings of the branches along ``alpha(t) = base + 2 pi t a``."""
    spinc = as_spinc(spinc)
    a = as_intvec(a, "loop")
    if a == (0, 0, 0):
        raise FlowError("loop a must be nonzero")
    if int(samples) < 16:
        raise FlowError("samples must be at least 16")
    samples = int(samples)
    base = np.asarray(base_alpha, dtype=float)
    ts = np.linspace(0.0, 1.0, samples + 1)
    if spinc.is_trivial:
        return _trivial_flow(a, base, ts)

    kv = np.asarray(spinc.k, dtype=float)
    norm = spinc.norm_k
    theta0 = float(kv @ base) / TWO_PI
    rate = float(np.dot(spinc.k, a))  # d theta / dt, an integer
    if rate == 0:
        return FlowResult(loop=a, flow=0, crossings=())
    # branches that can vanish on [0, 1]: l + theta(t) = 0
    ends = (-theta0, -theta0 - rate)
    l_range = range(math.floor(min(ends)) - 1, math.ceil(max(ends)) + 2)
    ls = np.array(list(l_range), dtype=float)
    # integer part first: branch l at t = 1 then equals branch l + rate at t = 0 bit for bit
    lam = TWO_PI * ((ls[:, None] + rate * ts[None, :]) + theta0) / norm

    crossings: list[Crossing] = []
    notes: list[str] = []
    for row, l in zip(lam, l_range):
        def fn(t, l=l):
            return TWO_PI * ((l + rate * t) + theta0) / norm

        for t, direction, near in track_crossings(row, ts, fn):
            label = BranchLabel("nontrivial", 0, l=l, n=0)
            if near:
                notes.append(
                    f"crossing of branch l={l} at t={t:.12g} is within "
                    f"{DEGENERACY_TOL:g} of a sample point"
                )
            crossings.extend(
                Crossing(t=t, branch=label, direction=direction, m=m) for m in range(spinc.h)
            )
    crossings.sort(key=lambda c: (c.t, c.branch, c.m))
    return FlowResult(
        loop=a,
        flow=sum(c.direction for c in crossings),
        crossings=tuple(crossings),
        warnings=tuple(notes),
    )


def _trivial_flow(a, base: np.ndarray, ts: np.ndarray) -> FlowResult:
    """Trivial case: every slice is symmetric, so the net flow vanishes."""
    probe = ts[:: max(1, len(ts) // 16)]
    symmetric = True
    for t in probe:
        alpha = base + TWO_PI * t * np.asarray(a, dtype=float)
        vals = enumerate_spectrum((0, 0, 0), alpha, TWO_PI).values()
        if vals.size and not np.allclose(np.sort(vals), np.sort(-vals), rtol=0, atol=1e-12):
            symmetric = False
            break
    if not symmetric:
        raise FlowError("spectrum of a trivial-structure slice is not symmetric")
    return FlowResult(loop=a, flow=0, crossings=(), symmetric=True)


def concatenated_flow(spinc, loops: Sequence[Sequence[int]], samples: int = 64) -> int:
    """Numeric flow of the loops traversed one after another.

    Each leg starts where the previous one ended, so the total is the flow
    around the concatenated closed path.
    """
    spinc = as_spinc(spinc)
    base = np.zeros(3)
    total = 0
    for loop in loops:
        if tuple(loop) == (0, 0, 0):
            continue
        total += spectral_flow_numeric(spinc, loop, samples=samples, base_alpha=base).flow
        base = base + TWO_PI * np.asarray(loop, dtype=float)
    return total


def _as_lattice(ell) -> ParameterLattice:
    if isinstance(ell, ParameterLattice):
        return ell
    return saturate_and_cosets(ell)


def index_element(spinc, ell) -> IndexElement:
    spinc = as_spinc(spinc)
    lat = _as_lattice(ell)
    values = tuple(cup_pairing(spinc.khat, g) for g in lat.generators)
    return IndexElement(generators=lat.generators, values=values)


def sections_exist(spinc, ell) -> bool:
    return index_element(spinc, ell).is_zero
