"""Command-line interface.

Exit codes: 0 on success, 1 on a domain error (a JSON object with ``error``
and ``module`` is written to stdout), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import math
import re
import sys
from typing import Sequence

from . import flow_index, lattice_oracle, spectral_sections, spectrum_engine
from .errors import DomainError
from .parallel import ENV_VAR, pmap, thread_count
from .serialize import dumps, to_csv
from .spectral_sections import relative_degree
from .topology import chern_number
from .torus_geometry import decompose_spinc, saturate_and_cosets

SCHEMA_VERSION = "1"


class UsageError(Exception):
    """Flag combination that argparse cannot express."""


_REAL = re.compile(
    r"(?P<sign>[+-]?)(?P<coef>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)?"
    r"(?P<pi>\*?pi)?(?:/(?P<den>\d+(?:\.\d*)?))?"
)


def parse_real(text: str) -> float:
    """Real literal with optional ``pi`` factor: ``1.5``, ``2pi``, ``-pi/2``, ``0.5*pi``."""
    tok = text.strip().lower()
    m = _REAL.fullmatch(tok)
    if not tok or m is None or (m.group("coef") is None and m.group("pi") is None):
        raise argparse.ArgumentTypeError(f"not a real number: {text!r}")
    value = float(m.group("coef")) if m.group("coef") is not None else 1.0
    if m.group("pi"):
        value *= math.pi
    if m.group("den") is not None:
        den = float(m.group("den"))
        if den == 0.0:
            raise argparse.ArgumentTypeError(f"division by zero in {text!r}")
        value /= den
    return -value if m.group("sign") == "-" else value


def parse_int_vector(text: str) -> tuple[int, int, int]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated integers, got {text!r}")
    try:
        return tuple(int(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def parse_real_vector(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated reals, got {text!r}")
    return tuple(parse_real(p) for p in parts)  # type: ignore[return-value]


def parse_lattice(text: str) -> list[tuple[int, int, int]]:
    vecs = [v for v in text.split(";") if v.strip()]
    if not vecs:
        raise argparse.ArgumentTypeError("lattice needs at least one generator")
    return [parse_int_vector(v) for v in vecs]


def parse_degrees(text: str) -> dict[int, int]:
    out: dict[int, int] = {}
    for item in text.split(","):
        if not item.strip():
            continue
        key, sep, val = item.partition(":")
        if not sep:
            raise argparse.ArgumentTypeError(f"degree entries look like coset:degree, got {item!r}")
        try:
            idx, deg = int(key), int(val)
        except ValueError:
            raise argparse.ArgumentTypeError(f"non-integer degree entry {item!r}") from None
        if idx in out:
            raise argparse.ArgumentTypeError(f"coset {idx} given twice")
        out[idx] = deg
    return out


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def grid_size(text: str) -> int:
    value = positive_int(text)
    if value > spectral_sections.MAX_GRID:
        raise argparse.ArgumentTypeError(f"grid is capped at {spectral_sections.MAX_GRID}")
    return value


# ---------------------------------------------------------------------------
# Commands. Each returns (json payload, csv header, csv rows or None).
# ---------------------------------------------------------------------------


def cmd_spectrum(args):
    spinc = decompose_spinc(args.khat)
    sl = spectrum_engine.enumerate_spectrum(spinc, args.alpha, args.cutoff)
    payload = {
        "schema": SCHEMA_VERSION,
        "spinc": spinc.to_dict(),
        "cutoff": args.cutoff,
        "kernel_dimension": spectrum_engine.kernel_dimension(spinc, args.alpha),
        **sl.to_dict(),
    }
    rows = [(e.value, e.mult, e.label.short()) for e in sl.entries]
    return payload, ("value", "mult", "label"), rows


def cmd_flow(args):
    res = flow_index.spectral_flow_numeric(args.khat, args.loop, samples=args.samples)
    closed = flow_index.spectral_flow_closed_form(args.khat, args.loop)
    payload = {"schema": SCHEMA_VERSION, **res.to_dict(), "closed_form": closed}
    rows = [(c.t, c.branch.l, c.m, c.direction) for c in res.crossings]
    return payload, ("t", "l", "m", "dir"), rows


def cmd_index(args):
    elem = flow_index.index_element(args.khat, args.lattice)
    payload = {"schema": SCHEMA_VERSION, "khat": list(args.khat), **elem.to_dict()}
    rows = [(",".join(map(str, g)), v) for g, v in zip(elem.generators, elem.values)]
    return payload, ("generator", "value"), rows


def cmd_exists(args):
    elem = flow_index.index_element(args.khat, args.lattice)
    payload = {
        "schema": SCHEMA_VERSION,
        "khat": list(args.khat),
        "exists": elem.is_zero,
        "values": list(elem.values),
    }
    return payload, ("exists",), [(elem.is_zero,)]


def cmd_classify(args):
    cls = spectral_sections.classify_small_R(args.khat, args.lattice)
    payload = {"schema": SCHEMA_VERSION, "khat": list(args.khat), **cls.to_dict()}
    rows = []
    for d in cls.descriptors:
        if d.case == "nontrivial":
            rows.append((d.rank, d.chern, ""))
        else:
            rows.append(("", "", " ".join(map(str, d.degrees))))
    return payload, ("rank", "chern", "degrees"), rows


def _field_summary(fld) -> dict:
    out = {"kind": fld.kind, "grid": list(fld.shape), "dim": fld.dim}
    if fld.coset is not None:
        out["coset"] = fld.coset
    if fld.b is not None:
        out["b"] = list(fld.b)
    if fld.kind == "disc":
        out["relative_degree"] = relative_degree(fld)
    if fld.kind == "torus":
        out["chern_number"] = chern_number(fld)
    return out


def cmd_sections_build(args):
    spinc = decompose_spinc(args.khat)
    lat = saturate_and_cosets(args.lattice)
    if spinc.is_trivial:
        if args.rank is not None or args.chern is not None:
            raise UsageError("use --degrees for khat = 0")
        desc = spectral_sections.trivial_descriptor(lat, args.R, args.degrees or {})
    else:
        if args.degrees is not None:
            raise UsageError("use --rank and --chern for khat != 0")
        if args.rank is None:
            raise UsageError("--rank is required for khat != 0")
        desc = spectral_sections.SectionDescriptor(
            "nontrivial", args.R, rank=args.rank, chern=args.chern or 0
        )
    fields = spectral_sections.build_fields(spinc, lat, desc, args.grid)
    report = spectral_sections.verify_spectral_section(fields, spinc, lat, args.R, strict=False)
    payload = {
        "schema": SCHEMA_VERSION,
        "khat": list(args.khat),
        "descriptor": desc.to_dict(),
        "fields": [_field_summary(f) for f in fields],
        "verification": report.to_dict(),
    }
    if args.fields:
        payload["field_values"] = [f.to_dict() for f in fields]
    rows = []
    for k, fld in enumerate(fields):
        if fld.dim == 2:
            rows.extend([k, *row] for row in fld.bloch_csv_rows())
    if not report.passed:
        payload["error"] = "spectral section verification failed"
        payload["module"] = "spectral_sections"
    return payload, ("field", "i", "j", "u1", "u2", "u3"), rows


def cmd_verify_landau(args):
    n_values = [args.grid] + ([2 * args.grid] if args.refine else [])

    def run(n):
        return lattice_oracle.landau_check(
            args.h, args.norm_k, n, args.levels, zero_modes=(n == args.grid)
        )

    reports = pmap(run, n_values, threads=args.threads)
    base = reports[0]
    payload = {"schema": SCHEMA_VERSION, **base.to_dict(), "level_errors": base.level_errors()}
    if args.refine:
        fine = reports[1]
        payload["refined"] = {
            "N": fine.N,
            "max_rel_error": fine.max_rel_error,
            "level_errors": fine.level_errors(),
            "error_ratio": (
                fine.max_rel_error / base.max_rel_error if base.max_rel_error > 0 else None
            ),
        }
    rows = [(v, p) for v, p in zip(base.computed_levels, base.predicted_levels)]
    return payload, ("computed", "predicted"), rows


def cmd_verify_blocks(args):
    rep = lattice_oracle.mode_block_oracle(args.count, seed=args.seed)
    payload = {"schema": SCHEMA_VERSION, **rep.to_dict()}
    return payload, tuple(rep.to_dict()), [tuple(rep.to_dict().values())]


def cmd_verify_flow(args):
    res = flow_index.spectral_flow_numeric(args.khat, args.loop, samples=args.samples)
    closed = flow_index.spectral_flow_closed_form(args.khat, args.loop)
    payload = {
        "schema": SCHEMA_VERSION,
        "khat": list(args.khat),
        "loop": list(args.loop),
        "numeric": res.flow,
        "closed_form": closed,
        "agrees": res.flow == closed,
    }
    return payload, ("numeric", "closed_form", "agrees"), [(res.flow, closed, res.flow == closed)]


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="write output to this path instead of stdout")
    common.add_argument(
        "--threads", type=positive_int, default=None, help=f"worker cap (default: ${ENV_VAR})"
    )

    parser = argparse.ArgumentParser(
        prog="dirac3t",
        description="Spectra, spectral flow and spectral sections of Dirac families on T^3.",
        epilog="Negative vectors need the '=' form, e.g. --alpha=-1,0,0.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def khat(p, required=True):
        p.add_argument("--khat", type=parse_int_vector, required=required, help="a,b,c")

    def lattice(p):
        p.add_argument("--lattice", type=parse_lattice, required=True, help='"v1;v2"')

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalues up to a cutoff")
    khat(p)
    p.add_argument("--alpha", type=parse_real_vector, default=(0.0, 0.0, 0.0))
    p.add_argument("--cutoff", type=parse_real, required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("flow", parents=[common], help="spectral flow along a loop")
    khat(p)
    p.add_argument("--loop", type=parse_int_vector, required=True)
    p.add_argument("--samples", type=int, default=64)
    p.set_defaults(func=cmd_flow)

    for name, func, text in (
        ("index", cmd_index, "index of the family over a lattice"),
        ("exists", cmd_exists, "whether spectral sections exist"),
        ("classify", cmd_classify, "small-R section classes"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        khat(p)
        lattice(p)
        p.set_defaults(func=func)

    sections = sub.add_parser("sections", help="build explicit sections")
    ssub = sections.add_subparsers(dest="action", required=True)
    p = ssub.add_parser("build", parents=[common], help="build and verify projector fields")
    khat(p)
    lattice(p)
    p.add_argument("--R", type=parse_real, required=True)
    p.add_argument("--degrees", type=parse_degrees, help='coset:degree list, e.g. "0:0,1:1"')
    p.add_argument("--rank", type=int)
    p.add_argument("--chern", type=int)
    p.add_argument("--grid", type=grid_size, default=64)
    p.add_argument("--fields", action="store_true", help="include sampled projector values")
    p.set_defaults(func=cmd_sections_build)

    verify = sub.add_parser("verify", help="numerical cross-checks")
    vsub = verify.add_subparsers(dest="check", required=True)
    p = vsub.add_parser("landau", parents=[common], help="flux-lattice Landau levels")
    p.add_argument("--h", type=positive_int, required=True)
    p.add_argument("--grid", type=positive_int, default=None)
    p.add_argument("--levels", type=int, default=3, help="highest Landau index compared")
    p.add_argument("--norm-k", type=parse_real, default=1.0)
    p.add_argument("--refine", action="store_true", help="also run at twice the grid")
    p.set_defaults(func=cmd_verify_landau)

    p = vsub.add_parser("blocks", parents=[common], help="random 2x2 block checks")
    p.add_argument("--count", type=positive_int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_blocks)

    p = vsub.add_parser("flow", parents=[common], help="numeric against closed-form flow")
    khat(p)
    p.add_argument("--loop", type=parse_int_vector, required=True)
    p.add_argument("--samples", type=int, default=64)
    p.set_defaults(func=cmd_verify_flow)
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "func", None) is cmd_verify_landau and args.grid is None:
        args.grid = lattice_oracle.baseline_grid(args.h)
    args.threads = thread_count(args.threads)
    try:
        payload, header, rows = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dirac3t: error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        _emit(dumps(exc.to_dict()), None)
        return 1
    failed = "error" in payload
    if args.format == "csv":
        _emit(to_csv(header, rows), args.out)
    else:
        _emit(dumps(payload), args.out)
    return 1 if failed else 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
