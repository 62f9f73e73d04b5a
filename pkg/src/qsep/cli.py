"""Command-line interface.

Exit codes: 0 success, 2 bad parameter / infeasible construction,
3 I/O failure, 4 schema violation, 5 dimension mismatch.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bipartite import BIPARTITE, DimensionMismatchError
from .io import SchemaError, atomic_write, digest, dumps, format_float, load_family, load_state, read_doc, save_family, save_state
from .io import family_from_doc, state_from_doc
from .measurements import (
    InfeasibleParameterError,
    UnsupportedDimensionError,
    build_gsic,
    build_mubs,
    build_mums,
    max_feasible_a,
    max_feasible_kappa,
    validate_family,
    _is_prime,
)
from .multipartite import MULTIPARTITE, STRATEGIES, ExhaustiveGuardError
from .states import FAMILIES, StateSpec, all_cuts, generate, ppt_check

EXIT_OK, EXIT_PARAM, EXIT_IO, EXIT_SCHEMA, EXIT_DIMS = 0, 2, 3, 4, 5
CRITERIA = tuple(BIPARTITE) + tuple(MULTIPARTITE)
SWEEP_FAMILIES = ("isotropic", "embedded-max-entangled", "ghz")


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def resolve_seed(flag: int | None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("QSEP_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise CLIError(f"QSEP_SEED must be an integer, got {env!r}", EXIT_PARAM) from None


def _dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(x) for x in text.replace("x", ",").split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must look like 2,3 (got {text!r})") from None
    if not dims:
        raise argparse.ArgumentTypeError("dims must not be empty")
    return dims


def _grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive stop) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise argparse.ArgumentTypeError("grid step must be positive")
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + k * step, 12) for k in range(max(n, 0))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse grid {text!r}") from None


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        atomic_write(out, text)


# -- families ---------------------------------------------------------------


def build_family(kind: str, d: int, kappa: float | None = None, a: float | None = None):
    if kind == "mub":
        return build_mubs(d)
    if kind == "mum":
        if kappa is None:
            return build_mubs(d).as_mum() if _is_prime(d) else build_mums(d, max_feasible_kappa(d))
        return build_mums(d, kappa)
    if kind == "gsic":
        return build_gsic(d, max_feasible_a(d) if a is None else a)
    raise CLIError(f"unknown family kind {kind!r}", EXIT_PARAM)


def family_kind_for(criterion: str) -> str:
    if criterion.endswith("-mub"):
        return "mub"
    if criterion.endswith("-gsic"):
        return "gsic"
    return "mum"


def _per_party(values, n):
    if values is None:
        return [None] * n
    if len(values) == 1:
        return list(values) * n
    if len(values) != n:
        raise CLIError(f"expected 1 or {n} parameter values, got {len(values)}", EXIT_PARAM)
    return list(values)


def default_families(criterion: str, dims, kappa=None, a=None):
    kind = family_kind_for(criterion)
    ks, As = _per_party(kappa, len(dims)), _per_party(a, len(dims))
    return [build_family(kind, d, ks[i], As[i]) for i, d in enumerate(dims)]


def run_criterion(criterion: str, rho, families, mode: str = "exact", strategy: str = "greedy"):
    if criterion in BIPARTITE:
        if len(families) != 2:
            raise CLIError(f"{criterion} needs exactly two families, got {len(families)}", EXIT_SCHEMA)
        return BIPARTITE[criterion](rho, families[0], families[1], mode)
    if criterion in MULTIPARTITE:
        return MULTIPARTITE[criterion](rho, families, strategy)
    raise CLIError(f"unknown criterion {criterion!r}", EXIT_PARAM)


def _ppt_min(rho) -> float:
    return min(ppt_check(rho, cut).min_eigenvalue for cut in all_cuts(len(rho.dims)))


# -- commands ---------------------------------------------------------------


def cmd_construct(args) -> int:
    try:
        fam = build_family(args.kind, args.dim, args.kappa, args.a)
    except InfeasibleParameterError as exc:
        raise CLIError(str(exc), EXIT_PARAM) from None
    except (UnsupportedDimensionError, ValueError) as exc:
        raise CLIError(str(exc), EXIT_PARAM) from None
    meta = {"tool_version": __version__}
    if args.out:
        save_family(args.out, fam, meta)
    else:
        from .io import family_to_doc

        sys.stdout.write(dumps(family_to_doc(fam, meta)))
    print(f"constructed {args.kind} family on C^{args.dim}: {fam.count} measurement(s)", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    doc = read_doc(args.path)
    if isinstance(doc, dict) and doc.get("kind") == "state":
        rho = state_from_doc(doc)
        print(f"state: PASS (dims {list(rho.dims)})")
        return EXIT_OK
    fam = family_from_doc(doc, validate=False)
    report = validate_family(fam)
    print(report)
    return EXIT_OK if report.passed else EXIT_SCHEMA


def cmd_generate(args) -> int:
    params = {}
    if args.p is not None:
        params["p"] = args.p
    if args.terms is not None:
        params["terms"] = args.terms
    try:
        spec = StateSpec(args.family, args.dims, params, resolve_seed(args.seed))
        rho = generate(spec)
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_PARAM) from None
    meta = {"spec": spec.to_dict(), "prng": "numpy.PCG64", "tool_version": __version__}
    if args.out:
        save_state(args.out, rho, meta)
    else:
        from .io import state_to_doc

        sys.stdout.write(dumps(state_to_doc(rho, meta)))
    return EXIT_OK


def _load_inputs(args):
    rho = load_state(args.state)
    families = [load_family(p) for p in args.family]
    dims = [f.dim for f in families]
    if list(rho.dims) != dims:
        raise CLIError(f"dimension mismatch: state dims {list(rho.dims)} vs family dims {dims}", EXIT_DIMS)
    return rho, families


def _report(args, results, extra=None, started=None) -> dict:
    inputs = {"state": digest(args.state)}
    inputs.update({f"family[{i}]": digest(p) for i, p in enumerate(args.family)})
    report = {
        "tool_version": __version__,
        "seed": resolve_seed(args.seed),
        "input_digests": inputs,
        "results": [r.to_dict() for r in results],
    }
    if extra:
        report.update(extra)
    if getattr(args, "timing", False) and started is not None:
        report["timing_seconds"] = time.perf_counter() - started
    return report


def cmd_evaluate(args) -> int:
    started = time.perf_counter()
    rho, families = _load_inputs(args)
    result = run_criterion(args.criterion, rho, families, args.mode, args.strategy)
    report = _report(args, [result], {"mode": args.mode, "strategy": args.strategy}, started)
    _emit(dumps(report), args.out)
    state = "VIOLATED (entangled)" if result.violated else "not violated"
    print(f"{result.theorem}: lhs={result.lhs:.9f} bound={result.bound:.9f} {state}", file=sys.stderr)
    return EXIT_OK


def cmd_compare(args) -> int:
    started = time.perf_counter()
    rho, families = _load_inputs(args)
    results = [run_criterion(c, rho, families, args.mode) for c in ("t1", "t2", "sr")]
    _emit(dumps(_report(args, results, {"mode": args.mode}, started)), args.out)
    for r in results:
        print(f"{r.theorem}: lhs={r.lhs:.9f} bound={r.bound:.9f} violated={r.violated}", file=sys.stderr)
    return EXIT_OK


def _threshold(params, gaps):
    """First sign change of ``lhs - bound`` (violation boundary) on the grid."""
    flags = [g > 0 for g in gaps]
    for k in range(1, len(params)):
        if flags[k] != flags[k - 1]:
            g0, g1 = gaps[k - 1], gaps[k]
            root = params[k - 1] + (params[k] - params[k - 1]) * (g0 / (g0 - g1)) if g0 != g1 else params[k]
            return {"bracket": [params[k - 1], params[k]], "interpolated": root}
    return None


def cmd_sweep(args) -> int:
    if not args.grid:
        raise CLIError("parameter grid is empty", EXIT_PARAM)
    criteria = [c.strip() for c in args.criteria.split(",") if c.strip()]
    bad = [c for c in criteria if c not in CRITERIA]
    if not criteria or bad:
        raise CLIError(f"unknown criteria {bad}; choose from {list(CRITERIA)}", EXIT_PARAM)
    seed = resolve_seed(args.seed)
    try:
        if args.family:
            loaded = [load_family(f) for f in args.family]
            if [f.dim for f in loaded] != list(args.dims):
                raise CLIError(f"dimension mismatch: sweep dims {list(args.dims)} vs family dims {[f.dim for f in loaded]}", EXIT_DIMS)
            fams = {c: loaded for c in criteria}
        else:
            fams = {c: default_families(c, args.dims, args.kappa, args.a) for c in criteria}
    except (InfeasibleParameterError, UnsupportedDimensionError, ValueError) as exc:
        raise CLIError(str(exc), EXIT_PARAM) from None

    def point(p):
        try:
            rho = generate(StateSpec(args.state_family, args.dims, {"p": p}, seed))
        except ValueError as exc:
            raise CLIError(str(exc), EXIT_PARAM) from None
        row = {"p": p}
        for c in criteria:
            r = run_criterion(c, rho, fams[c], args.mode, args.strategy)
            row[c] = (r.lhs, r.bound, r.violated)
        row["ppt_min_eig"] = _ppt_min(rho)
        return row

    if args.jobs > 1:
        with ThreadPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(point, args.grid))
    else:
        rows = [point(p) for p in args.grid]

    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["p"]
    for c in criteria:
        header += [f"{c}_lhs", f"{c}_bound", f"{c}_violated"]
    w.writerow(header + ["ppt", "ppt_min_eig"])
    for row in rows:
        line = [format_float(row["p"])]
        for c in criteria:
            lhs, bound, v = row[c]
            line += [format_float(lhs), format_float(bound), "true" if v else "false"]
        ppt = row["ppt_min_eig"] >= -1e-10
        w.writerow(line + ["PPT" if ppt else "NPT", format_float(row["ppt_min_eig"])])
    atomic_write(args.out, buf.getvalue())

    params = [r["p"] for r in rows]
    thresholds = {c: _threshold(params, [r[c][0] - r[c][1] - 1e-9 for r in rows]) for c in criteria}
    thresholds["ppt"] = _threshold(params, [-(r["ppt_min_eig"] + 1e-10) for r in rows])
    windows = {}
    for a in criteria:
        for b in criteria:
            if a == b:
                continue
            hits = [r["p"] for r in rows if r[a][2] and not r[b][2]]
            if hits:
                windows[f"{a} not {b}"] = {"min": min(hits), "max": max(hits), "points": len(hits)}
    summary = {
        "tool_version": __version__,
        "seed": seed,
        "state_family": args.state_family,
        "dims": list(args.dims),
        "criteria": criteria,
        "grid_points": len(rows),
        "thresholds": thresholds,
        "detection_windows": windows,
        "families": {c: [{"kind": f.kind, "dim": f.dim, "parameter": float(f.parameter)} for f in fams[c]] for c in criteria},
    }
    text = dumps(summary)
    if args.summary:
        atomic_write(args.summary, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qsep", description="Entanglement detection with MUMs, MUBs and GSIC-POVMs.")
    ap.add_argument("--version", action="version", version=f"qsep {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="build a measurement family and write it as JSON")
    c.add_argument("kind", choices=("mub", "mum", "gsic"))
    c.add_argument("--dim", type=int, required=True)
    c.add_argument("--kappa", type=float)
    c.add_argument("--a", type=float)
    c.add_argument("--out")
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("validate", help="check a family or state file")
    v.add_argument("path")
    v.set_defaults(func=cmd_validate)

    g = sub.add_parser("generate", help="generate a test state")
    g.add_argument("--family", required=True, choices=FAMILIES)
    g.add_argument("--dims", type=_dims, required=True)
    g.add_argument("--p", type=float)
    g.add_argument("--terms", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    for name, func, helptext in (
        ("evaluate", cmd_evaluate, "evaluate one criterion on a state"),
        ("compare", cmd_compare, "evaluate t1, t2 and the earlier equal-count bound side by side"),
    ):
        e = sub.add_parser(name, help=helptext)
        if name == "evaluate":
            e.add_argument("criterion", choices=CRITERIA)
        e.add_argument("--state", required=True)
        e.add_argument("--family", action="append", required=True, help="family file, once per party in order")
        e.add_argument("--mode", choices=("exact", "greedy"), default="exact")
        e.add_argument("--strategy", choices=STRATEGIES, default="greedy")
        e.add_argument("--seed", type=int)
        e.add_argument("--timing", action="store_true", help="record wall time (makes reports non-reproducible)")
        e.add_argument("--out")
        e.set_defaults(func=func)

    s = sub.add_parser("sweep", help="sweep a state parameter and write a CSV table")
    s.add_argument("--state-family", required=True, choices=SWEEP_FAMILIES)
    s.add_argument("--dims", type=_dims, required=True)
    s.add_argument("--grid", type=_grid, required=True, help="start:stop:step or comma list")
    s.add_argument("--criteria", required=True, help="comma-separated criteria")
    s.add_argument("--family", action="append", help="family file per party; overrides the built-in defaults")
    s.add_argument("--kappa", type=float, nargs="+")
    s.add_argument("--a", type=float, nargs="+")
    s.add_argument("--mode", choices=("exact", "greedy"), default="exact")
    s.add_argument("--strategy", choices=STRATEGIES, default="greedy")
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", required=True)
    s.add_argument("--summary")
    s.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DimensionMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIMS
    except (SchemaError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except ExhaustiveGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
