"""Command-line front end: ``invacheck <command> <file> [options]``.

Exit codes: 0 VERIFIED, 1 FALSIFIED, 2 INCONCLUSIVE, 64 usage or schema
error. The JSON report goes to stdout (or ``--out``); ``--summary`` prints a
short digest instead of the JSON on stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from typing import Any

import numpy as np

from . import __version__
from .continuous import check_ellipsoid_continuous, check_polyhedron_continuous, check_sublevel_continuous
from .convexity import probe
from .discrete import (
    linear_ellipsoid_check,
    linear_polyhedral_check,
    search_convex_alpha,
    search_ellipsoid_beta,
    search_polyhedral_H,
    verify_convex_alpha,
    verify_ellipsoid_beta,
    verify_polyhedral_H,
)
from .errors import InvacheckError, SchemaError, UsageError
from .expr import const, dot, quadratic_form, sub
from .optimize import OptConfig
from .oracle import falsify
from .problem import ProblemSpec, load
from .sets import Ellipsoid, Polyhedron, Region, SublevelSet, contains, sample, violation
from .verdict import CheckVerdict, Status, WitnessKind, _jsonable

EXIT_USAGE = 64
COMMANDS = ("check", "certify", "falsify", "probe")


def _config(spec: ProblemSpec, seed: int, box, starts) -> OptConfig:
    kw: dict[str, Any] = {"seed": seed, "box": tuple(float(v) for v in box)}
    if starts is not None:
        kw["starts"] = starts
    if spec.max_iters is not None:
        kw["max_iters"] = spec.max_iters
    return OptConfig(**kw)


def resolve_seed(flag: int | None, spec: ProblemSpec) -> int:
    """``--seed`` beats the problem file, which beats ``INVACHECK_SEED``; default 0."""
    if flag is not None:
        return flag
    if spec.seed is not None:
        return spec.seed
    env = os.environ.get("INVACHECK_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"INVACHECK_SEED must be an integer, got {env!r}") from None
    return 0


def _linear_fast_path(spec: ProblemSpec) -> CheckVerdict | None:
    if not spec.discrete or isinstance(spec.set, SublevelSet):
        return None
    A = spec.system.field.as_matrix()
    if A is None:
        return None
    if isinstance(spec.set, Polyhedron):
        return linear_polyhedral_check(spec.set, A)
    return linear_ellipsoid_check(spec.set, A)


def _check(spec: ProblemSpec, config: OptConfig) -> CheckVerdict:
    s, f = spec.set, spec.system.field
    if not spec.discrete:
        if isinstance(s, Polyhedron):
            return check_polyhedron_continuous(s, f, config)
        if isinstance(s, Ellipsoid):
            return check_ellipsoid_continuous(s, f, config)
        return check_sublevel_continuous(s, f, config)
    cert = spec.certificate
    if cert is None:
        fast = _linear_fast_path(spec)
        if fast is None:
            raise UsageError("check on a discrete system needs a certificate (or use certify)")
        return fast
    if isinstance(s, Polyhedron):
        return verify_polyhedral_H(s, f, cert.value, spec.mode, config)
    if isinstance(s, Ellipsoid):
        return verify_ellipsoid_beta(s, f, cert.value, spec.mode, config)
    return verify_convex_alpha(s, f, cert.value, spec.mode, config)


def _certify(spec: ProblemSpec, config: OptConfig) -> tuple[CheckVerdict, CheckVerdict | None]:
    if not spec.discrete:
        return _check(spec, config), None
    s, f = spec.set, spec.system.field
    if isinstance(s, Polyhedron):
        v = search_polyhedral_H(s, f, spec.mode, config)
    elif isinstance(s, Ellipsoid):
        v = search_ellipsoid_beta(s, f, spec.mode, config)
    else:
        v = search_convex_alpha(s, f, spec.mode, config)
    fast = _linear_fast_path(spec)
    if fast is not None and {fast.status, v.status} == {Status.VERIFIED, Status.FALSIFIED}:
        v.notes.append(f"numeric search disagrees with the exact linear test ({fast.status.value})")
    return v, fast


def _revalidate(spec: ProblemSpec, v: CheckVerdict) -> dict | None:
    """Independent re-check of a FALSIFIED witness."""
    if v.status is not Status.FALSIFIED or v.counterexample is None:
        return None
    x = v.counterexample
    out: dict[str, Any] = {"witness_kind": v.witness_kind.value if v.witness_kind else None}
    if spec.discrete:
        fx = spec.system.field(x)
        out["start_in_set"] = contains(spec.set, x)
        out["image_in_set"] = contains(spec.set, fx)
        out["image"] = fx
        out["step1_escape"] = out["start_in_set"] and not out["image_in_set"]
        if v.witness_kind is WitnessKind.RESIDUAL:
            out["residual"] = v.details.get("witness_residual")
    else:
        out["trajectory_confirmed"] = v.details.get("trajectory_confirmed")
    return out


def _oracle_summary(spec: ProblemSpec, seed: int, box) -> dict:
    rep = falsify(spec.set, spec.system, spec.oracle_samples, spec.oracle_horizon, seed, tuple(box))
    horizon = spec.oracle_horizon or (50 if spec.discrete else 10.0)
    return {
        "samples": spec.oracle_samples,
        "horizon": horizon,
        "escaped": rep is not None,
        "escape": None if rep is None else rep.to_dict(),
    }


def _probe(spec: ProblemSpec, config: OptConfig) -> list[dict]:
    s, f, n = spec.set, spec.system.field, spec.dimension
    kw = dict(box=config.box, seed=config.seed)
    reports = []
    if isinstance(s, Polyhedron):
        for i in range(s.rows):
            e = sub(const(float(s.b[i])), dot(s.G[i], f.components))
            reports.append(probe(e, n, label=f"b_{i + 1} - G_{i + 1}^T f(x)", **kw))
    elif isinstance(s, Ellipsoid):
        reports.append(probe(quadratic_form(s.Q, f.components), n, label="f(x)^T Q f(x)", **kw))
    else:
        reports.append(probe(s.g, n, label="g(x)", **kw))
        reports.append(probe(f.compose(s.g), n, label="g(f(x))", **kw))
    return [r.to_dict() for r in reports]


def run(command: str, path: str, *, seed: int | None = None, box=None,
        starts: int | None = None, timings: bool = False) -> tuple[int, dict]:
    """Execute one command and return ``(exit code, report)``."""
    if command not in COMMANDS:
        return EXIT_USAGE, {"error": {"type": "UsageError", "message": f"unknown command {command!r}"}}
    try:
        spec = load(path)
        seed_v = resolve_seed(seed, spec)
        box_v = tuple(box) if box is not None else spec.box
        if not box_v[0] < box_v[1]:
            raise UsageError("--box needs LO < HI")
        config = _config(spec, seed_v, box_v, starts if starts is not None else spec.starts)
    except SchemaError as exc:
        return EXIT_USAGE, {"error": {"type": "SchemaError", "path": exc.path, "message": exc.message}}
    except UsageError as exc:
        return EXIT_USAGE, {"error": {"type": "UsageError", "message": str(exc)}}

    report: dict[str, Any] = {
        "tool": "invacheck",
        "version": __version__,
        "command": command,
        "seed": seed_v,
        "problem": spec.raw,
    }
    t0 = time.perf_counter()
    code = Status.INCONCLUSIVE.exit_code
    try:
        if command == "probe":
            report["hypotheses"] = _probe(spec, config)
            code = 0
        elif command == "falsify":
            summary = _oracle_summary(spec, seed_v, box_v)
            report["oracle"] = summary
            status = Status.FALSIFIED if summary["escaped"] else Status.INCONCLUSIVE
            report["verdict"] = {"status": status.value, "exactness": "Numerical"}
            if summary["escaped"]:
                report["verdict"]["counterexample"] = summary["escape"]["start"]
            code = status.exit_code
        else:
            if command == "check":
                v, fast = _check(spec, config), None
            else:
                v, fast = _certify(spec, config)
            report["verdict"] = v.to_dict()
            if fast is not None:
                report["linear_fast_path"] = fast.to_dict()
            report["revalidation"] = _revalidate(spec, v)
            report["oracle"] = _oracle_summary(spec, seed_v, box_v)
            if v.status is Status.VERIFIED and report["oracle"]["escaped"]:
                report["verdict"]["notes"].append("oracle found an escaping trajectory despite the VERIFIED verdict")
            code = v.status.exit_code
    except UsageError as exc:
        return EXIT_USAGE, {"error": {"type": "UsageError", "message": str(exc)}}
    except InvacheckError as exc:
        report["verdict"] = {"status": "INCONCLUSIVE", "exactness": "Numerical", "notes": [f"{type(exc).__name__}: {exc}"]}
        code = Status.INCONCLUSIVE.exit_code
    if timings:
        report["timings"] = {"total_seconds": time.perf_counter() - t0}
    return code, _jsonable(report)


def summary_text(report: dict) -> str:
    if "error" in report:
        e = report["error"]
        where = f" at {e['path']}" if e.get("path") is not None else ""
        return f"error ({e['type']}){where}: {e['message']}"
    lines = [f"invacheck {report['version']}  command={report['command']}  seed={report['seed']}"]
    name = report["problem"].get("name")
    if name:
        lines.append(f"problem: {name}")
    v = report.get("verdict")
    if v:
        lines.append(f"verdict: {v['status']} ({v.get('exactness', 'Numerical')})")
        if v.get("certificate"):
            lines.append(f"certificate: {v['certificate']['kind']} = {v['certificate']['value']}")
        if v.get("residual_minima"):
            lines.append("residual minima: " + ", ".join(f"{m:.6g}" for m in v["residual_minima"]))
        if v.get("details", {}).get("maxima"):
            lines.append("boundary maxima: " + ", ".join(f"{m:.6g}" for m in v["details"]["maxima"]))
        if v.get("counterexample") is not None:
            lines.append(f"counterexample: {v['counterexample']}")
        for note in v.get("notes", []):
            lines.append(f"  - {note}")
    o = report.get("oracle")
    if o:
        lines.append(f"oracle: {'escape found' if o['escaped'] else 'no escape'} ({o['samples']} starts, horizon {o['horizon']})")
    for h in report.get("hypotheses", []):
        lines.append(f"{h['label']}: {h['verdict']} ({h['certainty']})")
    return "\n".join(lines)


def dump_samples(path_csv: str, problem_path: str, seed: int, count: int = 200) -> None:
    """Write interior and boundary samples with their images for plotting."""
    spec = load(problem_path)
    s, f, n = spec.set, spec.system.field, spec.dimension
    with open(path_csv, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["region"] + [f"x{i + 1}" for i in range(n)] + ["violation"] + [f"f{i + 1}" for i in range(n)])
        for region in (Region.INTERIOR, Region.BOUNDARY):
            try:
                X = sample(s, region, count, seed, spec.box)
            except InvacheckError:
                continue
            V = violation(s, X)
            with np.errstate(all="ignore"):
                F = f.compiled()(X)
            for j in range(X.shape[1]):
                w.writerow([region.value] + [repr(float(v)) for v in X[:, j]] + [repr(float(V[j]))]
                           + [repr(float(v)) for v in F[:, j]])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="invacheck", description="Check, certify or falsify invariance of a set under a dynamical system.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("file", help="JSON problem file (see docs/format.md)")
    p.add_argument("--out", help="write the JSON report to this file")
    p.add_argument("--seed", type=int, help="random seed (default: file, then $INVACHECK_SEED, then 0)")
    p.add_argument("--box", type=float, nargs=2, metavar=("LO", "HI"), help="search box [LO, HI]^n")
    p.add_argument("--starts", type=int, help="multistart count")
    p.add_argument("--summary", action="store_true", help="print a human-readable digest instead of JSON")
    p.add_argument("--dump-samples", metavar="CSV", help="write set samples and their images to CSV")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")
    p.add_argument("--version", action="version", version=f"invacheck {__version__}")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    if args.starts is not None and args.starts < 1:
        print("invacheck: --starts must be positive", file=sys.stderr)
        return EXIT_USAGE
    code, report = run(args.command, args.file, seed=args.seed, box=args.box,
                       starts=args.starts, timings=args.timings)
    text = json.dumps(report, indent=2, allow_nan=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    if args.summary:
        print(summary_text(report))
    elif not args.out:
        print(text)
    if "error" in report:
        print(f"invacheck: {summary_text(report)}", file=sys.stderr)
    elif args.dump_samples:
        dump_samples(args.dump_samples, args.file, report["seed"])
    return code


if __name__ == "__main__":
    sys.exit(main())
