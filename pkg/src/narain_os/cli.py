"""narain-os command line: model validation, correlator evaluation and axiom checks.

Exit codes: 0 all checks pass, 1 some check failed, 2 bad model file or usage, 3 internal assertion.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .axioms import CHECKS, DEFAULT_TOLERANCES, CheckReport, hermite_exponential, run_check
from .correlators import schwinger_closed_form, schwinger_truncated
from .errors import BadModelFile, CheckFailed, InternalAssertion, NarainError
from .fock import graded_basis
from .model import Model, load_model
from .vertex import current_left, current_right, exponential, vacuum_symbol

EXIT_OK, EXIT_FAIL, EXIT_BAD_MODEL, EXIT_INTERNAL = 0, 1, 2, 3
SCHEMA = 1


@dataclass
class RunSpec:
    command: str
    model: str | None = None
    checks: tuple = ()
    cutoff: float | None = None
    seed: int = 0
    out: str | None = None
    tolerances: dict = field(default_factory=dict)
    jobs: int = 1


# ------------------------------------------------------------------ parsing helpers

def parse_insertion(model: Model, token: str):
    """'1', 'e:a,b', 'herm:a,b[:k]', 'jl:d', 'jr:d'."""
    token = token.strip()
    if token == "1":
        return vacuum_symbol(model)
    kind, _, arg = token.partition(":")
    try:
        if kind == "e":
            return exponential(model, [int(x) for x in arg.split(",")])
        if kind == "herm":
            vec, _, which = arg.partition(":")
            return hermite_exponential(model, [int(x) for x in vec.split(",")], int(which or 0))
        if kind == "jl":
            return current_left(model, model.left_basis[int(arg or 0)])
        if kind == "jr":
            return current_right(model, model.right_basis[int(arg or 0)])
    except (ValueError, IndexError) as exc:
        raise ValueError(f"bad insertion {token!r}: {exc}") from exc
    raise ValueError(f"bad insertion {token!r}; use 1, e:a,b, herm:a,b, jl:d or jr:d")


def parse_points(text: str) -> list:
    pts = []
    for tok in text.replace(" ", "").split(";"):
        if tok:
            pts.append(complex(tok.replace("i", "j")))
    return pts


def parse_tolerances(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or key not in DEFAULT_TOLERANCES:
            raise ValueError(f"bad --tol {item!r}; keys: {', '.join(sorted(DEFAULT_TOLERANCES))}")
        out[key] = float(val)
    return out


def _fmt(x) -> str:
    return repr(float(x))


# ------------------------------------------------------------------ commands

def cmd_validate(args) -> int:
    model = load_model(args.file)
    info = model.describe()
    info.update({"rank": model.rank, "signature": list(model.lattice.signature), "positive": model.positive,
                 "dims": list(model.polarization.dims),
                 "residuals": {k: float(v) for k, v in model.polarization.residuals().items()}})
    print(json.dumps(info, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_corr(args) -> int:
    model = load_model(args.model)
    ins = [parse_insertion(model, t) for t in args.insertions.split(";") if t.strip()] if args.insertions.strip() else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["points", "re", "im", "error", "method"])
    for spec in args.points:
        pts = parse_points(spec)
        if args.closed_form:
            val, err, method = schwinger_closed_form(model, ins, pts), 0.0, "closed_form"
        else:
            sv = schwinger_truncated(model, ins, pts, args.cutoff)
            val, err, method = sv.value, sv.truncation_error, f"truncated_H{args.cutoff:g}"
        w.writerow([";".join(repr(complex(z)) for z in pts), _fmt(val.real), _fmt(val.imag), _fmt(err), method])
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def _run_one(payload):
    name, model_path, cutoff, seed, tols = payload
    model = load_model(model_path)
    try:
        return run_check(name, model, cutoff, seed, tols).to_dict()
    except InternalAssertion:
        raise
    except NarainError as exc:
        return CheckReport(name, {"model": model.describe()}, {"error": f"{type(exc).__name__}: {exc}"},
                           DEFAULT_TOLERANCES.get(name, 0.0), False).to_dict()


def _flatten(prefix, x, rows):
    if isinstance(x, dict):
        for k in sorted(x):
            _flatten(f"{prefix}.{k}" if prefix else k, x[k], rows)
    elif isinstance(x, list) and x and all(isinstance(v, (int, float)) for v in x) and len(x) <= 64:
        for i, v in enumerate(x):
            rows.append((f"{prefix}[{i}]", v))
    elif isinstance(x, (int, float, str, bool)) or x is None:
        rows.append((prefix, x))


def metrics_csv(reports: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "metric", "value"])
    for r in reports:
        rows = []
        _flatten("", r["metrics"], rows)
        for k, v in rows:
            w.writerow([r["check"], k, repr(v) if isinstance(v, float) else v])
    return buf.getvalue()


def execute_checks(spec: RunSpec) -> dict:
    load_model(spec.model)
    tols = {**DEFAULT_TOLERANCES, **spec.tolerances}
    payloads = [(name, spec.model, spec.cutoff, spec.seed, tols) for name in spec.checks]
    if spec.jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            reports = list(pool.map(_run_one, payloads))
    else:
        reports = [_run_one(p) for p in payloads]
    reports.sort(key=lambda r: r["check"])
    return {
        "schema": SCHEMA,
        "run": {"model": str(spec.model), "checks": sorted(spec.checks), "cutoff": spec.cutoff,
                "seed": spec.seed, "tolerances": tols},
        "reports": reports,
        "all_pass": all(r["verdict"] for r in reports),
    }


def cmd_check(args) -> int:
    names = CHECKS if args.name == "all" else (args.name,)
    if args.name != "all" and args.name not in CHECKS:
        raise ValueError(f"unknown check {args.name!r}; choose from all, {', '.join(CHECKS)}")
    spec = RunSpec("check", args.model, tuple(names), args.cutoff, args.seed, args.out,
                   parse_tolerances(args.tol), args.jobs)
    t0 = time.time()
    result = execute_checks(spec)
    text = json.dumps(result, sort_keys=True, indent=2) + "\n"
    out = Path(spec.out)
    out.write_text(text)
    out.with_suffix(".csv").write_text(metrics_csv(result["reports"]))
    meta = {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "elapsed_s": time.time() - t0,
            "version": __version__, "python": platform.python_version(), "numpy": np.__version__}
    out.with_suffix(".meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    for r in result["reports"]:
        print(f"{'PASS' if r['verdict'] else 'FAIL'}  {r['check']}")
    if not result["all_pass"]:
        raise CheckFailed("some checks failed")
    return EXIT_OK


def cmd_report(args) -> int:
    data = json.loads(Path(args.file).read_text())
    for r in data.get("reports", []):
        keys = [k for k, v in r["metrics"].items() if isinstance(v, (int, float)) and not isinstance(v, bool)]
        summary = ", ".join(f"{k}={r['metrics'][k]:.3g}" for k in keys[:4])
        print(f"{'PASS' if r['verdict'] else 'FAIL'}  {r['check']:22s} {summary}")
    return EXIT_OK if data.get("all_pass") else EXIT_FAIL


def cmd_basis(args) -> int:
    model = load_model(args.model)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["charge", "h", "hbar", "dim"])
    for sec in graded_basis(model, args.cutoff):
        w.writerow([" ".join(map(str, sec.charge)), _fmt(sec.grading.h), _fmt(sec.grading.hbar), len(sec.monomials)])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="narain-os", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    mp = sub.add_parser("model", help="model file utilities")
    msub = mp.add_subparsers(dest="model_command", required=True)
    v = msub.add_parser("validate", help="parse and validate a model file")
    v.add_argument("file")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("corr", help="evaluate a Schwinger function, CSV to stdout")
    c.add_argument("--model", required=True)
    c.add_argument("--insertions", required=True, help="';'-separated: 1, e:a,b, herm:a,b, jl:d, jr:d")
    c.add_argument("--points", required=True, action="append", help="';'-separated complex numbers (repeatable)")
    c.add_argument("--cutoff", type=float, default=12.0)
    c.add_argument("--closed-form", action="store_true")
    c.set_defaults(func=cmd_corr)

    k = sub.add_parser("check", help="run axiom checks and write a JSON report")
    k.add_argument("name", help="check name or 'all'")
    k.add_argument("--model", required=True)
    k.add_argument("--cutoff", type=float, default=None)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--out", required=True)
    k.add_argument("--tol", action="append", metavar="CHECK=VALUE")
    k.add_argument("--jobs", type=int, default=1)
    k.set_defaults(func=cmd_check)

    r = sub.add_parser("report", help="summarize a JSON report")
    r.add_argument("file")
    r.set_defaults(func=cmd_report)

    b = sub.add_parser("basis", help="basis utilities")
    bsub = b.add_subparsers(dest="basis_command", required=True)
    d = bsub.add_parser("dump", help="list graded sectors up to a cutoff")
    d.add_argument("--model", required=True)
    d.add_argument("--cutoff", type=float, default=2.0)
    d.set_defaults(func=cmd_basis)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BadModelFile as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_MODEL
    except CheckFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except InternalAssertion as exc:
        print(f"internal assertion: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (NarainError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BAD_MODEL


if __name__ == "__main__":
    sys.exit(main())
