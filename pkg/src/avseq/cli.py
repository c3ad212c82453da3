"""Command-line front end: ``avseq simulate | verify | tree``.

Exit codes: 0 success, 1 a check failed (or an unsafe tree payload), 2 a
configuration or input-format error.  Flags override values read from
``--config FILE.json``; the default seed comes from ``AVSEQ_SEED``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import tree as tr
from .gaussian import mixture_cs
from .harness import INSTRUMENTS, SUITES, make_instrument, run_suite
from .model import (GaussianIID, GaussianPredictableVar, RademacherShifted, SymmetricHeavyTail,
                    TwoPointSymmetric, VarianceSchedule, make_rng)
from .report import CSV_FIELDS, REPORT_SCHEMA

SIM_INSTRUMENTS = sorted(INSTRUMENTS) + ["mixture-cs"]

SCHEMAS = {
    "simulate": {
        "csv": "header row; columns path,t,<instrument columns>",
        "columns": {
            "e-processes": ["path", "t", "value", "log_value", "reject"],
            "signwalk": ["path", "t", "value", "reject"],
            "dyadic-p": ["path", "t", "p", "reject"],
            "mixture-cs": ["path", "t", "center", "radius"],
        },
        "jsonl": "one object per (path, t) with the same keys",
    },
    "verify": {"json": REPORT_SCHEMA, "csv": list(CSV_FIELDS)},
    "tree": {
        "format": "whitespace table; header 'id parent prob [x] <payload names>'; '-' marks "
                  "the root parent, '.' a missing value, '#' starts a comment; values are "
                  "exact rationals such as 3/10",
        "snell": "adds columns L, M, A",
        "implied": "replaces prob by the implied alternative's conditional probabilities and "
                   "adds column q_prob with the original ones",
        "admissibilize": "adds column 'admissible' (kind e: dominating NM with root 1; kind p: "
                         "closed max-martingale p-value)",
    },
}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers


def parse_model(spec: str):
    """``rademacher[:c]``, ``gauss:m,s``, ``twopoint:c,eta``, ``cauchy[:c]``,
    ``student-t:c,df`` or ``predvar:m[,c0,c1]``."""
    name, _, rest = spec.partition(":")
    try:
        args = [float(a) for a in rest.split(",")] if rest else []
    except ValueError:
        raise ConfigError(f"bad model parameters in {spec!r}") from None
    try:
        if name == "rademacher":
            return RademacherShifted(*args[:1])
        if name == "gauss":
            return GaussianIID(*args[:2])
        if name == "twopoint":
            return TwoPointSymmetric(*args[:2])
        if name == "cauchy":
            return SymmetricHeavyTail(*args[:1], family="cauchy")
        if name == "student-t":
            return SymmetricHeavyTail(*args[:1], "student-t", *args[1:2])
        if name == "predvar":
            m = args[0] if args else 0.0
            c0, c1 = (args[1:3] + [0.5, 0.5][len(args[1:3]):])
            return GaussianPredictableVar(m, VarianceSchedule("abs", c0, c1))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad model {spec!r}: {exc}") from None
    raise ConfigError(f"unknown model {spec!r}")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def _merge(args: argparse.Namespace, defaults: dict) -> argparse.Namespace:
    cfg = _load_config(getattr(args, "config", None))
    for k, v in cfg.items():
        if getattr(args, k, None) is None:
            setattr(args, k, v)
    for k, v in defaults.items():
        if getattr(args, k, None) is None:
            setattr(args, k, v)
    return args


def _default_seed() -> int:
    raw = os.environ.get("AVSEQ_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"AVSEQ_SEED must be an integer, got {raw!r}") from None


def _emit(text: str, path: str | None) -> None:
    if path and path != "-":
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    args = _merge(args, {"T": 1000, "N": 1, "seed": None, "format": "csv",
                         "model": "gauss:0,1", "instrument": "mixture"})
    if args.alpha is None:
        raise ConfigError("--alpha is required")
    alpha = float(args.alpha)
    if not 0 < alpha < 1:
        raise ConfigError("--alpha must lie in (0, 1)")
    T, N = int(args.T), int(args.N)
    if T < 1 or N < 1:
        raise ConfigError("--T and --N must be positive")
    if args.instrument not in SIM_INSTRUMENTS:
        raise ConfigError(f"unknown instrument {args.instrument!r}; choose from {SIM_INSTRUMENTS}")
    if args.format not in ("csv", "jsonl"):
        raise ConfigError("--format must be csv or jsonl")
    seed = _default_seed() if args.seed is None else int(args.seed)
    model = parse_model(args.model)
    center = getattr(model, "center", 0.0)

    rng = make_rng(seed)
    us = rng.random(N)
    xs = model.sample(rng, N, T)
    t = np.arange(1, T + 1)
    if args.instrument == "mixture-cs":
        cols = ["center", "radius"]
        data = []
        for row in xs:
            c, r = mixture_cs(row, alpha)
            data.append([c, r])
    else:
        try:
            proc = make_instrument(args.instrument, m=center, alpha=alpha, model=model)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        vals = proc.advance(proc.start(us), xs)
        data = []
        if proc.kind == "walk":
            cols = ["value", "reject"]
            b = proc.threshold
            for row in vals:
                data.append([row, row >= b])
        elif proc.kind == "p":
            cols = ["p", "reject"]
            for row in vals:
                data.append([row, row <= alpha])
        else:
            cols = ["value", "log_value", "reject"]
            c = math.log(1 / alpha)
            for row in vals:
                data.append([np.exp(row), row, np.maximum.accumulate(row) >= c])
    header = ["path", "t"] + cols
    buf = io.StringIO()
    if args.format == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for i, arrays in enumerate(data):
            for k in range(T):
                w.writerow([i, k + 1] + [_num(a[k]) for a in arrays])
    else:
        for i, arrays in enumerate(data):
            for k in range(T):
                rec = {"path": i, "t": int(t[k])}
                for name, a in zip(cols, arrays):
                    v = a[k]
                    rec[name] = bool(v) if isinstance(v, np.bool_) else float(v)
                buf.write(json.dumps(rec) + "\n")
    _emit(buf.getvalue(), args.output)
    return 0


def cmd_verify(args) -> int:
    args = _merge(args, {"seed": None, "threads": None, "quick": False})
    if args.suite not in SUITES:
        raise ConfigError(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)}")
    seed = _default_seed() if args.seed is None else int(args.seed)
    threads = int(args.threads) if args.threads else (os.cpu_count() or 1)
    rep = run_suite(args.suite, seed=seed, quick=bool(args.quick), threads=threads)
    print(rep.summary(), file=sys.stderr)
    if args.output:
        _emit(rep.to_json(), args.output)
    else:
        sys.stdout.write(rep.to_json())
    if args.csv:
        _emit(rep.to_csv(), args.csv)
    return 0 if rep.passed else 1


def cmd_tree(args) -> int:
    args = _merge(args, {"kind": "e", "payload": None, "alpha": None})
    try:
        with open(args.file) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {args.file}: {exc}") from None
    try:
        t, payloads = tr.read_tree(text)
    except tr.TreeFormatError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return 2
    name = args.payload or (next(iter(payloads), None))
    if name is None or name not in payloads:
        raise ConfigError(f"payload column {name!r} not found (have {list(payloads)})")
    y = payloads[name]
    out = dict(payloads)
    if args.action == "snell":
        if any(y[v] is None for v in t.leaves):
            raise ConfigError("snell needs the payload at every leaf")
        s = tr.snell_doob(t, y)
        out.update(L=s.L, M=s.M, A=s.A)
        _emit(tr.write_tree(t, out), args.output)
        return 0
    if args.action == "implied":
        try:
            P = tr.implied_alternative(t, y)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        out["q_prob"] = list(t.prob)
        _emit(tr.write_tree(P, out), args.output)
        return 0
    # admissibilize
    if args.kind == "e":
        try:
            out["admissible"] = tr.admissibilize_e(t, y)
        except tr.UnsafePayloadError as exc:
            print(f"unsafe payload: Snell root value {exc.value} > 1", file=sys.stderr)
            print(f"snell_root {tr._fmt(exc.value)}")
            return 1
    else:
        try:
            out["admissible"] = tr.admissibilize_p(t, y)
        except tr.InvalidPValueError as exc:
            print(f"invalid p-value: {exc}", file=sys.stderr)
            return 1
    _emit(tr.write_tree(t, out), args.output)
    return 0


# ---------------------------------------------------------------------------
# parser


def _schema_action(key):
    class SchemaAction(argparse.Action):
        def __init__(self, option_strings, dest, **kw):
            super().__init__(option_strings, dest, nargs=0, **kw)

        def __call__(self, parser, namespace, values, option_string=None):
            sys.stdout.write(json.dumps(SCHEMAS[key], indent=2, sort_keys=True) + "\n")
            parser.exit(0)
    return SchemaAction


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="avseq", description=__doc__.splitlines()[0])
    p.add_argument("--schema", action=_schema_action_all(), help="print all output schemas")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="stream instrument values along simulated paths")
    s.add_argument("--model", help="rademacher[:c] | gauss:m,s | twopoint:c,eta | cauchy[:c] | "
                                   "student-t:c,df | predvar:m[,c0,c1] (default gauss:0,1)")
    s.add_argument("--instrument", help=f"one of {', '.join(SIM_INSTRUMENTS)} (default mixture)")
    s.add_argument("--alpha", type=float, help="level in (0, 1) (required)")
    s.add_argument("--T", type=int, help="horizon (default 1000)")
    s.add_argument("--N", type=int, help="number of paths (default 1)")
    s.add_argument("--seed", type=int, help="seed (default $AVSEQ_SEED or 0)")
    s.add_argument("--format", choices=["csv", "jsonl"])
    s.add_argument("--output", help="output file (default stdout)")
    s.add_argument("--config", help="JSON file with default values for these flags")
    s.add_argument("--schema", action=_schema_action("simulate"), help="print output schema")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", help=f"one of {', '.join(SUITES)}")
    v.add_argument("--seed", type=int)
    v.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    v.add_argument("--quick", action="store_true", default=None, help="reduced scale")
    v.add_argument("--output", help="report JSON file (default stdout)")
    v.add_argument("--csv", help="also write the report as CSV")
    v.add_argument("--config")
    v.add_argument("--schema", action=_schema_action("verify"), help="print report schema")
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("tree", help="exact tools on a tree file")
    t.add_argument("action", choices=["snell", "implied", "admissibilize"])
    t.add_argument("file")
    t.add_argument("--payload", help="payload column (default: the first)")
    t.add_argument("--kind", choices=["e", "p"], help="payload kind for admissibilize (default e)")
    t.add_argument("--output")
    t.add_argument("--config")
    t.add_argument("--schema", action=_schema_action("tree"), help="print file-format schema")
    t.set_defaults(func=cmd_tree)
    return p


def _schema_action_all():
    class SchemaAll(argparse.Action):
        def __init__(self, option_strings, dest, **kw):
            super().__init__(option_strings, dest, nargs=0, **kw)

        def __call__(self, parser, namespace, values, option_string=None):
            sys.stdout.write(json.dumps(SCHEMAS, indent=2, sort_keys=True) + "\n")
            parser.exit(0)
    return SchemaAll


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sub = {"simulate": "simulate", "verify": "verify", "tree": "tree"}[args.command]
        parser._subparsers._group_actions[0].choices[sub].print_usage(sys.stderr)
        print(f"avseq {sub}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
