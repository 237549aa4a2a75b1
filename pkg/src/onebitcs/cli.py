"""``onebit`` command line.

    onebit run --scheme foreach --n 6561 --k 3 --trials 200 --seed 7 --out runs.csv
    onebit scaling --k 3 --n-list 6561,59049,531441 --trials 20
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import fields

from . import bench
from .core import dump_matrix, load_matrix, BinaryTestMatrix
from .schemes import SCHEMES, SchemeConfig, build_scheme, support_sweep_size

_FIXED = {"scheme", "n", "k", "delta", "seed"}


class ConfigError(ValueError):
    pass


def _constant_types() -> dict:
    out = {}
    for f in fields(SchemeConfig):
        if f.name in _FIXED:
            continue
        t = f.type.replace(" | None", "")
        out[f.name] = {"int": int, "float": float, "str": str}[t]
    return out


def parse_constants(items) -> dict:
    types = _constant_types()
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or key not in types:
            raise ConfigError(f"unknown constant {item!r}; known: {', '.join(sorted(types))}")
        try:
            out[key] = types[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return out


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="onebit", description="One-bit compressed sensing experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Monte-Carlo trials or an exhaustive sweep")
    run.add_argument("--scheme", required=True, choices=SCHEMES)
    run.add_argument("--n", type=int, required=True)
    run.add_argument("--k", type=int, required=True)
    run.add_argument("--delta", type=float, default=0.25)
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--signal", default="random-sparse")
    run.add_argument("--out", required=True, help="CSV destination ('-' for stdout)")
    run.add_argument("--constants", nargs="*", default=[], metavar="KEY=VAL")
    run.add_argument("--dump-matrix", metavar="PATH")
    run.add_argument("--load-matrix", metavar="PATH")
    run.add_argument("--exhaustive", action="store_true")
    run.add_argument("--max-exhaustive", type=int, default=200_000, help="signal budget for --exhaustive")
    run.add_argument("--no-timings", action="store_true", help="write zeros in the timing columns")

    sc = sub.add_parser("scaling", help="decode time against n for the foreach scheme")
    sc.add_argument("--scheme", default="foreach", choices=["foreach"])
    sc.add_argument("--k", type=int, default=3)
    sc.add_argument("--n-list", default="6561,59049,531441")
    sc.add_argument("--trials", type=int, default=10)
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--delta", type=float, default=0.25)
    sc.add_argument("--no-baseline", action="store_true")
    sc.add_argument("--constants", nargs="*", default=[], metavar="KEY=VAL")
    return p


def _config(args) -> SchemeConfig:
    try:
        return SchemeConfig(args.scheme, args.n, args.k, args.delta, seed=args.seed, **parse_constants(args.constants))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _validate(args, cfg: SchemeConfig) -> None:
    if args.trials < 0:
        raise ConfigError("--trials must be nonnegative")
    if args.exhaustive:
        if cfg.scheme not in ("forall", "support"):
            raise ConfigError("--exhaustive applies to the forall and support schemes")
        if args.trials:
            raise ConfigError("--exhaustive runs one matrix over every support; pass --trials 0")
        size = support_sweep_size(cfg.n, cfg.k, cfg.scheme == "forall")
        if size > args.max_exhaustive:
            raise ConfigError(f"--exhaustive needs {size} signals, over the budget of {args.max_exhaustive}")
    if args.load_matrix and cfg.scheme not in ("forall", "support"):
        raise ConfigError("--load-matrix applies to the forall and support schemes")
    if args.load_matrix and not args.exhaustive:
        raise ConfigError("--load-matrix fixes one matrix; combine it with --exhaustive")
    if args.dump_matrix and cfg.scheme == "l2l2":
        raise ConfigError("--dump-matrix writes group-testing matrices; l2l2 has none")
    if cfg.scheme != "l2l2" and args.signal == "planted" and cfg.k < cfg.n:
        raise ConfigError("planted signals are not exactly sparse; use them with l2l2")


def _dump(path: str, cfg: SchemeConfig, tests) -> None:
    scheme = build_scheme(cfg, tests)
    mat = scheme.tests
    if not isinstance(mat, BinaryTestMatrix):
        if mat.total_rows * mat.n > 50_000_000:
            raise ConfigError("recursive matrix too large to write densely")
        mat = mat.to_binary()
    dump_matrix(path, mat)


def cmd_run(args) -> int:
    cfg = _config(args)
    _validate(args, cfg)
    tests = None
    if args.load_matrix:
        tests = load_matrix(args.load_matrix)
        if not isinstance(tests, BinaryTestMatrix):
            raise ConfigError("loaded matrix is not binary")
        if tests.cols != cfg.n:
            raise ConfigError(f"loaded matrix has {tests.cols} columns, --n is {cfg.n}")
    if args.dump_matrix:
        _dump(args.dump_matrix, cfg, tests)
    try:
        if args.exhaustive:
            reports = bench.exhaustive(cfg, tests)
        else:
            reports = bench.monte_carlo(cfg, args.trials, args.signal)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    rows = [bench.TrialRow.from_report(r, timings=not args.no_timings) for r in reports]
    if args.out == "-":
        bench.write_rows(sys.stdout, rows)
    else:
        with open(args.out, "w", newline="") as fh:
            bench.write_rows(fh, rows)
    s = bench.summarize(reports)
    print(
        f"scheme={cfg.scheme} n={cfg.n} k={cfg.k} trials={s['trials']} "
        f"success_rate={s['success_rate']:.4f} mean_error={s['mean_error']:.6g} "
        f"median_decode_ms={s['median_decode_ms']:.4g}",
        file=sys.stderr if args.out == "-" else sys.stdout,
    )
    return 0


def cmd_scaling(args) -> int:
    try:
        ns = [int(v) for v in args.n_list.split(",") if v.strip()]
        rep = bench.scaling_report(
            args.scheme, args.k, ns, args.trials, args.seed, args.delta,
            baseline=not args.no_baseline, **parse_constants(args.constants),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print("n,trials,median_decode_ms,median_baseline_ms")
    for r in rep.rows:
        print(f"{r.n},{r.trials},{r.median_decode_ms:.6g},{r.median_baseline_ms:.6g}")
    verdict = "sublinear" if rep.sublinear else "not sublinear"
    base = "" if math.isnan(rep.baseline_exponent) else f" baseline_exponent={rep.baseline_exponent:.3f}"
    print(f"exponent={rep.exponent:.3f}{base} ({verdict})")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0].startswith("--") and argv[0] not in ("--help", "-h"):
        argv.insert(0, "run")
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return cmd_run(args) if args.command == "run" else cmd_scaling(args)
    except ConfigError as exc:
        print(f"onebit: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
