"""Command-line driver.

Subcommands: ``solve`` (ADMM or the dual alternation), ``bounds``
(sandwich report per variant), ``oracle`` (exact enumeration on small
instances), ``check`` (first-order test of a candidate point), ``gen``
(seeded instance generator). Records go to stdout or ``--out`` as
deterministic JSON; timing fields stay null unless ``--stamp`` is given,
so identical invocations produce identical bytes.

Exit codes: 0 success, 1 usage, 2 validation, 3 non-finite iterates,
4 instance too large for the oracle.
"""
from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .admm import AdmmConfig, NonFiniteError, solve_admm
from .bounds import sandwich
from .dual import CycleDetectedError, solve_dual
from .instances import (
    ParseError,
    RunRecord,
    ValidationError,
    dumps_canonical,
    generate_instance,
    parse_instance,
    parse_instance_text,
    trace_to_csv,
    write_atomic,
)
from .model import objective_value
from .oracle import TooLargeError, oracle_prox_l0_ogl, oracle_variant, stationarity_check

__all__ = ["run_cli", "main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="sogl", description="Prox solvers and value bounds for "
                "the l0 sparse overlapping group lasso.")
    sub = p.add_subparsers(dest="command", metavar="command",
                           parser_class=_Parser)

    solve = sub.add_parser("solve", help="run a solver on an instance")
    solve.add_argument("instance", nargs="*", default=[],
                       help="instance file(s); '-' or empty reads stdin")
    solve.add_argument("--algorithm", choices=("admm", "dual"), default="admm")
    solve.add_argument("--rho", type=float, default=1.0)
    solve.add_argument("--max-iters", type=int, default=10000)
    solve.add_argument("--eps-abs", type=float, default=1e-8)
    solve.add_argument("--eps-rel", type=float, default=1e-6)
    solve.add_argument("--trace", metavar="PATH",
                       help="write per-iteration CSV trace here")
    solve.add_argument("--out", metavar="PATH")
    solve.add_argument("--batch", action="store_true",
                       help="process several instance files concurrently")
    solve.add_argument("--out-dir", metavar="DIR",
                       help="output directory for --batch records")
    solve.add_argument("--stamp", action="store_true",
                       help="fill timestamp and wall-time fields")

    bounds = sub.add_parser("bounds", help="sandwich bounds for one variant")
    bounds.add_argument("instance", nargs="?", default="-")
    bounds.add_argument("--variant", choices=("plain", "l1", "l0"),
                        default="plain")
    bounds.add_argument("--with-oracle", action="store_true",
                        help="also compute the exact value by enumeration")
    bounds.add_argument("--limit", type=int, default=12,
                        help="enumeration size limit for --with-oracle")
    bounds.add_argument("--out", metavar="PATH")
    bounds.add_argument("--stamp", action="store_true")

    oracle = sub.add_parser("oracle", help="exact enumeration solve")
    oracle.add_argument("instance", nargs="?", default="-")
    oracle.add_argument("--limit", type=int, default=12)
    oracle.add_argument("--out", metavar="PATH")
    oracle.add_argument("--stamp", action="store_true")

    check = sub.add_parser("check", help="first-order check of a point")
    check.add_argument("instance", nargs="?", default="-")
    check.add_argument("--point", required=True, metavar="PATH",
                       help="JSON array, {'x': [...]}, or a solve record")
    check.add_argument("--out", metavar="PATH")
    check.add_argument("--stamp", action="store_true")

    gen = sub.add_parser("gen", help="generate a seeded random instance")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--n", type=int, default=8)
    gen.add_argument("--m", type=int, default=3)
    gen.add_argument("--min-size", type=int, default=2)
    gen.add_argument("--max-size", type=int, default=4)
    gen.add_argument("--mode", choices=("chain", "random", "nested"),
                     default="chain")
    gen.add_argument("--s", type=float, default=1.0)
    gen.add_argument("--lambda0", type=float, default=0.05)
    gen.add_argument("--lambda1", type=float, default=0.1)
    gen.add_argument("--lambda", dest="lambda_", type=float, default=0.1)
    gen.add_argument("--out", metavar="PATH")
    return p


def _read_instance(path: str):
    if path in ("-", ""):
        return parse_instance_text(sys.stdin.read()) + ("stdin",)
    return parse_instance(path) + (path,)


def _emit(text: str, out_path: str):
    if out_path:
        write_atomic(out_path, text)
    else:
        sys.stdout.write(text)


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _admm_config(args, trace: bool) -> AdmmConfig:
    try:
        return AdmmConfig(rho=args.rho, max_iters=args.max_iters,
                          eps_abs=args.eps_abs, eps_rel=args.eps_rel,
                          trace=trace)
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc


def _solve_report_dict(report, stamp: bool) -> dict:
    return {
        "x_final": [float(x) for x in report.x_final],
        "objective": report.objective,
        "iters": report.iters,
        "converged": report.converged,
        "algorithm": report.algorithm,
        "r_norm": report.r_norm,
        "s_norm": report.s_norm,
        "wall_time": report.wall_time if stamp else None,
        "oracle_gap": report.oracle_gap,
    }


def _record(instf, source: str, algorithm: str, config: dict, report: dict,
            stamp: bool) -> RunRecord:
    name = instf.name if instf.name is not None else os.path.basename(source)
    return RunRecord(instance=name, algorithm=algorithm, config=config,
                     report=report, timestamp=_now() if stamp else None,
                     seed=instf.seed)


def _run_solve_single(args, path: str) -> str:
    inst, gs, instf, source = _read_instance(path)
    cfg = _admm_config(args, trace=bool(args.trace))
    config = {"algorithm": args.algorithm, "rho": cfg.rho,
              "max_iters": cfg.max_iters, "eps_abs": cfg.eps_abs,
              "eps_rel": cfg.eps_rel}
    if args.algorithm == "admm":
        report = solve_admm(inst, gs, cfg)
    else:
        try:
            report = solve_dual(inst, gs, cfg)
        except CycleDetectedError:
            config["fallback_from"] = "dual"
            report = solve_admm(inst, gs, cfg)
    if args.trace:
        write_atomic(args.trace, trace_to_csv(report.trace))
    record = _record(instf, source, report.algorithm, config,
                     _solve_report_dict(report, args.stamp), args.stamp)
    return dumps_canonical(record.to_dict())


def _cmd_solve(args) -> int:
    paths = args.instance
    if args.batch or len(paths) > 1:
        if not paths:
            raise _UsageError("--batch requires instance paths")
        if not args.out_dir:
            raise _UsageError("--batch requires --out-dir")
        if args.trace:
            raise _UsageError("--trace is not supported with --batch")
        os.makedirs(args.out_dir, exist_ok=True)

        def one(path: str):
            try:
                text = _run_solve_single(args, path)
            except (ParseError, ValidationError) as exc:
                return 2, f"{path}: error: {exc}"
            except NonFiniteError as exc:
                return 3, f"{path}: error: {exc}"
            stem = os.path.splitext(os.path.basename(path))[0]
            out = os.path.join(args.out_dir, f"{stem}.record.json")
            write_atomic(out, text)
            return 0, f"{path}: ok -> {out}"

        with ThreadPoolExecutor(max_workers=min(8, len(paths))) as pool:
            results = list(pool.map(one, paths))
        for _, message in results:
            print(message)
        return max(code for code, _ in results)

    path = paths[0] if paths else "-"
    _emit(_run_solve_single(args, path), args.out)
    return 0


def _cmd_bounds(args) -> int:
    inst, gs, instf, source = _read_instance(args.instance)
    report = sandwich(inst, gs, args.variant)
    if args.with_oracle:
        report.oracle_value = oracle_variant(inst, gs, args.variant,
                                             n_limit=args.limit).value
    rep = {
        "variant": report.variant,
        "lower_value": report.lower_value,
        "upper_value": report.upper_value,
        "lower_minimizer": [float(x) for x in report.lower_minimizer],
        "upper_minimizer": [float(x) for x in report.upper_minimizer],
        "oracle_value": report.oracle_value,
        "upper_relaxed_value": report.upper_relaxed_value,
    }
    config = {"variant": args.variant, "with_oracle": bool(args.with_oracle)}
    record = _record(instf, source, "bounds", config, rep, args.stamp)
    _emit(dumps_canonical(record.to_dict()), args.out)
    return 0


def _cmd_oracle(args) -> int:
    inst, gs, instf, source = _read_instance(args.instance)
    result = oracle_prox_l0_ogl(inst, gs, n_limit=args.limit)
    rep = {
        "value": result.value,
        "minimizer": [float(x) for x in result.minimizer],
        "method": result.method,
    }
    record = _record(instf, source, "oracle", {"limit": args.limit}, rep,
                     args.stamp)
    _emit(dumps_canonical(record.to_dict()), args.out)
    return 0


def _load_point(path: str, n: int) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {path}: {exc}") from exc
    if isinstance(data, dict) and "report" in data:
        data = data["report"].get("x_final")
    elif isinstance(data, dict):
        data = data.get("x")
    if not isinstance(data, list):
        raise ValidationError("point: expected an array, {'x': ...}, or a record")
    if len(data) != n:
        raise ValidationError(f"point: expected length {n}, got {len(data)}")
    return np.asarray([float(x) for x in data])


def _cmd_check(args) -> int:
    inst, gs, instf, source = _read_instance(args.instance)
    x = _load_point(args.point, gs.n)
    ok, residual = stationarity_check(x, inst, gs)
    rep = {
        "stationary": bool(ok),
        "residual": float(residual),
        "objective": objective_value(x, inst, gs),
    }
    record = _record(instf, source, "check", {"point": args.point}, rep,
                     args.stamp)
    _emit(dumps_canonical(record.to_dict()), args.out)
    return 0


def _cmd_gen(args) -> int:
    try:
        instf = generate_instance(
            seed=args.seed, n=args.n, m=args.m,
            group_size_range=(args.min_size, args.max_size),
            overlap_mode=args.mode, s=args.s, lambda0=args.lambda0,
            lambda1=args.lambda1, lambda_=args.lambda_,
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    _emit(dumps_canonical(instf.to_dict()), args.out)
    return 0


_COMMANDS = {
    "solve": _cmd_solve,
    "bounds": _cmd_bounds,
    "oracle": _cmd_oracle,
    "check": _cmd_check,
    "gen": _cmd_gen,
}


def run_cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NonFiniteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except TooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


def main():
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
