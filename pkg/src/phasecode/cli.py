"""Command-line front end: search runs, sweeps, studies, and calculators.

Every experiment writes flat files under --out: a per-generation run log
CSV (fixed header, deterministic body for a fixed config and seed), a
plot-data CSV, and a structured-text result record holding the best code,
its SCR, and the config echo. Wall-clock timings and environment notes
live in the result record, never in the plot data.

Exit codes: 0 success, 1 config/parse error, 2 I/O error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import baselines, echo, ga
from .codes import cross_correlation, format_code, parse_code
from .fitness import fitness, matched_filter_scr, optimal_filter, scr
from .ga import GaConfig, GenerationStats, RunResult

RUN_LOG_HEADER = [
    "run_id",
    "seed",
    "k",
    "best_gamma",
    "mean_gamma",
    "distinct_members",
    "visited_states",
    "elapsed_seconds",
]

_STUDY_VARIABLES = ("init_seeding", "tournament_M", "elite_E")
_MAX_SWEEP_N = 256


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as config errors (exit code 1)."""

    def error(self, message):
        raise ValueError(message)


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _mix64(value: int) -> int:
    """splitmix64 finalizer; decorrelates sweep seeds derived per N."""
    z = (value + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def derive_sweep_seed(seed: int, N: int) -> int:
    return (seed ^ _mix64(N)) & 0x7FFFFFFFFFFFFFFF


def _load_config_file(path: str) -> dict:
    """Flat key=value config text; '#' starts a comment."""
    values: dict[str, object] = {}
    int_keys = {"N", "N_G", "P", "E", "M", "seed"}
    float_keys = {"p_muta", "p_conv"}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key in int_keys:
            values[key] = int(val)
        elif key in float_keys:
            values[key] = float(val)
        else:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
    return values


def _build_ga_config(args, seed_codes=()) -> GaConfig:
    values = {
        "N": 59,
        "N_G": 200,
        "P": 10_000,
        "E": 2_000,
        "M": 5,
        "p_muta": 0.3,
        "p_conv": 0.3,  # keep rate; the published 0.7 is the drop rate
        "seed": 0,
    }
    if getattr(args, "config", None):
        values.update(_load_config_file(args.config))
    for key in values:
        arg = getattr(args, key, None)
        if arg is not None:
            values[key] = arg
    config = GaConfig(seed_codes=tuple(seed_codes), **values)
    config.validate()
    return config


def _add_ga_flags(parser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--N", type=int, help="code length")
    parser.add_argument("--N_G", type=int, help="number of generations")
    parser.add_argument("--P", type=int, help="population size")
    parser.add_argument("--E", type=int, help="elite count")
    parser.add_argument("--M", type=int, help="tournament size")
    parser.add_argument("--p_muta", type=float, help="mutation probability")
    parser.add_argument("--p_conv", type=float, help="duplicate keep probability")
    parser.add_argument("--seed", type=int, help="master seed")


def _add_common_flags(parser) -> None:
    parser.add_argument("--out", default="runs", help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="evaluation thread cap")


def _read_code_arg(args):
    if getattr(args, "file", None):
        for line in Path(args.file).read_text().splitlines():
            if line.strip():
                return parse_code(line)
        raise ValueError(f"no code found in {args.file}")
    if getattr(args, "code", None):
        if args.code in ("legendre", "alphaseq", "hpgan", "ga"):
            return baselines.known_code(args.code).code
        return parse_code(args.code)
    raise ValueError("provide a code string, a registry name, or --file")


def _write_run_log(path: Path, run_id: str, seed: int, history: list[GenerationStats]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUN_LOG_HEADER)
        for st in history:
            writer.writerow(
                [
                    run_id,
                    seed,
                    st.k,
                    _fmt(st.best_gamma),
                    _fmt(st.mean_gamma),
                    st.distinct_members,
                    st.visited_states,
                    f"{st.elapsed_seconds:.6f}",
                ]
            )


def _write_plot_data(path: Path, history: list[GenerationStats]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["generation", "visited_states", "best_gamma"])
        for st in history:
            writer.writerow([st.k, st.visited_states, _fmt(st.best_gamma)])


def _write_result(path: Path, fields: dict, code) -> None:
    lines = [f"{key} = {value}" for key, value in fields.items()]
    lines.append(f"code = {format_code(code)}")
    path.write_text("\n".join(lines) + "\n")


def _result_metadata(run_id: str, config: GaConfig, result: RunResult, threads: int):
    return {
        "run_id": run_id,
        "mode": "search",
        "N": config.N,
        "seed": config.seed,
        "gamma": _fmt(result.best_gamma),
        "visited_states": result.total_visited_states,
        "total_evaluations": result.total_evaluations,
        "generations_run": result.history[-1].k,
        "N_G": config.N_G,
        "P": config.P,
        "E": config.E,
        "M": config.M,
        "p_muta": config.p_muta,
        "p_conv": config.p_conv,
        "seed_codes": len(config.seed_codes),
        "threads": threads,
        "elapsed_seconds_total": f"{result.history[-1].elapsed_seconds:.6f}",
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_search(args) -> int:
    seeds = ()
    if args.seed_known:
        seeds = tuple(
            k.code for k in baselines.known_codes() if k.name != "ga"
        )
    config = _build_ga_config(args, seed_codes=seeds)
    out = _out_dir(args)
    run_id = args.run_id or f"search_N{config.N}_seed{config.seed}"
    progress = None
    if args.verbose:
        progress = lambda st: print(
            f"[{run_id}] k={st.k} best={st.best_gamma:.4f} "
            f"visited={st.visited_states}",
            file=sys.stderr,
        )
    result = ga.run(
        config, threads=args.threads, stop_gamma=args.stop_gamma, on_generation=progress
    )
    _write_run_log(out / f"{run_id}.log.csv", run_id, config.seed, result.history)
    _write_plot_data(out / f"{run_id}.plot.csv", result.history)
    _write_result(
        out / f"{run_id}.result.txt",
        _result_metadata(run_id, config, result, args.threads),
        result.best_code,
    )
    print(
        f"{run_id}: best gamma {result.best_gamma:.4f} after "
        f"{result.history[-1].k} generations, "
        f"{result.total_visited_states} visited states"
    )
    return 0


def cmd_eval(args) -> int:
    code = _read_code_arg(args)
    n = len(code)
    x = optimal_filter(code)
    print(f"N = {n}")
    if x is None:
        print("gamma = undefined (singular clutter matrix)")
        return 0
    best = scr(code, x)
    mf = matched_filter_scr(code)
    print(f"gamma (optimal mismatched filter) = {best.gamma:.6f}")
    print(f"gamma (matched filter) = {mf.gamma:.6f}")
    print("optimal filter x*:")
    for lo in range(0, n, 8):
        vals = ", ".join(f"{v: .6f}" for v in x[lo : lo + 8])
        print(f"  {vals}")
    print("squared lag responses (x . shifted(s, i))^2:")
    for lag in echo.lag_values(n):
        val = cross_correlation(x, code, int(lag)) ** 2
        print(f"  lag {int(lag):+d}: {val:.6e}")
    return 0


def cmd_sweep(args) -> int:
    if not 2 <= args.lo <= args.hi <= _MAX_SWEEP_N:
        raise ValueError(
            f"sweep range must satisfy 2 <= lo <= hi <= {_MAX_SWEEP_N}, "
            f"got [{args.lo}, {args.hi}]"
        )
    out = _out_dir(args)
    base_seed = args.seed if args.seed is not None else 0
    rows = []
    for n in range(args.lo, args.hi + 1):
        seed_n = derive_sweep_seed(base_seed, n)
        sub = argparse.Namespace(**vars(args))
        sub.N = n
        sub.seed = seed_n
        sub.run_id = f"search_N{n}_seed{seed_n}"
        sub.seed_known = False
        sub.verbose = args.verbose
        cmd_search(sub)
        result_path = out / f"{sub.run_id}.result.txt"
        meta = _parse_result(result_path)
        rows.append((n, meta["gamma"], meta["visited_states"]))
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "best_gamma", "visited_states"])
        writer.writerows(rows)
    print(f"sweep complete: {len(rows)} rows -> {out / 'sweep.csv'}")
    return 0


def _parse_result(path: Path) -> dict:
    meta = {}
    for line in path.read_text().splitlines():
        key, _, value = line.partition(" = ")
        meta[key] = value
    return meta


def cmd_study(args) -> int:
    if args.variable not in _STUDY_VARIABLES:
        raise ValueError(
            f"unknown study variable {args.variable!r}; pick one of {_STUDY_VARIABLES}"
        )
    out = _out_dir(args)
    values = args.values
    if args.variable == "init_seeding" and not values:
        values = ["none", "seed_with_known_codes"]
    if not values:
        raise ValueError("study needs at least one value (--values)")
    for value in values:
        seeds = ()
        overrides = {}
        if args.variable == "init_seeding":
            if value not in ("none", "seed_with_known_codes"):
                raise ValueError(f"init_seeding value must be none or "
                                 f"seed_with_known_codes, got {value!r}")
            if value == "seed_with_known_codes":
                seeds = tuple(
                    k.code for k in baselines.known_codes() if k.name != "ga"
                )
        elif args.variable == "tournament_M":
            overrides["M"] = int(value)
        else:
            overrides["E"] = int(value)
        sub = argparse.Namespace(**vars(args))
        for key, val in overrides.items():
            setattr(sub, key, val)
        config = _build_ga_config(sub, seed_codes=seeds)
        run_id = f"study_{args.variable}_{value}_seed{config.seed}"
        result = ga.run(config, threads=args.threads, stop_gamma=args.stop_gamma)
        _write_run_log(out / f"{run_id}.log.csv", run_id, config.seed, result.history)
        with open(out / f"{run_id}.trajectory.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["generation", "best_gamma"])
            for st in result.history:
                writer.writerow([st.k, _fmt(st.best_gamma)])
        _write_result(
            out / f"{run_id}.result.txt",
            _result_metadata(run_id, config, result, args.threads),
            result.best_code,
        )
        print(f"{run_id}: best gamma {result.best_gamma:.4f}")
    return 0


def cmd_bruteforce(args) -> int:
    out = _out_dir(args)
    t0 = time.perf_counter()
    code, gamma = baselines.brute_force_best(
        args.N, fold_reversal=args.fold_reversal, threads=args.threads
    )
    _write_result(
        out / f"bruteforce_N{args.N}.result.txt",
        {
            "mode": "bruteforce",
            "N": args.N,
            "gamma": _fmt(gamma),
            "fold_reversal": args.fold_reversal,
            "elapsed_seconds_total": f"{time.perf_counter() - t0:.6f}",
        },
        code,
    )
    print(f"N={args.N}: optimal gamma {gamma:.6f}, code {format_code(code)}")
    return 0


def cmd_randomsearch(args) -> int:
    out = _out_dir(args)
    seed = args.seed if args.seed is not None else 0
    rng = np.random.default_rng(seed)
    result = baselines.random_search(args.N, args.budget, rng, threads=args.threads)
    run_id = f"randomsearch_N{args.N}_seed{seed}"
    _write_run_log(out / f"{run_id}.log.csv", run_id, seed, result.history)
    _write_result(
        out / f"{run_id}.result.txt",
        {
            "run_id": run_id,
            "mode": "randomsearch",
            "N": args.N,
            "seed": seed,
            "budget": args.budget,
            "gamma": _fmt(result.best_gamma),
            "visited_states": result.total_visited_states,
            "created_utc": datetime.now(timezone.utc).isoformat(),
        },
        result.best_code,
    )
    print(f"{run_id}: best gamma {result.best_gamma:.4f}")
    return 0


def cmd_simulate(args) -> int:
    code = _read_code_arg(args)
    seed = args.seed if args.seed is not None else 0
    if args.filter == "matched":
        x = np.asarray(code, dtype=float)
        analytic = matched_filter_scr(code).gamma
    else:
        x = optimal_filter(code)
        if x is None:
            raise RuntimeError("clutter matrix is singular; no optimal filter")
        analytic = fitness(code).gamma
    rng = np.random.default_rng(seed)
    estimate = echo.empirical_sir(
        code, x, args.trials, rng, distribution=args.distribution
    )
    rel = abs(estimate - analytic) / analytic if analytic else float("nan")
    print(f"N = {len(code)}")
    print(f"filter = {args.filter}")
    print(f"trials = {args.trials}")
    print(f"analytic gamma = {analytic:.6f}")
    print(f"empirical SIR = {estimate:.6f}")
    print(f"relative error = {rel:.4%}")
    if args.out:
        out = _out_dir(args)
        _write_result(
            out / f"simulate_N{len(code)}_seed{seed}.result.txt",
            {
                "mode": "simulate",
                "N": len(code),
                "seed": seed,
                "trials": args.trials,
                "filter": args.filter,
                "distribution": args.distribution,
                "analytic_gamma": _fmt(analytic),
                "empirical_sir": _fmt(estimate),
            },
            code,
        )
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="phasecode", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run the genetic search")
    _add_ga_flags(p)
    _add_common_flags(p)
    p.add_argument("--seed-known", action="store_true",
                   help="insert the published prior codes into the initial population")
    p.add_argument("--stop-gamma", type=float, default=None,
                   help="stop early once best gamma reaches this value")
    p.add_argument("--run-id", default=None)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("eval", help="score a code and print its optimal filter")
    p.add_argument("code", nargs="?", help="code text or registry name")
    p.add_argument("--file", help="file holding one code per line (first is used)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="search across a range of code lengths")
    _add_ga_flags(p)
    _add_common_flags(p)
    p.add_argument("lo", type=int)
    p.add_argument("hi", type=int)
    p.add_argument("--stop-gamma", type=float, default=None)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("study", help="hyperparameter study with shared seeds")
    _add_ga_flags(p)
    _add_common_flags(p)
    p.add_argument("--variable", required=True,
                   help="one of init_seeding, tournament_M, elite_E")
    p.add_argument("--values", nargs="*", default=[])
    p.add_argument("--stop-gamma", type=float, default=None)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("bruteforce", help="exact optimum by exhaustive enumeration")
    _add_common_flags(p)
    p.add_argument("N", type=int)
    p.add_argument("--fold-reversal", action="store_true")
    p.set_defaults(func=cmd_bruteforce)

    p = sub.add_parser("randomsearch", help="uniform random search baseline")
    _add_common_flags(p)
    p.add_argument("N", type=int)
    p.add_argument("budget", type=int)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_randomsearch)

    p = sub.add_parser("simulate", help="Monte-Carlo check of the analytic SCR")
    p.add_argument("code", nargs="?", help="code text or registry name")
    p.add_argument("--file", help="file holding one code per line")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--filter", choices=["optimal", "matched"], default="optimal")
    p.add_argument("--distribution", choices=["gaussian", "uniform"],
                   default="gaussian")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="optional output directory")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
