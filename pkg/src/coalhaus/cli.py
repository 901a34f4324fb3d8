"""Command-line entry point (``coalhaus <subcommand>``).

Every CSV starts with a ``# key=value ...`` stamp line carrying the config
hash and the master seed, uses ``\\n`` line endings and writes floats in
round-trip precision, so identical inputs give byte-identical files.

Exit codes: 0 success, 1 a statistical check failed, 2 invalid input,
3 unknown config key, 4 parameters inconsistent with the regime,
5 output not writable.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys

import numpy as np

from coalhaus import config as config_mod
from coalhaus import experiments, stats
from coalhaus.coalescent import LambdaMeasure, merge_rate, simulate_coalescent
from coalhaus.genealogy import CountingPath, psi
from coalhaus.limit_lookdown import simulate_limit_lookdown
from coalhaus.lookdown import BIRTH, simulate_lookdown
from coalhaus.offspring import OffspringLaw
from coalhaus.population import PopulationState, RegimeConfig, simulate_population
from coalhaus.rates import convergence_report

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_UNKNOWN_KEY, EXIT_REGIME, EXIT_UNWRITABLE = 0, 1, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INVALID):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# output helpers


def params_hash(params: dict) -> str:
    text = json.dumps(params, sort_keys=True, separators=(",", ":"), default=repr)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return str(v)


def csv_text(stamp: dict, header, rows) -> str:
    buf = io.StringIO()
    buf.write("# " + " ".join(f"{k}={_fmt(v)}" for k, v in stamp.items()) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def read_stamped_csv(path) -> tuple[dict, list[dict]]:
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise CliError(f"{path}: missing '# key=value' stamp line")
        stamp = dict(item.split("=", 1) for item in first[1:].split())
        return stamp, list(csv.DictReader(fh))


def check_writable(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
        raise CliError(f"cannot write to {path}", EXIT_UNWRITABLE)
    if os.path.isdir(path) or (os.path.exists(path) and not os.access(path, os.W_OK)):
        raise CliError(f"cannot write to {path}", EXIT_UNWRITABLE)


def emit(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write to {path}: {exc}", EXIT_UNWRITABLE) from None


def _levels(lv) -> str:
    return "-".join(str(int(v)) for v in lv)


# ---------------------------------------------------------------------------
# shared argument handling


def _load_config(args) -> config_mod.ExperimentConfig:
    if not args.config:
        raise CliError("--config is required for this command")
    try:
        cfg = config_mod.load(args.config)
    except config_mod.UnknownKeyError as exc:
        raise CliError(str(exc), EXIT_UNKNOWN_KEY) from None
    except config_mod.RegimeMismatchError as exc:
        raise CliError(str(exc), EXIT_REGIME) from None
    except config_mod.ConfigError as exc:
        raise CliError(str(exc)) from None
    except OSError as exc:
        raise CliError(f"cannot read {args.config}: {exc}") from None
    if args.seed is not None:
        cfg.seed = args.seed
    if args.reps is not None:
        cfg.reps = args.reps
    if args.out is not None:
        cfg.out = args.out
    if getattr(args, "k", None) is not None:
        cfg.k = args.k
    if getattr(args, "mode", None) is not None:
        cfg.mode = args.mode
    return cfg


def _lambda(text: str) -> LambdaMeasure:
    try:
        return LambdaMeasure.parse(text)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _stamp(cfg_hash: str, seed, **extra) -> dict:
    return {"config_hash": cfg_hash, "seed": seed, **extra}


def _seed(args, default: int = 0) -> int:
    return default if args.seed is None else args.seed


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate_population(args) -> int:
    cfg = _load_config(args)
    traj_path, freq_path = cfg.out + "_trajectory.csv", cfg.out + "_frequency.csv"
    for p in (traj_path, freq_path):
        check_writable(p)
    rc = cfg.regime
    grid = np.linspace(0.0, cfg.horizon, cfg.grid_points)
    letters = cfg.iid_letters()
    n0 = rc.initial_size()

    def run(r, rng):
        init = PopulationState.distinct(n0) if letters is None else PopulationState.iid(n0, letters, rng)
        return simulate_population(rc, init, cfg.horizon, rng, grid=grid)

    trajs = experiments.map_replicates(run, cfg.reps, cfg.seed, experiments.resolve_threads(args.threads))
    t_rows, f_rows = [], []
    for r, tr in enumerate(trajs):
        for i, t in enumerate(tr.times):
            t_rows.append((r, float(t), float(tr.n[i]), int(tr.sizes[i] == 0)))
            for typ in np.flatnonzero(tr.frequencies[i]):
                f_rows.append((r, float(t), int(typ), float(tr.frequencies[i, typ])))
    stamp = _stamp(cfg.config_hash(), cfg.seed, reps=cfg.reps)
    emit(traj_path, csv_text(stamp, ["rep", "t_rescaled", "n", "extinct"], t_rows))
    emit(freq_path, csv_text(stamp, ["rep", "t_rescaled", "type", "freq"], f_rows))
    return EXIT_OK


def cmd_simulate_lookdown(args) -> int:
    cfg = _load_config(args)
    path = cfg.out + "_events.csv"
    check_writable(path)
    rc = cfg.regime
    letters = cfg.iid_letters()
    n0 = rc.initial_size()

    def run(r, rng):
        init = np.arange(1, n0 + 1) if letters is None else rng.integers(1, letters + 1, size=n0)
        log, _ = simulate_lookdown(rc, cfg.k, init, cfg.horizon, rng, mode=cfg.mode)
        return log

    logs = experiments.map_replicates(run, cfg.reps, cfg.seed, experiments.resolve_threads(args.threads))
    rows = []
    for r, log in enumerate(logs):
        for t, kind, _, lv in log.entries():
            rows.append((r, t, "birth" if kind == BIRTH else "death", _levels(lv)))
    stamp = _stamp(cfg.config_hash(), cfg.seed, reps=cfg.reps, k=cfg.k, mode=cfg.mode,
                   time_scale=rc.time_scale, horizon=cfg.horizon)
    emit(path, csv_text(stamp, ["rep", "t_model", "kind", "levels"], rows))
    return EXIT_OK


def cmd_simulate_limit(args) -> int:
    lam = _lambda(args.lambda_)
    if args.k < 2:
        raise CliError("--k must be at least 2")
    if args.out:
        check_writable(args.out)
    seed = _seed(args)
    reps = args.reps or 1

    def run(r, rng):
        return simulate_limit_lookdown(lam, args.k, list(range(1, args.k + 1)), args.horizon, rng)[0]

    logs = experiments.map_replicates(run, reps, seed, experiments.resolve_threads(args.threads))
    rows = [(r, t, _levels(J)) for r, log in enumerate(logs) for t, J in zip(log.times, log.sets)]
    h = params_hash({"command": "simulate-limit", "lambda": str(lam), "k": args.k,
                     "horizon": repr(args.horizon), "reps": reps})
    emit(args.out, csv_text(_stamp(h, seed, reps=reps, k=args.k, horizon=args.horizon),
                            ["rep", "t", "levels"], rows))
    return EXIT_OK


def _partition_rows(r, path):
    rows = [(r, 0.0, str(path.initial))]
    for t, state in zip(path.times, path.states[1:]):
        rows.append((r, t, str(state)))
    return rows


def cmd_simulate_coalescent(args) -> int:
    lam = _lambda(args.lambda_)
    if args.out:
        check_writable(args.out)
    seed = _seed(args)
    reps = args.reps or 1

    def run(r, rng):
        return simulate_coalescent(lam, args.k, args.horizon, rng)

    paths = experiments.map_replicates(run, reps, seed, experiments.resolve_threads(args.threads))
    rows = [row for r, p in enumerate(paths) for row in _partition_rows(r, p)]
    h = params_hash({"command": "simulate-coalescent", "lambda": str(lam), "k": args.k,
                     "horizon": repr(args.horizon), "reps": reps})
    emit(args.out, csv_text(_stamp(h, seed, reps=reps, k=args.k, horizon=args.horizon),
                            ["rep", "t", "partition"], rows))
    return EXIT_OK


def cmd_genealogy(args) -> int:
    if args.out:
        check_writable(args.out)
    try:
        stamp, records = read_stamped_csv(args.events)
    except OSError as exc:
        raise CliError(f"cannot read {args.events}: {exc}") from None
    try:
        reps = int(stamp["reps"])
        horizon = float(stamp["horizon"])
        scale = float(stamp.get("time_scale", "1.0"))
        log_k = int(stamp["k"])
    except (KeyError, ValueError):
        raise CliError(f"{args.events}: stamp lacks reps, k or horizon") from None
    k = args.k or log_k
    if stamp.get("mode", "oracle") == "scalable" and k > log_k:
        raise CliError(f"a log restricted to k={log_k} cannot give a genealogy of {k} levels")
    time_col = "t_model" if records and "t_model" in records[0] else "t"
    per_rep: dict[int, list] = {r: [] for r in range(reps)}
    for rec in records:
        if rec.get("kind", "birth") != "birth":
            continue
        J = tuple(int(v) for v in rec["levels"].split("-"))
        per_rep.setdefault(int(rec["rep"]), []).append((float(rec[time_col]) / scale, J))
    rows = []
    for r in sorted(per_rep):
        try:
            path = psi(CountingPath.from_events(k, horizon, per_rep[r]))
        except ValueError as exc:
            raise CliError(f"rep {r}: {exc}") from None
        rows.extend(_partition_rows(r, path))
    h = params_hash({"command": "genealogy", "source": stamp.get("config_hash", ""), "k": k})
    emit(args.out, csv_text(_stamp(h, stamp.get("seed", ""), reps=reps, k=k, horizon=horizon),
                            ["rep", "t", "partition"], rows))
    return EXIT_OK


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise CliError("--n-grid must look like start:stop:step") from None
    if step <= 0 or hi < lo:
        raise CliError("--n-grid needs start <= stop and step > 0")
    return np.arange(lo, hi + step * 1e-9, step)


def _regime_from_args(args) -> RegimeConfig:
    if args.regime == "stable":
        if args.alpha is None:
            raise CliError("the stable regime needs --alpha", EXIT_REGIME)
        law = OffspringLaw.stable(args.alpha)
    elif args.alpha is not None:
        raise CliError("--alpha belongs to the stable regime", EXIT_REGIME)
    elif args.regime == "neveu":
        law = OffspringLaw.neveu()
    else:
        law = OffspringLaw.parse(args.offspring)
    try:
        return RegimeConfig(args.b, args.d, args.c, 10.0, args.regime, law)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_REGIME) from None


def cmd_verify_rates(args) -> int:
    if args.out:
        check_writable(args.out)
    try:
        K_values = [float(x) for x in args.K.split(",")]
    except ValueError:
        raise CliError("--K must be a comma-separated list") from None
    cfg = _regime_from_args(args)
    grid = _parse_grid(args.n_grid) if args.n_grid else None
    c0 = args.c0
    if c0 is None:
        c0 = cfg.n_star / 2.0
        if grid is not None and grid.min() < c0 / 2.0:
            c0 = 2.0 * grid.min()  # any c_0 < n_* is admissible
    try:
        rep = convergence_report(cfg, args.k, K_values, grid, c0)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    h = params_hash({"command": "verify-rates", "regime": cfg.regime, "law": str(cfg.offspring),
                     "b": cfg.b, "d": cfg.d, "c": cfg.c, "k": args.k, "K": K_values,
                     "grid": [repr(x) for x in rep.n_grid], "c0": repr(c0)})
    stamp = _stamp(h, "none", regime=cfg.regime, k=args.k, c0=c0,
                   strictly_decreasing=rep.strictly_decreasing())
    emit(args.out, csv_text(stamp, ["K", "j", "sup_gap"], rep.rows()))
    return EXIT_OK if rep.strictly_decreasing() else EXIT_FAILED


def cmd_rates(args) -> int:
    lam = _lambda(args.lambda_)
    if args.n < 2:
        raise CliError("--n must be at least 2")
    if args.out:
        check_writable(args.out)
    rows = [(n, j, merge_rate(lam, n, j)) for n in range(2, args.n + 1) for j in range(2, n + 1)]
    h = params_hash({"command": "rates", "lambda": str(lam), "n": args.n})
    emit(args.out, csv_text(_stamp(h, "none", **{"lambda": str(lam)}), ["n", "j", "rate"], rows))
    return EXIT_OK


def cmd_compare(args) -> int:
    if args.out:
        check_writable(args.out)
    try:
        reports = experiments.run_scenario(args.scenario, args.reps, _seed(args, 1),
                                           experiments.resolve_threads(args.threads))
    except ValueError as exc:
        raise CliError(str(exc)) from None
    for rep in reports:
        print(rep.line(), file=sys.stderr)
    emit(args.out, stats.dumps_reports(reports))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def cmd_report(args) -> int:
    if args.out:
        check_writable(args.out)
    reports = []
    for path in args.inputs:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, ValueError) as exc:
            raise CliError(f"cannot read report {path}: {exc}") from None
        try:
            reports.extend(stats.TestReport.from_dict(d) for d in data)
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(f"{path}: not a report file ({exc})") from None
    lines = [r.line() for r in reports]
    failed = sum(not r.passed for r in reports)
    lines.append(f"{len(reports) - failed}/{len(reports)} checks passed")
    emit(args.out, "\n".join(lines) + "\n")
    return EXIT_OK if failed == 0 else EXIT_FAILED


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment configuration")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--reps", type=int, help="replicate count (overrides the config)")
    common.add_argument("--out", help="output file, or prefix for multi-file commands")
    common.add_argument("--threads", type=int, default=1,
                        help=f"worker threads (the {experiments.THREADS_ENV} variable wins)")

    p = argparse.ArgumentParser(prog="coalhaus", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate-population", parents=[common], help="forward population runs")
    s.set_defaults(func=cmd_simulate_population)

    s = sub.add_parser("simulate-lookdown", parents=[common], help="prelimit lookdown event logs")
    s.add_argument("--k", type=int, help="number of tracked levels")
    s.add_argument("--mode", choices=["scalable", "oracle"])
    s.set_defaults(func=cmd_simulate_lookdown)

    s = sub.add_parser("simulate-limit", parents=[common], help="limiting lookdown on k levels")
    s.add_argument("--lambda", dest="lambda_", required=True)
    s.add_argument("--k", type=int, default=4)
    s.add_argument("--horizon", type=float, default=10.0)
    s.set_defaults(func=cmd_simulate_limit)

    s = sub.add_parser("simulate-coalescent", parents=[common], help="direct Lambda-coalescent paths")
    s.add_argument("--lambda", dest="lambda_", required=True)
    s.add_argument("--k", type=int, default=6)
    s.add_argument("--horizon", type=float, default=math.inf)
    s.set_defaults(func=cmd_simulate_coalescent)

    s = sub.add_parser("genealogy", parents=[common], help="partition paths from an event CSV")
    s.add_argument("--events", required=True)
    s.add_argument("--k", type=int)
    s.set_defaults(func=cmd_genealogy)

    s = sub.add_parser("verify-rates", parents=[common], help="prelimit vs limit merger rates")
    s.add_argument("--regime", choices=["finite_variance", "stable", "neveu"], required=True)
    s.add_argument("--alpha", type=float)
    s.add_argument("--offspring", default="geometric(q=0.5)",
                   help="offspring law for the finite-variance regime")
    s.add_argument("--b", type=float, default=1.0)
    s.add_argument("--d", type=float, default=0.0)
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--k", type=int, default=4)
    s.add_argument("--K", default="100,1000,10000,100000")
    s.add_argument("--n-grid", dest="n_grid")
    s.add_argument("--c0", type=float, help="lower size level c_0 (default n_*/2)")
    s.set_defaults(func=cmd_verify_rates)

    s = sub.add_parser("rates", parents=[common], help="table of lambda(n, j)")
    s.add_argument("--lambda", dest="lambda_", required=True)
    s.add_argument("--n", type=int, default=8)
    s.set_defaults(func=cmd_rates)

    s = sub.add_parser("compare", parents=[common], help="run a named statistical comparison")
    s.add_argument("--scenario", required=True, choices=experiments.SCENARIOS)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("report", parents=[common], help="summarise JSON report files")
    s.add_argument("inputs", nargs="+")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"coalhaus: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
