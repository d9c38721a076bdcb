"""Command-line front end: simulate, sweep, theorycheck, plot.

Exit codes: 0 success, 2 configuration error, 3 runtime or numeric error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .config import SimConfig, build_config, experiment_id, parse_config_file
from .errors import ConfigError
from .weights import TheoryStatus, WeightKind, parse_dist_spec, validate_tuning

logger = logging.getLogger("mbe")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mbe", description="Bandit simulation harness")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_experiment_flags(p):
        p.add_argument("--config", help="config file (sectioned key = value)")
        p.add_argument("--env", help="environment spec, e.g. mab:bernoulli:K=10:alpha=1")
        p.add_argument("--alg", action="append", default=None, help="algorithm spec (repeatable)")
        p.add_argument("--T", dest="t", type=int, help="rounds per run")
        p.add_argument("--runs", type=int, help="independent runs")
        p.add_argument("--seed", type=int, help="master seed (MBE_SEED overrides)")
        p.add_argument("--stride", type=int, help="checkpoint stride (default T/200)")
        p.add_argument("--workers", type=int, help="parallel worker processes")
        p.add_argument("--realized", action="store_true", default=None,
                       help="charge realized instead of expected regret")
        p.add_argument("--out", help="output directory")

    sim = sub.add_parser("simulate", help="run one experiment and write csv + svg")
    add_experiment_flags(sim)
    sim.add_argument("--no-plot", action="store_true", help="skip the svg figure")
    sim.add_argument("--log-x", action="store_true")
    sim.add_argument("--log-y", action="store_true")

    swp = sub.add_parser("sweep", help="tune each algorithm over a parameter grid")
    add_experiment_flags(swp)
    swp.add_argument("--grid", help="comma-separated grid (default 2^(k-4), k=0..6)")
    swp.add_argument("--no-plot", action="store_true")
    swp.add_argument("--log-x", action="store_true")
    swp.add_argument("--log-y", action="store_true")

    chk = sub.add_parser("theorycheck", help="run the numerical bound checks")
    chk.add_argument("--out", help="output directory", default=None)
    chk.add_argument("--seed", type=int, default=7)
    chk.add_argument("--fast", action="store_true", help="smaller monte-carlo samples")

    plo = sub.add_parser("plot", help="render an aggregate csv to svg")
    plo.add_argument("--input", required=True, help="aggregate csv path")
    plo.add_argument("--out", required=True, help="svg output path")
    plo.add_argument("--log-x", action="store_true")
    plo.add_argument("--log-y", action="store_true")
    return parser


def _config_from_args(args) -> SimConfig:
    file_values = parse_config_file(args.config) if args.config else None
    overrides = {
        "env": args.env,
        "alg": args.alg,
        "t": args.t,
        "runs": args.runs,
        "seed": args.seed,
        "stride": args.stride,
        "workers": args.workers,
        "realized": args.realized,
        "out": args.out,
    }
    return build_config(file_values, overrides)


def _tuning_notices(cfg: SimConfig) -> list[str]:
    notices = []
    for alg in cfg.algorithms:
        if alg.name != "mbe":
            continue
        raw_dist = alg.get("dist")
        dist = parse_dist_spec(raw_dist) if raw_dist else None
        sigma = float(alg.get("sigma", "1")) if dist is None else (
            dist.sigma_omega if dist.kind is WeightKind.GAUSSIAN_UNIT_MEAN else None
        )
        if sigma is None:
            continue
        lam = float(alg.get("lambda", "0.5"))
        if validate_tuning(lam, sigma) is TheoryStatus.PRACTICAL_ONLY:
            notices.append(f"{alg.label}: lambda below the theoretical threshold; practical mode")
    for alg in cfg.algorithms:
        if getattr_policy_oracle(alg):
            notices.append(f"{alg.label}: oracle-informed prior (uses the instance generator)")
    return notices


def getattr_policy_oracle(alg) -> bool:
    return alg.name == "ts" and alg.get("prior") == "cal"


def _cmd_simulate(args) -> int:
    from . import plotting, reports, simulate

    cfg = _config_from_args(args)
    out_dir = cfg.out_dir or "mbe-out"
    exp = experiment_id(cfg)
    notices = _tuning_notices(cfg)
    status = "running"
    try:
        result = simulate.run_experiment(cfg)
        agg = result.aggregate()
        reports.write_raw_csv(os.path.join(out_dir, "raw.csv"), result)
        reports.write_aggregate_csv(os.path.join(out_dir, "aggregate.csv"), agg)
        if not args.no_plot:
            plotting.emit_plot_svg(
                agg, os.path.join(out_dir, "regret.svg"), log_x=args.log_x, log_y=args.log_y
            )
        status = "complete"
        return 0
    except Exception:
        status = "failed"
        raise
    finally:
        text = reports.render_metadata(
            cfg, version=__version__, experiment=exp, status=status, notices=notices
        )
        reports.write_metadata(os.path.join(out_dir, "metadata.txt"), text)


def _cmd_sweep(args) -> int:
    from . import plotting, reports, simulate

    cfg = _config_from_args(args)
    out_dir = cfg.out_dir or "mbe-out"
    if args.grid:
        try:
            grid = [float(x) for x in args.grid.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad grid {args.grid!r}") from exc
    else:
        grid = list(simulate.DEFAULT_GRID)
    notices = _tuning_notices(cfg)
    status = "running"
    try:
        result = simulate.sweep(cfg, grid)
        reports.write_sweep_csv(os.path.join(out_dir, "sweep.csv"), result)
        for base_label, exp_result in result.best.items():
            agg = exp_result.aggregate()
            safe = base_label.replace(":", "_").replace("/", "_").replace(",", "_")
            reports.write_aggregate_csv(os.path.join(out_dir, f"best_{safe}.csv"), agg)
            if not args.no_plot:
                plotting.emit_plot_svg(
                    agg, os.path.join(out_dir, f"best_{safe}.svg"), log_x=args.log_x, log_y=args.log_y
                )
        status = "complete"
        for entry in result.entries:
            if entry.selected:
                print(f"best {entry.algorithm}: {entry.label} final_mean_regret={entry.final_mean_regret:.6g}")
        return 0
    except Exception:
        status = "failed"
        raise
    finally:
        text = reports.render_metadata(
            cfg, version=__version__, experiment=experiment_id(cfg), status=status, notices=notices
        )
        reports.write_metadata(os.path.join(out_dir, "metadata.txt"), text)


def _cmd_theorycheck(args) -> int:
    from . import reports, theorycheck

    checks = theorycheck.run_all_checks(seed=args.seed, fast=args.fast)
    for report in checks:
        verdict = "PASS" if report.passed else "FAIL"
        print(f"[{verdict}] {report.name} (seed={report.seed})")
        for row in report.rows:
            mark = "ok " if row.passed else "BAD"
            print(
                f"    {mark} {row.point}: observed={row.observed:.6g} "
                f"bounds=({row.bound_lo:.6g}, {row.bound_hi:.6g}) margin={row.margin:.3g}"
            )
        if report.notes:
            print(f"    note: {report.notes}")
    if args.out:
        reports.write_theorycheck_csv(os.path.join(args.out, "theorycheck.csv"), checks)
    return 0


def _cmd_plot(args) -> int:
    from . import plotting, reports

    agg = reports.read_aggregate_csv(args.input)
    plotting.emit_plot_svg(agg, args.out, log_x=args.log_x, log_y=args.log_y)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "sweep": _cmd_sweep,
        "theorycheck": _cmd_theorycheck,
        "plot": _cmd_plot,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary maps to exit codes
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
