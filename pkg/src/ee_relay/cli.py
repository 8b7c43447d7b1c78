"""``ee-relay`` command line.

Exit codes: 0 success, 2 config error, 3 infeasible at every point,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .core.config import ConfigError, load_config
from .experiments import (
    COMPLEXITY_COLUMNS,
    KINDS,
    OPTIMIZE_COLUMNS,
    ORACLE_COLUMNS,
    SWEEP_COLUMNS,
    TRACE_COLUMNS,
    VALIDATE_COLUMNS,
    ExperimentSpec,
    parse_sweep,
    run_complexity,
    run_optimize,
    run_oracle,
    run_sweep,
    run_validate,
    write_csv,
)
from .optimizer import ConsistencyError

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("ee_relay")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ee-relay", description="Energy-efficiency experiments for a massive-MIMO relay.")
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--config", type=Path, help="key = value config file")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override one config key (repeatable)")
    ap.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    ap.add_argument("--sweep", metavar="PARAM=VALUES",
                    help="PARAM=v1,v2,... or PARAM=start:stop:step; PARAM in K, M, p_tx_relay_dbm, r_max, rho_r, R0, m_max")
    ap.add_argument("--trials", type=int, default=10_000, help="Monte-Carlo trials per point (validate)")
    ap.add_argument("--seeds", default="0", help="comma-separated topology/MC seeds (validate)")
    ap.add_argument("--levels", type=int, default=50, help="oracle power-grid levels D'")
    ap.add_argument("--starts", type=int, default=4, help="multistart count (optimize)")
    ap.add_argument("--loop-budget", type=int, default=50, help="I_loop for the analytic complexity count")
    ap.add_argument("--workers", type=int, default=1, help="process pool size for sweep points")
    ap.add_argument("--no-plot", action="store_true", help="skip SVG output")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _overrides(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def make_spec(args: argparse.Namespace) -> ExperimentSpec:
    config = load_config(args.config, _overrides(args.overrides))
    param, values = parse_sweep(args.sweep) if args.sweep else (None, ())
    try:
        seeds = tuple(int(s) for s in args.seeds.split(",") if s.strip())
    except ValueError as exc:
        raise ConfigError(f"bad --seeds {args.seeds!r}") from exc
    return ExperimentSpec(
        kind=args.kind, swept_parameter=param, sweep_values=values, base_config=config,
        mc_trials=args.trials, seeds=seeds, output_path=args.out, power_grid_levels=args.levels,
        starts=args.starts, loop_budget=args.loop_budget, workers=args.workers,
    )


def run(spec: ExperimentSpec, plot: bool = True) -> int:
    """Run one experiment, write its CSV (and SVG) files, return the exit code."""
    out = Path(spec.output_path or "results")
    rows: list[dict]
    code = EXIT_OK
    if spec.kind == "validate":
        rows = run_validate(spec)
        write_csv(rows, out / "validate.csv", VALIDATE_COLUMNS)
        figs = [("validate_ee.svg", ("ee_mc", "ee_thm1", "ee_cor1", "ee_thm2", "ee_lb"), "EE [bit/J]", False)]
    elif spec.kind == "sweep":
        rows = run_sweep(spec)
        write_csv(rows, out / "sweep.csv", SWEEP_COLUMNS)
        figs = [("sweep_ee.svg", ("ee_thm2", "ee_lb"), "EE [bit/J]", False),
                ("sweep_rate.svg", ("rate_thm2", "rate_lb"), "rate per pair [bit/s/Hz]", False)]
    elif spec.kind == "optimize":
        rows, trace = run_optimize(spec)
        write_csv(rows, out / "optimize.csv", OPTIMIZE_COLUMNS)
        write_csv(trace, out / "optimize_trace.csv", TRACE_COLUMNS)
        figs = [("optimize_ee.svg", ("ee_lb_star",), "EE_LB* [bit/J]", False)]
        if plot:
            from .plots import plot_trace

            plot_trace(trace, out / "optimize_trace.svg")
        if all(r.get("infeasible") for r in rows):
            code = EXIT_INFEASIBLE
    elif spec.kind == "oracle":
        rows = run_oracle(spec)
        write_csv(rows, out / "oracle.csv", ORACLE_COLUMNS)
        figs = [("oracle_ee.svg", ("ee_lb_star",), "EE_LB* [bit/J]", False)]
        if all(r.get("infeasible") for r in rows):
            code = EXIT_INFEASIBLE
    else:
        rows = run_complexity(spec)
        write_csv(rows, out / "complexity.csv", COMPLEXITY_COLUMNS)
        figs = [("complexity.svg", ("es_count", "joint_measured", "joint_formula"), "operations", True)]
    if plot and (spec.swept_parameter is not None or spec.kind == "complexity"):
        from .plots import plot_series

        xkey = "m_max" if spec.kind == "complexity" else None
        for name, cols, ylabel, logy in figs:
            plot_series(rows, cols, out / name, ylabel, logy, xkey)
    log.info("wrote %d rows to %s", len(rows), out)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        spec = make_spec(args)
        return run(spec, plot=not args.no_plot)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, ConsistencyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
