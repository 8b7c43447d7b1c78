"""Experiment runners behind the command line: sweeps, optimization, oracle, complexity.

Every runner returns its rows as a list of dicts in sweep order and can
write them as CSV. Numbers are written with ``repr`` so identical specs
give byte-identical files.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .analytic import (
    corollary1_ee,
    corollary2_lower_bound,
    equal_power_allocation,
    lower_bound_rates,
    theorem1_rates,
    theorem2_ee,
)
from .core.config import ConfigError, SystemConfig, dbm_to_watt, watt_to_dbm
from .core.power import total_power
from .core.topology import sample_topology
from .optimizer import (
    InfeasibleError,
    brute_force_oracle,
    default_starts,
    es_evaluation_count,
    optimize_joint,
    optimize_multistart,
)
from .simlab import estimate_rates_mc

SWEEPABLE = ("K", "M", "p_tx_relay_dbm", "r_max", "rho_r", "R0", "m_max")
KINDS = ("validate", "sweep", "optimize", "oracle", "complexity")


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    swept_parameter: str | None = None
    sweep_values: tuple = ()
    base_config: SystemConfig = field(default_factory=SystemConfig)
    mc_trials: int = 10_000
    seeds: tuple[int, ...] = (0,)
    output_path: Path | None = None
    power_grid_levels: int = 50
    starts: int = 4
    loop_budget: int = 50       # I_loop of the analytic complexity formula
    workers: int = 1

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.swept_parameter is not None:
            if self.swept_parameter not in SWEEPABLE:
                raise ConfigError(f"cannot sweep {self.swept_parameter!r}; choose from {', '.join(SWEEPABLE)}")
            if not self.sweep_values:
                raise ConfigError("sweep_values must be nonempty")
            for v in self.sweep_values:
                point_config(self.base_config, self.swept_parameter, v)
        if self.mc_trials < 2:
            raise ConfigError("mc_trials must be >= 2")
        if not self.seeds:
            raise ConfigError("need at least one seed")

    def points(self) -> list[tuple[Any, SystemConfig]]:
        if self.swept_parameter is None:
            return [(None, self.base_config)]
        return [(v, point_config(self.base_config, self.swept_parameter, v)) for v in self.sweep_values]


def point_config(base: SystemConfig, param: str, value) -> SystemConfig:
    """Config for one sweep point; raises :class:`ConfigError` outside the domain."""
    mapping: dict[str, Callable[[Any], dict]] = {
        "K": lambda v: {"num_pairs_K": _as_int(v, "K")},
        "M": lambda v: {"num_antennas_M": _as_int(v, "M")},
        "p_tx_relay_dbm": lambda v: {"relay_tx_power": dbm_to_watt(float(v))},
        "r_max": lambda v: {"r_max": float(v)},
        "rho_r": lambda v: {"pilot_snr_rho_r": float(v)},
        "R0": lambda v: {"qos_floor_R0": float(v)},
        "m_max": lambda v: {"m_max": _as_int(v, "m_max")},
    }
    try:
        return base.replace(**mapping[param](value))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{param}={value}: {exc}") from exc


def _as_int(v, name: str) -> int:
    f = float(v)
    if not f.is_integer():
        raise ConfigError(f"{name} must be an integer, got {v}")
    return int(f)


def parse_sweep(text: str) -> tuple[str, tuple]:
    """``PARAM=v1,v2,...`` or ``PARAM=start:stop:step`` (stop included when hit)."""
    if "=" not in text:
        raise ConfigError(f"sweep must look like PARAM=VALUES, got {text!r}")
    name, vals = (t.strip() for t in text.split("=", 1))
    if name not in SWEEPABLE:
        raise ConfigError(f"cannot sweep {name!r}; choose from {', '.join(SWEEPABLE)}")
    try:
        if ":" in vals:
            start, stop, step = (float(x) for x in vals.split(":"))
            if step <= 0 or stop < start:
                raise ConfigError(f"bad range {vals!r}")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [start + i * step for i in range(n)]
        else:
            values = [float(x) for x in vals.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad sweep values {vals!r}") from exc
    if not values:
        raise ConfigError("empty sweep")
    if name in ("K", "M", "m_max"):
        values = [_as_int(v, name) for v in values]
    return name, tuple(values)


# -- row helpers -------------------------------------------------------------------


def _map(fn, items: Sequence, workers: int) -> list:
    # rows come back in submission order whatever the completion order
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def write_csv(rows: list[dict], path: Path, columns: Sequence[str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = list(columns or (rows[0].keys() if rows else []))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in cols])
    return path


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _param_cols(spec: ExperimentSpec, value) -> dict:
    return {"param": spec.swept_parameter or "", "value": value}


# -- validate / sweep ----------------------------------------------------------------

VALIDATE_COLUMNS = (
    "param", "value", "K", "M", "p_tx_relay_w", "p_tx_relay_dbm", "rho_r",
    "ee_mc", "ee_thm1", "ee_cor1", "ee_thm2", "ee_lb",
    "rate_mc", "rate_thm2", "rate_lb", "mc_stderr",
)


def _validate_point(args) -> dict:
    spec, value, cfg = args
    K, M, P = cfg.num_pairs_K, cfg.num_antennas_M, cfg.relay_tx_power
    acc = {k: [] for k in ("ee_mc", "ee_thm1", "ee_cor1", "rate_mc", "mc_stderr")}
    for seed in spec.seeds:
        prof = sample_topology(cfg, K, seed)
        alloc = equal_power_allocation(prof, M, P)
        mc = estimate_rates_mc(prof, M, alloc, cfg, spec.mc_trials, seed)
        p_mc = total_power(cfg, K, M, mc.relay_tx_power).p_tot
        th1 = theorem1_rates(prof, M, alloc, cfg)
        acc["ee_mc"].append(mc.sum_rate / p_mc)
        acc["ee_thm1"].append(th1.sum_rate / total_power(cfg, K, M, th1.relay_tx_power).p_tot)
        acc["ee_cor1"].append(corollary1_ee(prof, M, P, cfg).ee)
        acc["rate_mc"].append(float(np.mean(mc.rate_per_pair)))
        acc["mc_stderr"].append(mc.sum_rate_stderr / p_mc)
    th2 = theorem2_ee(cfg, K, M, P)
    lb = corollary2_lower_bound(cfg, K, M, P)
    row = {
        **_param_cols(spec, value), "K": K, "M": M,
        "p_tx_relay_w": P, "p_tx_relay_dbm": watt_to_dbm(P), "rho_r": cfg.pilot_snr_rho_r,
        "ee_thm2": th2.ee, "ee_lb": lb.ee,
        "rate_thm2": float(min(th2.rate_per_pair_hop1, th2.rate_per_pair_hop2)),
        "rate_lb": float(min(lb.rate_per_pair_hop1, lb.rate_per_pair_hop2)),
    }
    for k, v in acc.items():
        row[k] = float(np.mean(v))
    if len(spec.seeds) > 1:
        # spread across drops dominates once several topologies are averaged
        row["mc_stderr"] = float(np.std(acc["ee_mc"], ddof=1) / math.sqrt(len(spec.seeds)))
    return row


def run_validate(spec: ExperimentSpec) -> list[dict]:
    """MC against the four analytic EE expressions at every sweep point."""
    items = [(spec, v, c) for v, c in spec.points()]
    return _map(_validate_point, items, spec.workers)


SWEEP_COLUMNS = (
    "param", "value", "K", "M", "p_tx_relay_w", "p_tx_relay_dbm", "rho_r", "r_max",
    "rate_thm2_hop1", "rate_thm2_hop2", "rate_thm2", "rate_lb_hop1", "rate_lb_hop2", "rate_lb",
    "ee_thm2", "ee_lb", "p_tot_w", "rho_ue",
)


def _sweep_point(args) -> dict:
    spec, value, cfg = args
    K, M, P = cfg.num_pairs_K, cfg.num_antennas_M, cfg.relay_tx_power
    th2 = theorem2_ee(cfg, K, M, P)
    r1, r2 = lower_bound_rates(cfg, K, M, P)
    lb = corollary2_lower_bound(cfg, K, M, P)
    return {
        **_param_cols(spec, value), "K": K, "M": M,
        "p_tx_relay_w": P, "p_tx_relay_dbm": watt_to_dbm(P), "rho_r": cfg.pilot_snr_rho_r, "r_max": cfg.r_max,
        "rate_thm2_hop1": th2.rate_per_pair_hop1, "rate_thm2_hop2": th2.rate_per_pair_hop2,
        "rate_thm2": min(th2.rate_per_pair_hop1, th2.rate_per_pair_hop2),
        "rate_lb_hop1": r1, "rate_lb_hop2": r2, "rate_lb": min(r1, r2),
        "ee_thm2": th2.ee, "ee_lb": lb.ee, "p_tot_w": th2.power.p_tot, "rho_ue": th2.device_density_rho_ue,
    }


def run_sweep(spec: ExperimentSpec) -> list[dict]:
    """Analytic-only sweep (location-averaged rates and EE); no simulation."""
    items = [(spec, v, c) for v, c in spec.points()]
    return _map(_sweep_point, items, spec.workers)


# -- optimize ---------------------------------------------------------------------------

OPTIMIZE_COLUMNS = (
    "param", "value", "p_star_w", "p_star_dbm", "k_star", "m_star", "rho_ue_star",
    "ee_lb_star", "qos_achieved", "iterations", "converged", "best_start", "infeasible", "cause",
)
TRACE_COLUMNS = (
    "param", "value", "start", "iteration", "xi", "mu1", "mu2", "mu3", "mu4",
    "p_w", "p_dbm", "K", "M", "ee_lb",
)


def _optimize_point(args) -> tuple[dict, list[dict]]:
    spec, value, cfg = args
    base = {**_param_cols(spec, value)}
    try:
        starts = default_starts(cfg, spec.starts)
        best, runs = optimize_multistart(cfg, starts)
    except InfeasibleError as exc:
        return {**base, "infeasible": True, "cause": exc.cause}, []
    o = best.optimum
    row = {
        **base, "p_star_w": o.p_star, "p_star_dbm": o.p_star_dbm, "k_star": o.k_star, "m_star": o.m_star,
        "rho_ue_star": o.rho_ue_star, "ee_lb_star": o.ee_lb_star, "qos_achieved": o.qos_achieved,
        "iterations": o.iterations, "converged": o.converged, "best_start": runs.index(best),
        "infeasible": False, "cause": "",
    }
    trace = []
    for i, run in enumerate(runs):
        for t in run.trace:
            trace.append({
                **base, "start": i, "iteration": t.iteration, "xi": t.xi,
                "mu1": t.mu[0], "mu2": t.mu[1], "mu3": t.mu[2], "mu4": t.mu[3],
                "p_w": t.p_tx_relay, "p_dbm": watt_to_dbm(t.p_tx_relay), "K": t.K, "M": t.M, "ee_lb": t.ee_lb,
            })
    return row, trace


def run_optimize(spec: ExperimentSpec) -> tuple[list[dict], list[dict]]:
    """Multistart joint optimization per sweep point: summary rows and the trace stream."""
    items = [(spec, v, c) for v, c in spec.points()]
    out = _map(_optimize_point, items, spec.workers)
    rows = [r for r, _ in out]
    trace = [t for _, tr in out for t in tr]
    return rows, trace


# -- oracle --------------------------------------------------------------------------------

ORACLE_COLUMNS = (
    "param", "value", "levels", "p_star_w", "p_star_dbm", "k_star", "m_star", "rho_ue_star",
    "ee_lb_star", "qos_achieved", "evaluations", "infeasible",
)


def _oracle_point(args) -> dict:
    spec, value, cfg = args
    base = {**_param_cols(spec, value), "levels": spec.power_grid_levels}
    try:
        res = brute_force_oracle(cfg, spec.power_grid_levels, True)
    except InfeasibleError:
        return {**base, "evaluations": es_evaluation_count(cfg.m_max, spec.power_grid_levels), "infeasible": True}
    o = res.optimum
    return {
        **base, "p_star_w": o.p_star, "p_star_dbm": o.p_star_dbm, "k_star": o.k_star, "m_star": o.m_star,
        "rho_ue_star": o.rho_ue_star, "ee_lb_star": o.ee_lb_star, "qos_achieved": o.qos_achieved,
        "evaluations": res.evaluations, "infeasible": False,
    }


def run_oracle(spec: ExperimentSpec) -> list[dict]:
    items = [(spec, v, c) for v, c in spec.points()]
    return _map(_oracle_point, items, spec.workers)


# -- complexity ----------------------------------------------------------------------------

COMPLEXITY_COLUMNS = (
    "m_max", "levels", "es_count", "log10_original_count",
    "joint_measured", "joint_loops", "joint_power_inner_mean", "joint_antenna_inner_mean",
    "loop_budget", "joint_formula",
)


def original_problem_log10_count(m_max: int, levels: int) -> float:
    """``log10`` of ``sum_M sum_K M C(M-1, K) D**K``: joint search over per-pair powers and pair sets."""
    total = 0
    for M in range(1, m_max + 1):
        # sum_K C(M-1, K) D**K = (D + 1)**(M-1) - 1
        total += M * ((levels + 1) ** (M - 1) - 1)
    return math.log10(total) if total > 0 else -math.inf


def _complexity_point(args) -> dict:
    spec, m_max = args
    m_max = int(m_max)
    base = spec.base_config
    cfg = base.replace(m_max=m_max, num_antennas_M=m_max, num_pairs_K=min(base.num_pairs_K, m_max - 1))
    levels = spec.power_grid_levels
    es = es_evaluation_count(m_max, levels)
    run = optimize_joint(cfg)
    pin = float(np.mean(run.power_inner)) if run.power_inner else 0.0
    ain = float(np.mean(run.antenna_inner)) if run.antenna_inner else 0.0
    formula = spec.loop_budget * (3 * pin + 3 * ain + m_max - 1)
    return {
        "m_max": m_max, "levels": levels, "es_count": es,
        "log10_original_count": original_problem_log10_count(int(m_max), levels),
        "joint_measured": run.evaluations, "joint_loops": run.optimum.iterations,
        "joint_power_inner_mean": pin, "joint_antenna_inner_mean": ain,
        "loop_budget": spec.loop_budget, "joint_formula": formula,
    }


def run_complexity(spec: ExperimentSpec) -> list[dict]:
    """Exhaustive-search against joint-loop operation counts over an M_max grid.

    ``joint_formula`` is ``I_loop * (3 I1 + 3 I2 + M_max - 1)`` with the
    measured mean dual iterations per power (I1) and antenna (I2) solve;
    ``joint_measured`` counts what the run actually did.
    """
    values = spec.sweep_values if spec.swept_parameter == "m_max" else (16, 32, 64, 128, 256)
    return _map(_complexity_point, [(spec, v) for v in values], spec.workers)
