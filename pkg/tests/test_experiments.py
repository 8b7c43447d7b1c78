import csv
import math

import numpy as np
import pytest

from ee_relay.analytic import corollary2_lower_bound, theorem2_ee
from ee_relay.cli import main
from ee_relay.core import ConfigError, SystemConfig
from ee_relay.experiments import (
    ExperimentSpec,
    original_problem_log10_count,
    parse_sweep,
    run_complexity,
    run_optimize,
    run_sweep,
    run_validate,
    write_csv,
    SWEEP_COLUMNS,
)
from ee_relay.optimizer import LbModel


def _read(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_parse_sweep_forms():
    assert parse_sweep("K=2,4,8") == ("K", (2, 4, 8))
    assert parse_sweep("r_max=150:400:50") == ("r_max", (150.0, 200.0, 250.0, 300.0, 350.0, 400.0))
    for bad in ("K", "Q=1", "K=1.5", "r_max=3:1:1", "M="):
        with pytest.raises(ConfigError):
            parse_sweep(bad)


def test_spec_rejects_out_of_domain_values(cfg):
    with pytest.raises(ConfigError):
        ExperimentSpec("sweep", "K", (2, 200), cfg)
    with pytest.raises(ConfigError):
        ExperimentSpec("sweep", "K", (), cfg)
    with pytest.raises(ConfigError):
        ExperimentSpec("plot", base_config=cfg)


def test_sweep_orderings(cfg):
    rows = run_sweep(ExperimentSpec("sweep", "K", tuple(range(2, 61, 2)), cfg))
    assert all(r["ee_lb"] <= r["ee_thm2"] * (1 + 1e-10) for r in rows)
    lo = run_sweep(ExperimentSpec("sweep", "K", tuple(range(2, 61, 2)), cfg.replace(pilot_snr_rho_r=0.1)))
    assert all(h["ee_thm2"] >= l["ee_thm2"] for h, l in zip(rows, lo))
    ms = run_sweep(ExperimentSpec("sweep", "M", tuple(range(40, 257, 8)), cfg))
    assert all(b["rate_thm2"] > a["rate_thm2"] for a, b in zip(ms, ms[1:]))


def test_csv_round_trip_and_determinism(cfg, tmp_path):
    spec = ExperimentSpec("sweep", "p_tx_relay_dbm", (10.0, 25.0, 40.0), cfg)
    a = write_csv(run_sweep(spec), tmp_path / "a.csv", SWEEP_COLUMNS)
    b = write_csv(run_sweep(spec), tmp_path / "b.csv", SWEEP_COLUMNS)
    assert a.read_bytes() == b.read_bytes()
    for row in _read(a):
        K, M, P = int(row["K"]), int(row["M"]), float(row["p_tx_relay_w"])
        assert 10 ** (float(row["p_tx_relay_dbm"]) / 10) / 1e3 == pytest.approx(P, rel=1e-12)
        assert float(row["ee_lb"]) == corollary2_lower_bound(cfg, K, M, P).ee
        assert float(row["ee_thm2"]) == theorem2_ee(cfg, K, M, P).ee


def test_validate_columns_and_bound(cfg, tmp_path):
    spec = ExperimentSpec("validate", "K", (4, 8), cfg, mc_trials=400, seeds=(0, 1))
    rows = run_validate(spec)
    for r in rows:
        assert r["ee_lb"] <= r["ee_thm2"] * (1 + 1e-10)
        assert r["ee_mc"] == pytest.approx(r["ee_thm1"], rel=0.1)
        assert r["mc_stderr"] > 0
    again = run_validate(spec)
    assert rows == again


def test_optimize_rows_round_trip(cfg, tmp_path):
    spec = ExperimentSpec("optimize", "R0", (1.0, 40.0), cfg.replace(m_max=40), starts=2)
    rows, trace = run_optimize(spec)
    ok, bad = rows
    assert not ok["infeasible"] and bad["infeasible"] and bad["cause"] == "hop1"
    c = cfg.replace(m_max=40)
    model = LbModel(c, ok["k_star"])
    assert float(model.ee(ok["m_star"], ok["p_star_w"])) == pytest.approx(ok["ee_lb_star"], rel=1e-12)
    assert {t["start"] for t in trace} == {0, 1}


def test_complexity_counts(cfg):
    spec = ExperimentSpec("complexity", "m_max", (32,), cfg, power_grid_levels=10)
    (row,) = run_complexity(spec)
    assert row["es_count"] == 4960
    assert row["joint_measured"] > 0 and row["joint_formula"] > 0


def test_original_count_closed_form():
    # oracle: direct double sum with binomials
    D, m_max = 3, 6
    want = sum(M * math.comb(M - 1, K) * D**K for M in range(1, m_max + 1) for K in range(1, M))
    assert original_problem_log10_count(m_max, D) == pytest.approx(math.log10(want), rel=1e-14)


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["sweep", "--sweep", "M=40,80", "--out", str(out)]) == 0
    assert (out / "sweep.csv").exists() and (out / "sweep_ee.svg").exists()
    assert main(["sweep", "--set", "no_such_key=1", "--out", str(out)]) == 2
    assert main(["sweep", "--sweep", "K=500", "--out", str(out)]) == 2
    assert main(["optimize", "--set", "qos_floor_R0=40", "--starts", "1", "--out", str(out)]) == 3
    bad = tmp_path / "bad.cfg"
    bad.write_text("r_max 300\n")
    assert main(["sweep", "--config", str(bad), "--out", str(out)]) == 2


def test_svg_is_reproducible(tmp_path):
    for name in ("a", "b"):
        assert main(["sweep", "--sweep", "M=40,80", "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "sweep_ee.svg").read_bytes() == (tmp_path / "b" / "sweep_ee.svg").read_bytes()


def test_worker_pool_keeps_row_order(cfg):
    spec = ExperimentSpec("sweep", "M", (120, 40, 80), cfg, workers=2)
    rows = run_sweep(spec)
    assert [r["value"] for r in rows] == [120, 40, 80]
    assert rows == run_sweep(ExperimentSpec("sweep", "M", (120, 40, 80), cfg))
