import math

import numpy as np
import pytest

from ee_relay.analytic import corollary1_ee, equal_power_allocation, theorem1_rates
from ee_relay.core import PowerAllocation, sample_topology
from ee_relay.simlab import (
    estimate_ee_mc,
    estimate_rates_mc,
    filter_norm_mean,
    read_realizations,
    sample_channels,
    write_realization,
)


@pytest.fixture
def prof8(cfg):
    return sample_topology(cfg, 8, 11)


def test_estimate_plus_error_and_zero_forcing(cfg, prof8):
    for seed in range(5):
        ch = sample_channels(prof8, 40, seed)
        assert np.array_equal(ch.G_S, ch.G_S_hat + ch.G_S_err)
        assert np.array_equal(ch.G_D, ch.G_D_hat + ch.G_D_err)
        assert np.allclose(ch.F1 @ ch.G_S_hat, np.eye(8), atol=1e-8)
        assert np.allclose(ch.G_D_hat @ ch.F2, np.eye(8), atol=1e-8)


def test_perfect_csi_channels(cfg):
    c = cfg.replace(pilot_snr_rho_r=math.inf)
    ch = sample_channels(sample_topology(c, 3, 0), 16, 5)
    assert np.all(ch.G_S_err == 0) and np.all(ch.G_D_err == 0)
    assert np.allclose(ch.F1 @ ch.G_S, np.eye(3), atol=1e-8)


def test_single_column_pseudo_inverse(cfg):
    ch = sample_channels(sample_topology(cfg, 1, 2), 2, 9)
    g = ch.G_S_hat
    want = (g.conj().T / (g.conj().T @ g)[0, 0])
    assert np.allclose(ch.F1, want, rtol=1e-12, atol=0)
    assert np.allclose(ch.F1, np.linalg.pinv(g), rtol=1e-12, atol=0)


def test_estimate_variance_and_orthogonality(cfg):
    prof = sample_topology(cfg, 2, 1)
    hats, errs = [], []
    for seed in range(800):
        ch = sample_channels(prof, 64, seed)
        hats.append(ch.G_S_hat[:, 0])
        errs.append(ch.G_S_err[:, 0])
    h, e = np.concatenate(hats), np.concatenate(errs)
    var = np.mean(np.abs(h) ** 2)
    se = np.std(np.abs(h) ** 2) / math.sqrt(h.size)
    assert abs(var - prof.beta_hat[0]) < 3 * se
    evar = np.mean(np.abs(e) ** 2)
    ese = np.std(np.abs(e) ** 2) / math.sqrt(e.size)
    assert abs(evar - (prof.beta[0] - prof.beta_hat[0])) < 3 * ese
    r = np.abs(np.mean(h * e.conj())) / math.sqrt(var * evar)
    assert r < 0.02


def test_zero_power_zero_rates(cfg, prof8):
    c = cfg.replace(device_tx_power_Ptxd=0.0)
    rep = estimate_rates_mc(prof8, 32, PowerAllocation.zeros(8), c, 300, 0)
    assert np.all(rep.rate_per_pair == 0) and rep.sum_rate == 0
    ee = estimate_ee_mc(prof8, 32, PowerAllocation.zeros(8), c, 300, 0)
    assert ee.ee == 0


def test_minimal_headroom_is_finite(cfg, prof8):
    rep = estimate_rates_mc(prof8, 9, equal_power_allocation(prof8, 9, 1.0), cfg, 300, 0)
    assert np.all(np.isfinite(rep.rate_per_pair)) and np.all(rep.rate_per_pair >= 0)


def test_fixed_power_lowers_ee(cfg, prof8):
    alloc = equal_power_allocation(prof8, 64, 1.0)
    a = estimate_ee_mc(prof8, 64, alloc, cfg, 300, 3)
    b = estimate_ee_mc(prof8, 64, alloc, cfg.replace(p_fix=2 * cfg.p_fix), 300, 3)
    assert b.ee < a.ee and b.sum_rate == a.sum_rate


def test_sum_rate_prelog(cfg, prof8):
    rep = estimate_rates_mc(prof8, 64, equal_power_allocation(prof8, 64, 1.0), cfg, 300, 0)
    want = (1 - 16 / cfg.coherence_symbols_T) * cfg.bandwidth_B / 2 * rep.rate_per_pair.sum()
    assert rep.sum_rate == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("rho", [0.1, 100.0])
def test_mc_matches_theorem1(cfg, rho):
    c = cfg.replace(pilot_snr_rho_r=rho)
    prof = sample_topology(c, 8, 21)
    alloc = equal_power_allocation(prof, 128, 1.0)
    mc = estimate_rates_mc(prof, 128, alloc, c, 10_000, 1)
    th = theorem1_rates(prof, 128, alloc, c)
    assert np.allclose(mc.rate_per_pair, th.rate_per_pair, rtol=0.05)
    assert mc.relay_tx_power == pytest.approx(1.0, rel=0.03)
    ee = estimate_ee_mc(prof, 128, alloc, c, 10_000, 1)
    assert ee.ee == pytest.approx(corollary1_ee(prof, 128, 1.0, c).ee, rel=0.05)


def test_filter_norm_limit(cfg, prof8):
    f1, ptx = filter_norm_mean(prof8, 256, 10_000, 4)
    want = 1.0 / prof8.beta_hat[prof8.source] / (256 - 8)
    assert np.allclose(f1, want, rtol=0.03)
    assert ptx == pytest.approx(np.sum(1.0 / prof8.beta_hat[prof8.destination]) / (256 - 8), rel=0.03)


def test_deterministic_across_workers(cfg, prof8):
    alloc = equal_power_allocation(prof8, 48, 1.0)
    a = estimate_rates_mc(prof8, 48, alloc, cfg, 1000, 7, workers=None)
    b = estimate_rates_mc(prof8, 48, alloc, cfg, 1000, 7, workers=3)
    assert np.array_equal(a.rate_per_pair, b.rate_per_pair)
    assert a.sum_rate_stderr == b.sum_rate_stderr > 0


def test_too_few_trials(cfg, prof8):
    with pytest.raises(ValueError):
        estimate_rates_mc(prof8, 48, equal_power_allocation(prof8, 48, 1.0), cfg, 1, 0)


def test_dump_round_trip(cfg, tmp_path):
    prof = sample_topology(cfg, 3, 0)
    chans = [sample_channels(prof, 7, s) for s in range(3)]
    path = tmp_path / "dump.bin"
    with open(path, "wb") as fh:
        for i, ch in enumerate(chans):
            write_realization(fh, ch, i)
    assert path.stat().st_size == 3 * (24 + 8 * 16 * 7 * 3)
    back = list(read_realizations(path))
    assert [t for t, _ in back] == [0, 1, 2]
    for (_, got), want in zip(back, chans):
        assert np.array_equal(got.F2, want.F2) and np.array_equal(got.G_D_err, want.G_D_err)
