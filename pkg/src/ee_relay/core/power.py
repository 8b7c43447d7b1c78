"""Circuit-plus-amplifier power consumption of the relay network."""

from __future__ import annotations

from dataclasses import dataclass

from .config import SystemConfig


class DomainError(ValueError):
    """Raised when (K, M, P) fall outside the model's domain."""


@dataclass(frozen=True)
class PowerBreakdown:
    p_pa: float
    p_tc: float
    p_sig: float
    p_fix: float

    @property
    def p_tot(self) -> float:
        return self.p_pa + self.p_fix + self.p_tc + self.p_sig


def amplifier_power(config: SystemConfig, K: int, p_tx_relay: float) -> float:
    T = config.coherence_symbols_T
    pre = config.prelog(K)
    eta_d = config.pa_eff_device_eta
    data = pre * K * config.device_tx_power_Ptxd / (2.0 * eta_d)
    # 2K devices each send tau_r pilot symbols per block; 4K^2/T for tau_r = 2K
    pilot = 2.0 * K * config.tau_r(K) / T * config.pilot_tx_power / eta_d
    relay = pre * p_tx_relay / (2.0 * config.pa_eff_relay_eta)
    return data + pilot + relay


def transceiver_power(config: SystemConfig, K: int, M: float) -> float:
    return M * config.p_relay_per_antenna_PR + 2 * K * config.p_device_PD + config.p_syn_PSYN


def signal_processing_power(config: SystemConfig, K: int, M: float) -> float:
    """Channel estimation plus computing and applying the two ZF matrices."""
    B, T, L = config.bandwidth_B, config.coherence_symbols_T, config.compute_eff_LR
    estimation = B / T * 8.0 * M * K * K / L
    apply_zf = B * config.prelog(K) * 4.0 * M * K / L
    compute_zf = B / T / (3.0 * L) * (K**3 + 9.0 * M * K * K + 3.0 * M * K)
    return estimation + apply_zf + compute_zf


def total_power(config: SystemConfig, K: int, M: float, p_tx_relay: float) -> PowerBreakdown:
    """Total consumed power for K pairs, M relay antennas and relay power ``p_tx_relay`` (W).

    ``M`` may be non-integer; the antenna-count relaxation evaluates it on
    a continuum.
    """
    if K < 1:
        raise DomainError("K must be >= 1")
    if 2 * K > config.coherence_symbols_T:
        raise DomainError(f"2K = {2 * K} exceeds the coherence block T = {config.coherence_symbols_T}")
    if M < K:
        raise DomainError("M must not be smaller than K")
    if p_tx_relay < 0:
        raise DomainError("relay transmit power must be nonnegative")
    return PowerBreakdown(
        p_pa=amplifier_power(config, K, p_tx_relay),
        p_tc=transceiver_power(config, K, M),
        p_sig=signal_processing_power(config, K, M),
        p_fix=config.p_fix,
    )


def antenna_cost_split(config: SystemConfig, K: int, p_tx_relay: float) -> tuple[float, float]:
    """Split P_tot into ``fixed + per_antenna * M`` for fixed K and relay power.

    The power model is affine in M, so both coefficients are read off two
    evaluations.
    """
    fixed = total_power(config, K, K, p_tx_relay).p_tot
    slope = total_power(config, K, K + 1, p_tx_relay).p_tot - fixed
    return fixed - slope * K, slope
