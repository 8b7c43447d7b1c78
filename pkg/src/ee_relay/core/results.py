"""Result records shared by the simulation, analytic and optimizer layers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .power import PowerBreakdown, total_power


@dataclass(frozen=True)
class PowerAllocation:
    """Relay power coefficients ``p_k`` (the diagonal of P**2), in W."""

    p: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("power allocation must be a finite nonnegative vector")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def K(self) -> int:
        return len(self.p)

    @classmethod
    def zeros(cls, K: int) -> "PowerAllocation":
        return cls(np.zeros(K))


@dataclass(frozen=True)
class RateReport:
    """Per-pair SINRs and rates of one (profile, M, allocation) operating point.

    ``sum_rate`` is in bit/s and already carries the pilot prelog and the
    half-duplex factor ``B/2``.
    """

    sinr_hop1: np.ndarray
    sinr_hop2: np.ndarray
    rate_per_pair: np.ndarray
    sum_rate: float
    relay_tx_power: float
    sum_rate_stderr: float = 0.0

    @property
    def rate_hop1(self) -> np.ndarray:
        return np.log2(1.0 + self.sinr_hop1)

    @property
    def rate_hop2(self) -> np.ndarray:
        return np.log2(1.0 + self.sinr_hop2)


@dataclass(frozen=True)
class EEResult:
    """Energy efficiency (bit/J) with the rate and power terms that produced it.

    Hop rates are per-pair vectors for the known-location expressions and
    scalars (common to every pair) for the location-averaged ones.
    """

    ee: float
    sum_rate: float
    rate_per_pair_hop1: np.ndarray | float
    rate_per_pair_hop2: np.ndarray | float
    power: PowerBreakdown
    p_tx_relay: float
    K: int
    M: int | float
    device_density_rho_ue: float

    @property
    def params(self) -> tuple[float, int, int | float]:
        return (self.p_tx_relay, self.K, self.M)

    @property
    def rate_per_pair(self):
        return np.minimum(self.rate_per_pair_hop1, self.rate_per_pair_hop2)


def assemble_ee(config, K: int, M, p_tx_relay: float, hop1, hop2, rate_sum_per_hz: float) -> EEResult:
    """Build an :class:`EEResult` from per-pair rates summed to ``rate_sum_per_hz``."""
    sum_rate = config.prelog(K) * config.bandwidth_B / 2.0 * rate_sum_per_hz
    power = total_power(config, K, M, p_tx_relay)
    return EEResult(
        ee=sum_rate / power.p_tot,
        sum_rate=sum_rate,
        rate_per_pair_hop1=hop1,
        rate_per_pair_hop2=hop2,
        power=power,
        p_tx_relay=p_tx_relay,
        K=K,
        M=M,
        device_density_rho_ue=config.device_density(K),
    )
