"""System configuration and the flat ``key = value`` config file format."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    """Raised for invalid or unparsable configuration values."""


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1e3


def watt_to_dbm(watt: float) -> float:
    if watt <= 0:
        return -math.inf
    return 10.0 * math.log10(watt * 1e3)


@dataclass(frozen=True)
class SystemConfig:
    """All scalar parameters of the relay network, in SI units.

    Defaults describe an NB-IoT small cell (20 MHz, 180 kHz x 10 ms
    coherence block) with R_max = 250 m, P_tx,d = 20 dBm,
    P_Rmax = 50 dBm, rho_r = 100, R0 = 1 bit/s/Hz and M_max = 128.

    Notes
    -----
    ``p_syn_PSYN`` has no scenario value; 2 W is the usual
    oscillator figure in the massive-MIMO power-model literature. The
    optimum (M*, K*) moves with it, so change it deliberately.

    ``estimation_noise`` is the reference power against which the received
    pilot energy ``tau_r * rho_r * beta`` is measured by the MMSE
    estimator. It defaults to ``noise_power_total`` (gains are noise
    normalised for channel estimation). Setting it to 1.0 recovers the
    literal dimensionless reading, under which the default scenario has
    a pilot SNR around 1e-6 and every QoS floor >= 1 bit/s/Hz is infeasible.
    """

    bandwidth_B: float = 20e6
    coherence_bandwidth_Bc: float = 180e3
    coherence_time_Tc: float = 10e-3
    device_tx_power_Ptxd: float = 0.1
    relay_max_power_PRmax: float = 100.0
    pilot_snr_rho_r: float = 100.0
    pilot_length_tau_r: int | None = None
    noise_power_total: float = 10.0 ** (-12.6)
    pa_eff_relay_eta: float = 0.39
    pa_eff_device_eta: float = 0.3
    p_fix: float = 18.0
    p_relay_per_antenna_PR: float = 1.0
    p_device_PD: float = 0.1
    p_syn_PSYN: float = 2.0
    compute_eff_LR: float = 12.8e9
    r_min: float = 35.0
    r_max: float = 250.0
    pathloss_exp_alpha: float = 3.76
    pathloss_ref_c: float = 10.0 ** (-0.53)
    qos_floor_R0: float = 1.0
    m_max: int = 128
    num_pairs_K: int = 32
    num_antennas_M: int = 128
    relay_tx_power: float = 1.0
    estimation_noise: float | None = None
    pilot_power_override: float | None = None

    def __post_init__(self) -> None:
        self.validate()

    # -- derived quantities -------------------------------------------------

    @property
    def coherence_symbols_T(self) -> float:
        t = self.coherence_bandwidth_Bc * self.coherence_time_Tc
        # symbol count; absorb float noise from Bc*Tc
        r = round(t)
        return float(r) if abs(t - r) <= 1e-9 * max(1.0, abs(t)) else t

    @property
    def sigma2(self) -> float:
        """Receiver noise power, shared by relay and destinations."""
        return self.noise_power_total

    @property
    def rho_eff(self) -> float:
        """Pilot SNR coefficient as it enters the MMSE estimate gain."""
        ref = self.noise_power_total if self.estimation_noise is None else self.estimation_noise
        return self.pilot_snr_rho_r / ref

    @property
    def pilot_tx_power(self) -> float:
        if self.pilot_power_override is not None:
            return self.pilot_power_override
        return self.pilot_snr_rho_r * self.noise_power_total

    @property
    def annulus_area(self) -> float:
        return math.pi * (self.r_max**2 - self.r_min**2)

    def tau_r(self, K: int) -> float:
        return float(2 * K if self.pilot_length_tau_r is None else self.pilot_length_tau_r)

    def prelog(self, K: int) -> float:
        """Fraction of the coherence block left for data, ``1 - 2K/T``."""
        return 1.0 - 2.0 * K / self.coherence_symbols_T

    def max_pairs(self) -> int:
        """Largest K with a strictly positive prelog (2K < T)."""
        return int(math.floor((self.coherence_symbols_T - 1) / 2))

    def device_density(self, K: int) -> float:
        return K / self.annulus_area

    # -- validation / construction -------------------------------------------

    def validate(self) -> None:
        if not 0 < self.r_min <= self.r_max:
            raise ConfigError(f"need 0 < r_min <= r_max, got {self.r_min}, {self.r_max}")
        if self.pathloss_exp_alpha <= 2:
            raise ConfigError("pathloss_exp_alpha must exceed 2")
        if self.pathloss_ref_c <= 0:
            raise ConfigError("pathloss_ref_c must be positive")
        for name in ("pa_eff_relay_eta", "pa_eff_device_eta"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ConfigError(f"{name} must lie in (0, 1), got {v}")
        for name in (
            "device_tx_power_Ptxd", "relay_max_power_PRmax", "pilot_snr_rho_r",
            "p_fix", "p_relay_per_antenna_PR", "p_device_PD", "p_syn_PSYN",
            "relay_tx_power", "qos_floor_R0",
        ):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        for name in ("bandwidth_B", "coherence_bandwidth_Bc", "coherence_time_Tc",
                     "noise_power_total", "compute_eff_LR"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.estimation_noise is not None and self.estimation_noise <= 0:
            raise ConfigError("estimation_noise must be positive")
        if self.pilot_power_override is not None and self.pilot_power_override < 0:
            raise ConfigError("pilot_power_override must be nonnegative")
        if self.pilot_length_tau_r is not None and self.pilot_length_tau_r < 0:
            raise ConfigError("pilot_length_tau_r must be nonnegative")
        if self.m_max < 2:
            raise ConfigError("m_max must be at least 2")
        if self.num_pairs_K < 1:
            raise ConfigError("num_pairs_K must be >= 1")
        if self.num_antennas_M <= self.num_pairs_K:
            raise ConfigError("num_antennas_M must exceed num_pairs_K")
        if 2 * self.num_pairs_K >= self.coherence_symbols_T:
            raise ConfigError("2K must be smaller than the coherence block length T")

    def replace(self, **changes: Any) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def with_overrides(self, overrides: dict[str, str]) -> "SystemConfig":
        """Apply ``key -> text value`` overrides (config file or ``--set``)."""
        return self.replace(**_parse_values(overrides))

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {'none' if v is None else repr(v)}")
        return "\n".join(lines) + "\n"


_ALIASES_DBM = {
    "device_tx_power_dbm": "device_tx_power_Ptxd",
    "relay_max_power_dbm": "relay_max_power_PRmax",
    "relay_tx_power_dbm": "relay_tx_power",
    "noise_power_total_dbm": "noise_power_total",
}


def _field_types() -> dict[str, str]:
    return {f.name: str(f.type) for f in fields(SystemConfig)}


def _parse_values(raw: dict[str, str]) -> dict[str, Any]:
    types = _field_types()
    out: dict[str, Any] = {}
    for key, text in raw.items():
        key = key.strip()
        text = str(text).strip()
        if key in _ALIASES_DBM:
            try:
                out[_ALIASES_DBM[key]] = dbm_to_watt(float(text))
            except ValueError as exc:
                raise ConfigError(f"{key}: not a number: {text!r}") from exc
            continue
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        typ = types[key]
        if text.lower() in ("none", "") and "None" in typ:
            out[key] = None
            continue
        try:
            if typ.startswith("int"):
                val = float(text)
                if not val.is_integer():
                    raise ConfigError(f"{key}: expected an integer, got {text!r}")
                out[key] = int(val)
            else:
                out[key] = float(text)
        except ValueError as exc:
            raise ConfigError(f"{key}: not a number: {text!r}") from exc
    return out


def parse_config_text(text: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        raw[key.strip()] = value.strip()
    return raw


def load_config(path: str | Path | None = None, overrides: dict[str, str] | None = None) -> SystemConfig:
    """Load a config file; missing keys keep their defaults."""
    raw: dict[str, str] = {}
    if path is not None:
        try:
            raw.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if overrides:
        raw.update(overrides)
    try:
        return SystemConfig(**_parse_values(raw))
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
