"""Configuration, topology and power model shared by all layers."""

from .config import ConfigError, SystemConfig, dbm_to_watt, load_config, parse_config_text, watt_to_dbm
from .power import DomainError, PowerBreakdown, antenna_cost_split, total_power
from .results import EEResult, PowerAllocation, RateReport, assemble_ee
from .topology import LsfProfile, beta_hat, beta_tilde, distance_pdf, sample_distances, sample_topology

__all__ = [
    "ConfigError", "DomainError", "EEResult", "LsfProfile", "PowerAllocation",
    "PowerBreakdown", "RateReport", "SystemConfig", "antenna_cost_split", "assemble_ee",
    "beta_hat", "beta_tilde", "dbm_to_watt", "distance_pdf", "load_config",
    "parse_config_text", "sample_distances", "sample_topology", "total_power", "watt_to_dbm",
]
