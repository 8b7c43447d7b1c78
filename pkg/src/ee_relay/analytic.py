"""Deterministic-equivalent rate and EE expressions.

Two flavors:

* known locations: per-pair rates from the large-scale gains of one drop,
  with a general or an equal relay power split;
* i.u.d. locations: rates averaged over the uniform-annulus distance law,
  either as 1-D expectations (exact) or through the Jensen lower bound
  that only needs the two coefficients ``A1~`` and ``A2~``.

Throughout, ``A1`` is the summed estimation-error gain of the K sources
and ``A2`` the summed inverse estimate gain of the K destinations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .core.config import SystemConfig
from .core.power import DomainError
from .core.results import EEResult, PowerAllocation, RateReport, assemble_ee
from .core.topology import LsfProfile, beta_hat, beta_tilde, distance_pdf
from .special import hyp2f1_1b_b1_neg

QUAD_EPSREL = 1e-10
QUAD_LIMIT = 200


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class AnalyticCoefficients:
    A1: float
    A2: float
    K: int
    M: int | float
    flavor: str  # "known_location" or "iud"


def _check_dims(K: int, M) -> None:
    if K < 1:
        raise DomainError("K must be >= 1")
    if M < K:
        raise DomainError(f"M = {M} must not be smaller than K = {K}")


def _quad(fun, a: float, b: float, what: str) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(fun, a, b, epsabs=0.0, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"{what}: quadrature did not converge on [{a}, {b}]: {exc}") from exc
    if not math.isfinite(val):
        raise QuadratureError(f"{what}: non-finite result on [{a}, {b}]")
    return val


def _expect(config: SystemConfig, g, what: str) -> float:
    """``E[g(l)]`` under the uniform-annulus distance law."""
    lo, hi = config.r_min, config.r_max
    if hi == lo:
        return float(g(lo))
    return _quad(lambda l: g(l) * distance_pdf(l, lo, hi), lo, hi, what)


def _pilot_gain(config: SystemConfig, K: int) -> float:
    return config.tau_r(K) * config.rho_eff


# -- known device locations ---------------------------------------------------


def known_location_coefficients(profile: LsfProfile, M) -> AnalyticCoefficients:
    src, dst = profile.source, profile.destination
    A1 = float(np.sum(profile.beta_tilde[src]))
    with np.errstate(divide="ignore"):
        A2 = float(np.sum(1.0 / profile.beta_hat[dst]))
    return AnalyticCoefficients(A1, A2, profile.K, M, "known_location")


def theorem1_rates(profile: LsfProfile, M: int, alloc: PowerAllocation, config: SystemConfig) -> RateReport:
    """Large-system per-pair SINRs for known locations and a general power split."""
    K = profile.K
    _check_dims(K, M)
    if alloc.K != K:
        raise ValueError("allocation size does not match K")
    pd, s2 = config.device_tx_power_Ptxd, config.sigma2
    coef = known_location_coefficients(profile, M)
    bh_src = profile.beta_hat[profile.source]
    bh_dst = profile.beta_hat[profile.destination]
    bt_dst = profile.beta_tilde[profile.destination]
    sinr1 = (M - K) * pd * bh_src / (pd * coef.A1 + s2)
    if M == K:
        p_relay = 0.0
        sinr2 = np.zeros(K)
    else:
        p_relay = float(np.sum(alloc.p / bh_dst) / (M - K))
        sinr2 = alloc.p / (bt_dst * p_relay + s2)
    rate = np.minimum(np.log2(1.0 + sinr1), np.log2(1.0 + sinr2))
    sum_rate = config.prelog(K) * config.bandwidth_B / 2.0 * float(np.sum(rate))
    return RateReport(sinr1, sinr2, rate, sum_rate, p_relay)


def equal_power_allocation(profile: LsfProfile, M: int, p_tx_relay: float) -> PowerAllocation:
    """Equal per-stream relay power meeting the average power budget with equality."""
    K = profile.K
    if M <= K:
        raise DomainError("equal allocation needs M > K")
    if p_tx_relay < 0:
        raise ValueError("p_tx_relay must be nonnegative")
    bh_dst = profile.beta_hat[profile.destination]
    if np.any(bh_dst <= 0):
        raise ValueError("a destination has zero estimate gain; equal allocation is undefined")
    a2 = float(np.sum(1.0 / bh_dst))
    return PowerAllocation(np.full(K, (M - K) * p_tx_relay / a2))


def corollary1_ee(profile: LsfProfile, M: int, p_tx_relay: float, config: SystemConfig) -> EEResult:
    """EE for known locations with the equal relay power split."""
    K = profile.K
    _check_dims(K, M)
    pd, s2 = config.device_tx_power_Ptxd, config.sigma2
    coef = known_location_coefficients(profile, M)
    bh_src = profile.beta_hat[profile.source]
    bt_dst = profile.beta_tilde[profile.destination]
    r1 = np.log2(1.0 + (M - K) * pd * bh_src / (pd * coef.A1 + s2))
    r2 = np.log2(1.0 + (M - K) * p_tx_relay / ((bt_dst * p_tx_relay + s2) * coef.A2))
    return assemble_ee(config, K, M, p_tx_relay, r1, r2, float(np.sum(np.minimum(r1, r2))))


# -- i.u.d. device locations --------------------------------------------------


@lru_cache(maxsize=4096)
def atilde1(config: SystemConfig, K: int) -> float:
    """``K * E[beta_tilde(l)]`` over the annulus, by adaptive quadrature."""
    if K < 1:
        raise DomainError("K must be >= 1")
    c, alpha = config.pathloss_ref_c, config.pathloss_exp_alpha
    s = _pilot_gain(config, K)
    if math.isinf(s):
        return 0.0
    # c / (l**alpha + s*c) == beta_tilde, written to avoid 0 * inf at large s
    return K * _expect(config, lambda l: c / (l**alpha + s * c), "A1~")


def atilde1_closed_form(config: SystemConfig, K: int) -> float:
    """``A1~`` through ``2F1(1, 2/alpha; 1 + 2/alpha; -R**alpha / a)`` with ``a = tau*rho*c``."""
    if K < 1:
        raise DomainError("K must be >= 1")
    c, alpha = config.pathloss_ref_c, config.pathloss_exp_alpha
    lo, hi = config.r_min, config.r_max
    a = _pilot_gain(config, K) * c
    if math.isinf(a):
        return 0.0
    if hi == lo:
        return K * c / (lo**alpha + a)
    if a == 0:
        # no pilot energy: the error gain is the full gain c * l**-alpha
        return K * c * 2.0 * (hi ** (2 - alpha) - lo ** (2 - alpha)) / ((2 - alpha) * (hi**2 - lo**2))
    b = 2.0 / alpha

    def prim(r: float) -> float:
        # integral of 2l / (l**alpha + a) over [0, r]
        return r * r / a * hyp2f1_1b_b1_neg(b, r**alpha / a)

    return K * c / (hi**2 - lo**2) * (prim(hi) - prim(lo))


@lru_cache(maxsize=4096)
def atilde2(config: SystemConfig, K: int) -> float:
    """``K * E[1 / beta_hat(l)]`` over the annulus, by adaptive quadrature."""
    if K < 1:
        raise DomainError("K must be >= 1")
    c, alpha = config.pathloss_ref_c, config.pathloss_exp_alpha
    s = _pilot_gain(config, K)
    if s == 0:
        return math.inf
    if math.isinf(s):
        return K * _expect(config, lambda l: l**alpha / c, "A2~")
    return K * _expect(config, lambda l: l ** (2 * alpha) / (s * c * c) + l**alpha / c, "A2~")


def atilde2_closed_form(config: SystemConfig, K: int) -> float:
    """``A2~`` from the two polynomial moments ``E[l**(2 alpha)]`` and ``E[l**alpha]``."""
    if K < 1:
        raise DomainError("K must be >= 1")
    c, alpha = config.pathloss_ref_c, config.pathloss_exp_alpha
    lo, hi = config.r_min, config.r_max
    s = _pilot_gain(config, K)
    if s == 0:
        return math.inf
    if hi == lo:
        return K * (lo ** (2 * alpha) / (s * c * c) + lo**alpha / c)
    d2 = hi**2 - lo**2
    second = 2.0 * (hi ** (alpha + 2) - lo ** (alpha + 2)) / (alpha + 2)
    first = 0.0 if math.isinf(s) else (hi ** (2 * alpha + 2) - lo ** (2 * alpha + 2)) / ((alpha + 1) * s * c)
    return K / (c * d2) * (first + second)


def iud_coefficients(config: SystemConfig, K: int, M) -> AnalyticCoefficients:
    return AnalyticCoefficients(atilde1(config, K), atilde2(config, K), K, M, "iud")


def _lsf_at(config: SystemConfig, K: int, l: float) -> tuple[float, float]:
    beta = config.pathloss_ref_c * l ** (-config.pathloss_exp_alpha)
    s = _pilot_gain(config, K)
    return beta_hat(beta, s, 1.0), beta_tilde(beta, s, 1.0)


def theorem2_rates(config: SystemConfig, K: int, M, p_tx_relay: float) -> tuple[float, float]:
    """Per-hop expected per-pair rates (bit/s/Hz) for i.u.d. locations."""
    _check_dims(K, M)
    if M == K:
        return 0.0, 0.0
    pd, s2 = config.device_tx_power_Ptxd, config.sigma2
    a1, a2 = atilde1(config, K), atilde2(config, K)

    def hop1(l):
        bh, _ = _lsf_at(config, K, l)
        return math.log2(1.0 + (M - K) * pd * bh / (pd * a1 + s2))

    def hop2(l):
        _, bt = _lsf_at(config, K, l)
        return math.log2(1.0 + (M - K) * p_tx_relay / ((p_tx_relay * bt + s2) * a2))

    r1 = _expect(config, hop1, "hop-1 average rate")
    r2 = 0.0 if p_tx_relay == 0 else _expect(config, hop2, "hop-2 average rate")
    return r1, r2


def theorem2_ee(config: SystemConfig, K: int, M, p_tx_relay: float) -> EEResult:
    """EE with i.u.d. locations: min of the per-hop expected rates, times K pairs."""
    _check_dims(K, M)
    if 2 * K >= config.coherence_symbols_T:
        raise DomainError("need 2K < T")
    r1, r2 = theorem2_rates(config, K, M, p_tx_relay)
    return assemble_ee(config, K, M, p_tx_relay, r1, r2, K * min(r1, r2))


def lower_bound_rates(config: SystemConfig, K: int, M, p_tx_relay, a1: float | None = None,
                      a2: float | None = None):
    """Jensen lower bounds of the two per-hop average rates.

    Accepts array ``M`` / ``p_tx_relay`` for grid evaluation.
    """
    pd, s2 = config.device_tx_power_Ptxd, config.sigma2
    a1 = atilde1(config, K) if a1 is None else a1
    a2 = atilde2(config, K) if a2 is None else a2
    dof = np.maximum(np.asarray(M, dtype=float) - K, 0.0)
    p = np.asarray(p_tx_relay, dtype=float)
    r1 = np.log2(1.0 + dof * K * pd / ((pd * a1 + s2) * a2))
    r2 = np.log2(1.0 + dof * K * p / ((p * a1 + K * s2) * a2))
    if r1.ndim == 0 and r2.ndim == 0:
        return float(r1), float(r2)
    return np.broadcast_arrays(r1, r2)


def corollary2_lower_bound(config: SystemConfig, K: int, M, p_tx_relay: float) -> EEResult:
    """Closed-form lower bound of :func:`theorem2_ee`."""
    _check_dims(K, M)
    if 2 * K >= config.coherence_symbols_T:
        raise DomainError("need 2K < T")
    r1, r2 = lower_bound_rates(config, K, M, p_tx_relay)
    return assemble_ee(config, K, M, p_tx_relay, r1, r2, K * min(r1, r2))
