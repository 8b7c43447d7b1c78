"""Device placement and large-scale fading.

Devices ``0..K-1`` are sources and ``K..2K-1`` their destinations. Gains
follow ``beta = c * l**-alpha``; the MMSE estimate keeps ``beta_hat`` of it
and the estimation error carries the rest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, SystemConfig


def _as_result(a: np.ndarray):
    return float(a) if a.ndim == 0 else a


def beta_hat(beta, tau_r, rho_r):
    """Variance of the MMSE channel estimate, ``tau*rho*beta**2 / (1 + tau*rho*beta)``.

    Works elementwise on arrays. ``rho_r`` may be ``np.inf`` (perfect CSI),
    in which case the estimate gain equals ``beta``.
    """
    beta, s = np.broadcast_arrays(np.asarray(beta, dtype=float),
                                  np.asarray(np.multiply(tau_r, rho_r), dtype=float))
    with np.errstate(invalid="ignore"):
        out = np.where(np.isinf(s), beta, s * beta * beta / (1.0 + s * beta))
    return _as_result(out)


def beta_tilde(beta, tau_r, rho_r):
    """Estimation-error variance ``beta / (1 + tau*rho*beta)``."""
    beta, s = np.broadcast_arrays(np.asarray(beta, dtype=float),
                                  np.asarray(np.multiply(tau_r, rho_r), dtype=float))
    with np.errstate(invalid="ignore"):
        out = np.where(np.isinf(s), 0.0, beta / (1.0 + s * beta))
    return _as_result(out)


@dataclass(frozen=True)
class LsfProfile:
    """Distances and large-scale gains of the 2K devices of one drop."""

    distances: np.ndarray
    beta: np.ndarray
    beta_hat: np.ndarray
    beta_tilde: np.ndarray

    @property
    def K(self) -> int:
        return len(self.distances) // 2

    @property
    def source(self) -> slice:
        return slice(0, self.K)

    @property
    def destination(self) -> slice:
        return slice(self.K, 2 * self.K)

    @classmethod
    def from_distances(cls, distances, config: SystemConfig) -> "LsfProfile":
        d = np.asarray(distances, dtype=float)
        if d.ndim != 1 or len(d) % 2 or len(d) == 0:
            raise ValueError("need 2K distances")
        K = len(d) // 2
        beta = config.pathloss_ref_c * d ** (-config.pathloss_exp_alpha)
        rho = config.rho_eff
        tau = config.tau_r(K)
        bh = np.asarray(beta_hat(beta, tau, rho), dtype=float)
        bt = np.asarray(beta_tilde(beta, tau, rho), dtype=float)
        for a in (d, beta, bh, bt):
            a.setflags(write=False)
        return cls(d, beta, bh, bt)


def sample_distances(rng: np.random.Generator, n: int, r_min: float, r_max: float) -> np.ndarray:
    """Distances uniform over the annulus area: ``l**2 ~ U(r_min**2, r_max**2)``."""
    u = rng.random(n)
    return np.sqrt(r_min**2 + u * (r_max**2 - r_min**2))


def sample_topology(
    config: SystemConfig,
    K: int,
    rng_seed: int,
    distribution: str = "uniform_annulus",
    inner_radius: float | None = None,
    inner_weight: float | None = None,
) -> LsfProfile:
    """Drop 2K devices and compute their large-scale gains.

    ``distribution="two_ring"`` places each device in the inner annulus
    ``[r_min, inner_radius]`` with probability ``inner_weight`` and in the
    outer ring ``[inner_radius, r_max]`` otherwise, uniformly by area within
    each ring. This only feeds simulation; the analytic expressions assume
    the uniform annulus.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if not 0 < config.r_min <= config.r_max:
        raise ConfigError("invalid radii")
    rng = np.random.default_rng(rng_seed)
    n = 2 * K
    if distribution == "uniform_annulus":
        d = sample_distances(rng, n, config.r_min, config.r_max)
    elif distribution == "two_ring":
        r_in = 100.0 if inner_radius is None else inner_radius
        w = 0.5 if inner_weight is None else inner_weight
        if not config.r_min <= r_in <= config.r_max:
            raise ConfigError("two_ring inner_radius must lie in [r_min, r_max]")
        if not 0 <= w <= 1:
            raise ConfigError("two_ring inner_weight must lie in [0, 1]")
        inner = rng.random(n) < w
        d_in = sample_distances(rng, n, config.r_min, r_in)
        d_out = sample_distances(rng, n, r_in, config.r_max)
        d = np.where(inner, d_in, d_out)
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    return LsfProfile.from_distances(d, config)


def distance_pdf(l, r_min: float, r_max: float):
    """Density of the device distance under the uniform-annulus model."""
    l = np.asarray(l, dtype=float)
    if r_max == r_min:
        raise ValueError("degenerate annulus has no density")
    return np.where((l >= r_min) & (l <= r_max), 2.0 * l / (r_max**2 - r_min**2), 0.0)
