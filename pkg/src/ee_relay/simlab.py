"""Monte-Carlo link simulation: MMSE estimates, ZF relaying, use-and-forget SINRs.

The SINR of each hop is built from sample moments of the effective gains
over independent small-scale fading draws with the large-scale profile
held fixed:

* hop 1 uses ``x = F1 G_S`` (row k is what the relay's k-th ZF output sees)
  and the filter norms ``||f_1k||**2``;
* hop 2 uses ``y = G_D F2`` (row k is what destination k sees) and the
  precoder column norms ``||f_2j||**2``.

Pseudo-inverses come from a thin QR of the estimate, ``G_hat = Q R``, so
``pinv(G_hat) = R**-1 Q**H`` and the filter norms are row norms of ``R**-1``.
"""

from __future__ import annotations

import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterator

import numpy as np

from .core.config import SystemConfig
from .core.power import DomainError, total_power
from .core.results import EEResult, PowerAllocation, RateReport
from .core.topology import LsfProfile

log = logging.getLogger(__name__)

CHUNK_TRIALS = 256
_SINGULAR_RTOL = 1e-13


@dataclass(frozen=True)
class ChannelRealization:
    G_S: np.ndarray
    G_D: np.ndarray
    G_S_hat: np.ndarray
    G_D_hat: np.ndarray
    G_S_err: np.ndarray
    G_D_err: np.ndarray
    F1: np.ndarray
    F2: np.ndarray


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard circular complex Gaussian entries."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


def _draw(rng: np.random.Generator, profile: LsfProfile, M: int, batch: tuple[int, ...] = ()):
    """Estimate and error matrices for both hops, ``G_S`` M x K and ``G_D`` K x M."""
    K = profile.K
    sh_s = np.sqrt(profile.beta_hat[profile.source])
    se_s = np.sqrt(profile.beta_tilde[profile.source])
    sh_d = np.sqrt(profile.beta_hat[profile.destination])
    se_d = np.sqrt(profile.beta_tilde[profile.destination])
    gs_hat = _cn(rng, batch + (M, K)) * sh_s
    gs_err = _cn(rng, batch + (M, K)) * se_s
    gd_hat = _cn(rng, batch + (K, M)) * sh_d[:, None]
    gd_err = _cn(rng, batch + (K, M)) * se_d[:, None]
    return gs_hat, gs_err, gd_hat, gd_err


def _is_singular(r: np.ndarray) -> np.ndarray:
    d = np.abs(np.diagonal(r, axis1=-2, axis2=-1))
    return np.min(d, axis=-1) <= _SINGULAR_RTOL * np.max(d, axis=-1)


def sample_channels(profile: LsfProfile, M: int, rng_seed: int) -> ChannelRealization:
    """One channel realization with its MMSE estimates and ZF matrices."""
    K = profile.K
    if M <= K:
        raise DomainError("need M > K")
    seed = rng_seed
    while True:
        gs_hat, gs_err, gd_hat, gd_err = _draw(np.random.default_rng(seed), profile, M)
        qs, rs = np.linalg.qr(gs_hat)
        qd, rd = np.linalg.qr(gd_hat.conj().T)
        if not (_is_singular(rs) or _is_singular(rd)):
            break
        log.warning("singular channel estimate for seed %d; resampling with seed %d", seed, seed + 1)
        seed += 1
    f1 = np.linalg.solve(rs, qs.conj().T)
    f2 = qd @ np.linalg.inv(rd).conj().T
    return ChannelRealization(
        G_S=gs_hat + gs_err, G_D=gd_hat + gd_err,
        G_S_hat=gs_hat, G_D_hat=gd_hat, G_S_err=gs_err, G_D_err=gd_err,
        F1=f1, F2=f2,
    )


# -- Monte-Carlo moment accumulation -------------------------------------------


@dataclass
class _Moments:
    """Sums over trials of the quantities entering the two SINRs."""

    n: int
    x_diag: np.ndarray      # sum of diag(F1 G_S)
    x_abs2: np.ndarray      # sum of |F1 G_S|**2, K x K
    f1_norm: np.ndarray     # sum of ||f_1k||**2
    y_diag: np.ndarray      # sum of diag(G_D F2)
    y_abs2: np.ndarray      # sum of |G_D F2|**2, K x K
    f2_norm: np.ndarray     # sum of ||f_2j||**2
    ptx: float              # sum of relay power sum_j p_j ||f_2j||**2

    def __add__(self, other: "_Moments") -> "_Moments":
        return _Moments(
            self.n + other.n,
            self.x_diag + other.x_diag, self.x_abs2 + other.x_abs2, self.f1_norm + other.f1_norm,
            self.y_diag + other.y_diag, self.y_abs2 + other.y_abs2, self.f2_norm + other.f2_norm,
            self.ptx + other.ptx,
        )


def _chunk_moments(profile: LsfProfile, M: int, p: np.ndarray, n: int, seed: np.random.SeedSequence) -> _Moments:
    rng = np.random.default_rng(seed)
    gs_hat, gs_err, gd_hat, gd_err = _draw(rng, profile, M, (n,))
    qs, rs = np.linalg.qr(gs_hat)
    qd, rd = np.linalg.qr(np.conj(np.swapaxes(gd_hat, -1, -2)))
    bad = _is_singular(rs) | _is_singular(rd)
    while np.any(bad):
        idx = np.flatnonzero(bad)
        log.warning("resampling %d singular channel draw(s)", len(idx))
        new = _draw(rng, profile, M, (len(idx),))
        for arr, fresh in zip((gs_hat, gs_err, gd_hat, gd_err), new):
            arr[idx] = fresh
        qs[idx], rs[idx] = np.linalg.qr(gs_hat[idx])
        qd[idx], rd[idx] = np.linalg.qr(np.conj(np.swapaxes(gd_hat[idx], -1, -2)))
        bad = _is_singular(rs) | _is_singular(rd)
    g_s = gs_hat + gs_err
    g_d = gd_hat + gd_err
    rs_inv = np.linalg.inv(rs)
    rd_inv = np.linalg.inv(rd)
    x = rs_inv @ (np.conj(np.swapaxes(qs, -1, -2)) @ g_s)          # F1 G_S
    y = (g_d @ qd) @ np.conj(np.swapaxes(rd_inv, -1, -2))          # G_D F2
    f1n = np.sum(np.abs(rs_inv) ** 2, axis=-1)
    f2n = np.sum(np.abs(rd_inv) ** 2, axis=-1)
    return _Moments(
        n,
        np.sum(np.diagonal(x, axis1=-2, axis2=-1), axis=0),
        np.sum(np.abs(x) ** 2, axis=0),
        np.sum(f1n, axis=0),
        np.sum(np.diagonal(y, axis1=-2, axis2=-1), axis=0),
        np.sum(np.abs(y) ** 2, axis=0),
        np.sum(f2n, axis=0),
        float(np.sum(f2n @ p)),
    )


def _chunks(num_trials: int, chunk: int) -> list[int]:
    sizes = [chunk] * (num_trials // chunk)
    if num_trials % chunk:
        sizes.append(num_trials % chunk)
    return sizes


def _chunk_parts(profile, M, p, num_trials, rng_seed, workers) -> list[_Moments]:
    """Moments of fixed-size trial chunks, each with its own spawned seed."""
    sizes = _chunks(num_trials, CHUNK_TRIALS)
    seeds = np.random.SeedSequence(rng_seed).spawn(len(sizes))
    jobs = list(zip(sizes, seeds))
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda j: _chunk_moments(profile, M, p, j[0], j[1]), jobs))
    return [_chunk_moments(profile, M, p, n, s) for n, s in jobs]


def _reduce(parts: list[_Moments]) -> _Moments:
    # index-order reduction over fixed chunk boundaries: independent of worker count
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return total


def _sinrs(mom: _Moments, p: np.ndarray, pd: float, s2: float) -> tuple[np.ndarray, np.ndarray]:
    n = mom.n
    # hop 1: |E x_kk|^2 over Var(x_kk) + sum_{j!=k} E|x_kj|^2 + noise through the filter
    ex = mom.x_diag / n
    ex2_diag = np.diagonal(mom.x_abs2) / n
    var_x = np.maximum(ex2_diag - np.abs(ex) ** 2, 0.0) * n / (n - 1)
    cross_x = (mom.x_abs2.sum(axis=1) - np.diagonal(mom.x_abs2)) / n
    den1 = pd * var_x + pd * cross_x + s2 * mom.f1_norm / n
    sinr1 = pd * np.abs(ex) ** 2 / den1
    # hop 2: destination k sees row k of G_D F2
    ey = mom.y_diag / n
    ey2_diag = np.diagonal(mom.y_abs2) / n
    var_y = np.maximum(ey2_diag - np.abs(ey) ** 2, 0.0) * n / (n - 1)
    off = mom.y_abs2 / n
    cross_y = off @ p - np.diagonal(off) * p
    den2 = p * var_y + cross_y + s2
    sinr2 = p * np.abs(ey) ** 2 / den2
    return sinr1, sinr2


def _rates(mom: _Moments, p: np.ndarray, pd: float, s2: float):
    with np.errstate(invalid="ignore", divide="ignore"):
        sinr1, sinr2 = _sinrs(mom, p, pd, s2)
    sinr1 = np.nan_to_num(sinr1, nan=0.0)
    sinr2 = np.nan_to_num(sinr2, nan=0.0)
    return sinr1, sinr2, np.minimum(np.log2(1.0 + sinr1), np.log2(1.0 + sinr2))


def _batch_stderr(parts: list[_Moments], p, pd, s2, scale, batches: int = 10) -> float:
    """Standard error of the sum rate from batch means over groups of chunks."""
    if len(parts) < 2:
        return 0.0
    groups = np.array_split(np.arange(len(parts)), min(batches, len(parts)))
    per = np.array([scale * float(np.sum(_rates(_reduce([parts[i] for i in g]), p, pd, s2)[2]))
                    for g in groups])
    return float(per.std(ddof=1) / np.sqrt(len(per)))


def estimate_rates_mc(
    profile: LsfProfile,
    M: int,
    alloc: PowerAllocation,
    config: SystemConfig,
    num_trials: int = 10_000,
    rng_seed: int = 0,
    workers: int | None = None,
) -> RateReport:
    """Per-pair use-and-forget rates from sample moments over ``num_trials`` draws.

    ``sum_rate_stderr`` is a batch-means standard error over (up to) 10
    groups of trial chunks.
    """
    K = profile.K
    if num_trials < 2:
        raise ValueError("num_trials must be >= 2 to estimate variances")
    if M <= K:
        raise DomainError("need M > K")
    if alloc.K != K:
        raise ValueError("allocation size does not match K")
    p = np.asarray(alloc.p, dtype=float)
    pd, s2 = config.device_tx_power_Ptxd, config.sigma2
    parts = _chunk_parts(profile, M, p, num_trials, rng_seed, workers)
    mom = _reduce(parts)
    sinr1, sinr2, rate = _rates(mom, p, pd, s2)
    scale = config.prelog(K) * config.bandwidth_B / 2.0
    sum_rate = scale * float(np.sum(rate))
    stderr = _batch_stderr(parts, p, pd, s2, scale)
    return RateReport(sinr1, sinr2, rate, sum_rate, mom.ptx / mom.n, stderr)


def estimate_ee_mc(
    profile: LsfProfile,
    M: int,
    alloc: PowerAllocation,
    config: SystemConfig,
    num_trials: int = 10_000,
    rng_seed: int = 0,
    workers: int | None = None,
) -> EEResult:
    """Monte-Carlo EE, charging the empirical relay transmit power."""
    rep = estimate_rates_mc(profile, M, alloc, config, num_trials, rng_seed, workers)
    K = profile.K
    power = total_power(config, K, M, rep.relay_tx_power)
    return EEResult(
        ee=rep.sum_rate / power.p_tot,
        sum_rate=rep.sum_rate,
        rate_per_pair_hop1=rep.rate_hop1,
        rate_per_pair_hop2=rep.rate_hop2,
        power=power,
        p_tx_relay=rep.relay_tx_power,
        K=K,
        M=M,
        device_density_rho_ue=config.device_density(K),
    )


def filter_norm_mean(profile: LsfProfile, M: int, num_trials: int, rng_seed: int = 0) -> tuple[np.ndarray, float]:
    """Sample means of ``||f_1k||**2`` and of the equal-weight relay power ``sum_j ||f_2j||**2``."""
    mom = _reduce(_chunk_parts(profile, M, np.ones(profile.K), num_trials, rng_seed, None))
    return mom.f1_norm / mom.n, mom.ptx / mom.n


# -- raw realization dumps -------------------------------------------------------

_HEADER = struct.Struct("<qqq")
DUMP_MATRICES = ("G_S", "G_D", "G_S_hat", "G_D_hat", "G_S_err", "G_D_err", "F1", "F2")


def write_realization(fh: BinaryIO, real: ChannelRealization, trial: int) -> None:
    """Append one realization as little-endian ``int64 {M, K, trial}`` then the matrices.

    Matrices follow in the order of ``DUMP_MATRICES``, each row-major
    complex128 (real, imag interleaved). Shapes are implied by (M, K).
    """
    M, K = real.G_S.shape
    fh.write(_HEADER.pack(M, K, trial))
    for name in DUMP_MATRICES:
        fh.write(np.ascontiguousarray(getattr(real, name), dtype="<c16").tobytes(order="C"))


def _dump_shapes(M: int, K: int) -> dict[str, tuple[int, int]]:
    ms, sm = (M, K), (K, M)
    return {"G_S": ms, "G_D": sm, "G_S_hat": ms, "G_D_hat": sm,
            "G_S_err": ms, "G_D_err": sm, "F1": sm, "F2": ms}


def read_realizations(path: str | Path) -> Iterator[tuple[int, ChannelRealization]]:
    """Iterate ``(trial, realization)`` records written by :func:`write_realization`."""
    with open(path, "rb") as fh:
        while True:
            head = fh.read(_HEADER.size)
            if not head:
                return
            if len(head) != _HEADER.size:
                raise ValueError("truncated dump header")
            M, K, trial = _HEADER.unpack(head)
            mats = {}
            for name, shape in _dump_shapes(M, K).items():
                nbytes = 16 * shape[0] * shape[1]
                buf = fh.read(nbytes)
                if len(buf) != nbytes:
                    raise ValueError(f"truncated matrix {name} in trial {trial}")
                mats[name] = np.frombuffer(buf, dtype="<c16").reshape(shape).astype(complex)
            yield trial, ChannelRealization(**mats)
