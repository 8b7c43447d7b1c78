"""Energy-efficient choice of relay power, antenna count and active pairs.

The objective is the location-averaged EE lower bound

    EE_LB(P, K, M) = c0(K) * min(R1(K, M), R2(K, M, P)) / P_tot(K, M, P),

with ``c0 = (1 - 2K/T) B K / 2``. For fixed K the two rates are

    R1 = log2(1 + u1 (M - K)),      u1 = K Pd / ((Pd A1 + s2) A2),
    R2 = log2(1 + u2(P) (M - K)),   u2 = K P / ((P A1 + K s2) A2),

so R1 and R2 cross exactly at ``P = K Pd`` whatever M is: past that point
extra relay power buys no rate.

Power and antenna count are each found by Dinkelbach's method whose
subtractive subproblem is solved through its Lagrange dual. Writing the
per-pair rate as a slack ``lam`` with ``lam <= R1``, ``lam <= R2``,
``lam >= R0``, stationarity in ``lam`` ties the multipliers by
``mu1 + mu2 - mu4 = c0``; keeping ``mu4 >= 0`` means the dual iterate lives
on ``{mu1, mu2 >= 0, mu1 + mu2 >= c0}``, and the projected gradient step
projects onto that set. The pair count is found by exhaustive 1-D search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .analytic import atilde1, atilde2
from .core.config import SystemConfig, watt_to_dbm
from .core.power import amplifier_power, signal_processing_power, total_power, transceiver_power

LN2 = math.log(2.0)


class InfeasibleError(RuntimeError):
    """The QoS floor cannot be met.

    ``cause`` is ``"hop1"`` when the source-to-relay hop misses the floor,
    which no relay power can fix, and ``"power"`` when the relay budget
    (or antenna budget) is what falls short.
    """

    def __init__(self, message: str, cause: str):
        super().__init__(message)
        self.cause = cause


class ConsistencyError(RuntimeError):
    """Block-coordinate ascent lost objective value, which it must never do."""


@dataclass(frozen=True)
class Tolerances:
    """Relative stopping tolerances of the Dinkelbach/dual solvers."""

    eps_mu: float = 1e-7     # inner: |d mu| relative to the multiplier scale
    eps_f: float = 1e-9      # outer: |F(xi)| relative to the numerator
    max_inner: int = 5000
    max_outer: int = 50


@dataclass
class OptimizerState:
    """Iterate of one Dinkelbach/dual solve, plus its convergence trace."""

    xi: float
    lambda_slack: float
    mu: np.ndarray                      # mu1..mu4
    step_sizes: np.ndarray              # tau_mu1..tau_mu3 at the last step
    iterate: tuple[float, int, float]   # (p_tx_relay, K, M)
    alpha_coeffs: tuple[float, float, float] = (math.nan, math.nan, math.nan)
    trace: list[tuple[int, float, tuple[float, int, float]]] = field(default_factory=list)
    inner_iterations: int = 0
    outer_iterations: int = 0


@dataclass(frozen=True)
class Optimum:
    p_star: float
    k_star: int
    m_star: int
    ee_lb_star: float
    rho_ue_star: float
    qos_achieved: float
    iterations: int
    converged: bool

    @property
    def p_star_dbm(self) -> float:
        return watt_to_dbm(self.p_star)


@dataclass(frozen=True)
class TraceRecord:
    """One outer iteration of the joint loop, as streamed to the harness."""

    iteration: int
    xi: float
    mu: tuple[float, float, float, float]
    p_tx_relay: float
    K: int
    M: int
    ee_lb: float


@dataclass(frozen=True)
class OptimumWithTrace:
    optimum: Optimum
    trace: list[TraceRecord]
    evaluations: int            # measured operation count (see joint loop)
    power_inner: tuple[int, ...] = ()     # dual inner iterations per power solve
    antenna_inner: tuple[int, ...] = ()   # dual inner iterations per antenna solve


@dataclass(frozen=True)
class OracleResult:
    optimum: Optimum
    evaluations: int
    power_grid_dbm: np.ndarray


# -- the lower-bound model at fixed K -------------------------------------------


class LbModel:
    """EE lower bound with K fixed; vectorised over M and P."""

    def __init__(self, config: SystemConfig, K: int):
        if K < 1:
            raise ValueError("K must be >= 1")
        if 2 * K >= config.coherence_symbols_T:
            raise ValueError("need 2K < T")
        self.config = config
        self.K = K
        self.a1 = atilde1(config, K)
        self.a2 = atilde2(config, K)
        self.pd = config.device_tx_power_Ptxd
        self.s2 = config.sigma2
        self.c0 = config.prelog(K) * config.bandwidth_B * K / 2.0
        self.e_pa = config.prelog(K) / (2.0 * config.pa_eff_relay_eta)
        self.u1 = K * self.pd / ((self.pd * self.a1 + self.s2) * self.a2)

    def u2(self, P):
        return self.K * P / ((P * self.a1 + self.K * self.s2) * self.a2)

    def r1(self, M):
        return np.log2(1.0 + self.u1 * np.maximum(np.asarray(M, dtype=float) - self.K, 0.0))

    def r2(self, M, P):
        return np.log2(1.0 + self.u2(P) * np.maximum(np.asarray(M, dtype=float) - self.K, 0.0))

    def rate(self, M, P):
        return np.minimum(self.r1(M), self.r2(M, P))

    def p_tot(self, M, P):
        cfg, K = self.config, self.K
        return (amplifier_power(cfg, K, P) + transceiver_power(cfg, K, M)
                + signal_processing_power(cfg, K, M) + cfg.p_fix)

    def ee(self, M, P):
        return self.c0 * self.rate(M, P) / self.p_tot(M, P)

    # QoS thresholds -----------------------------------------------------------

    def p_min_qos(self, M, r0: float) -> float:
        """Smallest P with ``R2 >= r0`` (inf if unreachable)."""
        g0 = 2.0**r0 - 1.0
        if g0 == 0:
            return 0.0
        dof = M - self.K
        den = dof * self.K - g0 * self.a1 * self.a2
        if den <= 0:
            return math.inf
        return g0 * self.a2 * self.K * self.s2 / den

    def m_min_qos(self, P, r0: float) -> float:
        """Smallest real M with ``min(R1, R2) >= r0`` (inf if P = 0 and r0 > 0)."""
        g0 = 2.0**r0 - 1.0
        u = min(self.u1, self.u2(P))
        if g0 == 0:
            return float(self.K)
        return math.inf if u <= 0 else self.K + g0 / u


# -- Dinkelbach + projected dual gradient ----------------------------------------


def _project_mu12(x1: float, x2: float, c0: float) -> tuple[float, float]:
    """Euclidean projection onto ``{y1, y2 >= 0, y1 + y2 >= c0}``."""
    y1, y2 = max(x1, 0.0), max(x2, 0.0)
    if y1 + y2 >= c0:
        return y1, y2
    y1 = min(max((x1 - x2 + c0) / 2.0, 0.0), c0)
    return y1, c0 - y1


def _initial_steps(mu1, mu2, mu3, g, c0, mu3_scale) -> np.ndarray:
    """Step sizes tau0 making the first projected move 10% of each multiplier scale.

    Measured on the projected gradient: near a vertex of the coupled
    feasible set the raw gradient is mostly cancelled by the projection.
    mu1 and mu2 share units and one step, or the projection would cancel
    their moves outright.
    """
    g12 = max(abs(g[0]), abs(g[1]))
    t = 1e-9 * c0 / g12 if g12 > 0 else 0.0
    if t > 0:
        y1, y2 = _project_mu12(mu1 - t * g[0], mu2 - t * g[1], c0)
        pg12 = math.hypot(y1 - mu1, y2 - mu2) / t
    else:
        pg12 = 0.0
    tau12 = 0.1 * c0 / (pg12 if pg12 > 0 else max(g12, 1e-300))
    tau3 = 0.1 * mu3_scale / max(abs(g[2]), 1e-300)
    return np.array([tau12, tau12, tau3])


@dataclass(frozen=True)
class _Block:
    """One Dinkelbach subproblem in a scalar variable x on ``[lo, hi]``."""

    c0: float
    r0: float
    hi: float                                   # budget bound handled by mu3
    rates: Callable[[float], tuple[float, float]]
    cost: Callable[[float], float]
    argmax: Callable[[float, float, float, float], float]   # (xi, mu1, mu2, mu3) -> x
    feasible_lo: float                          # smallest x meeting the QoS floor
    mu3_scale: Callable[[float], float]         # multiplier scale for a given xi


def _dinkelbach_dual(block: _Block, x0: float, tol: Tolerances, mu0: tuple[float, float, float]):
    """Maximise ``c0 * min(rates) / cost`` over ``[feasible_lo, hi]``.

    Returns ``(x, xi, state)``; ``state.trace`` has one entry per
    Dinkelbach update.
    """
    c0, r0 = block.c0, block.r0

    def objective(x):
        r1, r2 = block.rates(x)
        return c0 * min(r1, r2), block.cost(x)

    def recover(x):
        # primal recovery: the dual iterate may sit a hair outside the feasible box
        return min(max(x, block.feasible_lo), block.hi)

    x = recover(x0)
    num, den = objective(x)
    xi = num / den
    state = OptimizerState(xi, 0.0, np.zeros(4), np.zeros(3), (x, 0, 0.0))
    best = (xi, x)
    for m in range(1, tol.max_outer + 1):
        mu1, mu2, mu3 = mu0
        taus = None
        for n in range(1, tol.max_inner + 1):
            xs = block.argmax(xi, mu1, mu2, mu3)
            r1, r2 = block.rates(xs)
            g = np.array([r1 - r0, r2 - r0, block.hi - xs])
            if taus is None:
                taus = _initial_steps(mu1, mu2, mu3, g, c0, block.mu3_scale(xi))
                mu_scale = np.array([c0, c0, block.mu3_scale(xi)])
            step = taus / math.sqrt(n)
            n1, n2 = _project_mu12(mu1 - step[0] * g[0], mu2 - step[1] * g[1], c0)
            n3 = max(mu3 - step[2] * g[2], 0.0)
            d = np.abs([n1 - mu1, n2 - mu2, n3 - mu3])
            mu1, mu2, mu3 = n1, n2, n3
            state.inner_iterations += 1
            if np.all(d <= tol.eps_mu * mu_scale):
                break
        xs = recover(block.argmax(xi, mu1, mu2, mu3))
        num, den = objective(xs)
        f_val = num - xi * den
        state.mu = np.array([mu1, mu2, mu3, mu1 + mu2 - c0])
        state.step_sizes = step
        state.outer_iterations = m
        state.lambda_slack = num / c0
        xi_new = num / den
        if xi_new > best[0]:
            best = (xi_new, xs)
        state.trace.append((m, xi_new, (xs, 0, 0.0)))
        xi = xi_new
        if abs(f_val) <= tol.eps_f * max(num, 1e-300):
            break
    state.xi = best[0]
    return best[1], best[0], state


# -- Subproblem I: relay transmit power -------------------------------------------


def _power_argmax(model: LbModel, M: float, p_max: float):
    """Maximiser over P >= 0 of ``mu2 R2(P) - (xi E_PA + mu3) P``, clipped to [0, Pmax]."""
    K, a1, a2, s2 = model.K, model.a1, model.a2, model.s2
    dof = M - K

    def argmax(xi, mu1, mu2, mu3):
        d = xi * model.e_pa + mu3
        if mu2 <= 0 or dof <= 0:
            return 0.0
        if d <= 0:
            return p_max
        if a1 == 0:
            b = dof / (s2 * a2)          # R2 = log2(1 + b P) under perfect CSI
            p = mu2 / (d * LN2) - 1.0 / b
        else:
            al1 = dof * K / (a2 * a1)
            al2 = K * s2 / a1
            al3 = al1 * al2 * mu2 / (d * LN2) - al2 * al2
            if al3 <= 0:
                return 0.0
            # rationalised root of (al1+1) P^2 + (al1+2) al2 P - al3 = 0; no cancellation
            p = 2.0 * al3 / ((al1 + 2.0) * al2 + math.sqrt(((al1 + 2.0) * al2) ** 2 + 4.0 * (al1 + 1.0) * al3))
        return min(max(p, 0.0), p_max)

    return argmax


def solve_power(config: SystemConfig, K: int, M: float, tolerances: Tolerances | None = None,
                p0: float | None = None, model: LbModel | None = None):
    """Dinkelbach/dual solve of the relay power; returns ``(p_star, xi_star, state)``."""
    tol = tolerances or Tolerances()
    model = model or LbModel(config, K)
    if M <= K:
        raise ValueError("need M > K")
    r0, p_max = config.qos_floor_R0, config.relay_max_power_PRmax
    if float(model.r1(M)) < r0:
        raise InfeasibleError(f"hop-1 rate {float(model.r1(M)):.4g} < R0 = {r0} at K={K}, M={M}", "hop1")
    p_lo = model.p_min_qos(M, r0)
    if p_lo > p_max:
        raise InfeasibleError(f"QoS needs P >= {p_lo:.4g} W > P_Rmax at K={K}, M={M}", "power")
    block = _Block(
        c0=model.c0, r0=r0, hi=p_max,
        rates=lambda p: (float(model.r1(M)), float(model.r2(M, p))),
        cost=lambda p: float(model.p_tot(M, p)),
        argmax=_power_argmax(model, M, p_max),
        feasible_lo=p_lo,
        mu3_scale=lambda xi: max(xi * model.e_pa, 1e-300),
    )
    start = min(p_max, K * model.pd) if p0 is None else p0
    p, xi, state = _dinkelbach_dual(block, start, tol, (0.0, model.c0, 0.0))
    state.iterate = (p, K, M)
    if model.a1 > 0:
        dof = M - K
        al1 = dof * K / (model.a2 * model.a1)
        al2 = K * model.s2 / model.a1
        d = xi * model.e_pa + state.mu[2]
        state.alpha_coeffs = (al1, al2, al1 * al2 * state.mu[1] / (d * LN2) - al2 * al2)
    return p, xi, state


def optimize_power(config: SystemConfig, K: int, M: float, tolerances: Tolerances | None = None,
                   max_iters: int | None = None) -> tuple[float, float]:
    """Optimal relay transmit power (W) and the optimal EE_LB ``xi*`` for fixed (K, M)."""
    tol = tolerances or Tolerances()
    if max_iters is not None:
        tol = Tolerances(tol.eps_mu, tol.eps_f, tol.max_inner, max_iters)
    p, xi, _ = solve_power(config, K, M, tol)
    return p, xi


# -- Subproblem II: number of relay antennas --------------------------------------


def _antenna_argmax(model: LbModel, P: float, m_lo: float, m_hi: float, p_cm: float):
    """Maximiser over M' in [m_lo, m_hi] of the Lagrangian, by bisection on its derivative."""
    K, u1, u2 = model.K, model.u1, float(model.u2(P))

    def argmax(xi, mu1, mu2, mu3):
        def slope(m):
            x = m - K
            return (mu1 * u1 / (1.0 + u1 * x) + mu2 * u2 / (1.0 + u2 * x)) / LN2 - xi * p_cm - mu3

        if slope(m_lo) <= 0:
            return m_lo
        if slope(m_hi) >= 0:
            return m_hi
        lo, hi = m_lo, m_hi
        while hi - lo > 1e-10 * m_hi:
            mid = 0.5 * (lo + hi)
            if slope(mid) > 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    return argmax


def antenna_cost_coefficients(config: SystemConfig, K: int, P: float) -> tuple[float, float]:
    """``(P_fixm, P_cm)`` with ``P_tot = P_fixm + P_cm * M``, read off the power model."""
    base = total_power(config, K, K, P)
    slope = total_power(config, K, K + 1, P).p_tot - base.p_tot
    return base.p_tot - slope * K, slope


def solve_antennas(config: SystemConfig, K: int, P: float, tolerances: Tolerances | None = None,
                   model: LbModel | None = None):
    """Relaxed-M Dinkelbach/dual solve; returns ``(m_star, m_relaxed, state)``."""
    tol = tolerances or Tolerances()
    model = model or LbModel(config, K)
    r0, m_max = config.qos_floor_R0, config.m_max
    m_lo = K + 1
    if m_lo > m_max:
        raise InfeasibleError(f"K={K} leaves no antenna count within M_max={m_max}", "power")
    m_qos = max(model.m_min_qos(P, r0), m_lo)
    if m_qos > m_max:
        cause = "hop1" if float(model.r1(m_max)) < r0 else "power"
        raise InfeasibleError(f"QoS needs M >= {m_qos:.4g} > M_max at K={K}, P={P:.4g} W", cause)
    p_fixm, p_cm = antenna_cost_coefficients(config, K, P)
    block = _Block(
        c0=model.c0, r0=r0, hi=float(m_max),
        rates=lambda m: (float(model.r1(m)), float(model.r2(m, P))),
        cost=lambda m: p_fixm + p_cm * m,
        argmax=_antenna_argmax(model, P, float(m_lo), float(m_max), p_cm),
        feasible_lo=m_qos,
        mu3_scale=lambda xi: max(xi * p_cm, 1e-300),
    )
    hop2_binds = float(model.u2(P)) <= model.u1
    mu0 = (0.0, model.c0, 0.0) if hop2_binds else (model.c0, 0.0, 0.0)
    m_rel, _, state = _dinkelbach_dual(block, 0.5 * (m_qos + m_max), tol, mu0)
    cands = {min(max(math.floor(m_rel), math.ceil(m_qos - 1e-9), m_lo), m_max),
             min(max(math.ceil(m_rel), math.ceil(m_qos - 1e-9), m_lo), m_max)}
    feas = [m for m in cands if float(model.rate(m, P)) >= r0]
    if not feas:
        feas = [min(math.ceil(m_qos - 1e-9) + 1, m_max)]
    m_star = max(sorted(feas), key=lambda m: float(model.ee(m, P)))
    state.iterate = (P, K, float(m_star))
    return m_star, m_rel, state


def optimize_antennas(config: SystemConfig, K: int, p_tx_relay: float, tolerances: Tolerances | None = None,
                      max_iters: int | None = None) -> int:
    tol = tolerances or Tolerances()
    if max_iters is not None:
        tol = Tolerances(tol.eps_mu, tol.eps_f, tol.max_inner, max_iters)
    return solve_antennas(config, K, p_tx_relay, tol)[0]


# -- Subproblem III: number of active pairs ------------------------------------------


def pair_candidates(config: SystemConfig, M: int) -> range:
    return range(1, min(M - 1, config.max_pairs()) + 1)


def pair_scan(config: SystemConfig, p_tx_relay: float, M: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(K values, EE_LB, per-pair rate)`` for every admissible K."""
    ks = np.array(list(pair_candidates(config, M)), dtype=int)
    ee = np.empty(len(ks))
    rate = np.empty(len(ks))
    for i, k in enumerate(ks):
        model = LbModel(config, int(k))
        rate[i] = float(model.rate(M, p_tx_relay))
        ee[i] = float(model.ee(M, p_tx_relay))
    return ks, ee, rate


def optimize_pairs(config: SystemConfig, p_tx_relay: float, M: int) -> int:
    """Exhaustive 1-D search over K; smallest K wins exact ties."""
    if M < 2:
        raise ValueError("need M >= 2")
    ks, ee, rate = pair_scan(config, p_tx_relay, M)
    ok = rate >= config.qos_floor_R0
    if not np.any(ok):
        hop1 = np.array([float(LbModel(config, int(k)).r1(M)) for k in ks])
        cause = "power" if np.any(hop1 >= config.qos_floor_R0) else "hop1"
        raise InfeasibleError(f"no K meets R0 = {config.qos_floor_R0} at M={M}, P={p_tx_relay:.4g} W", cause)
    masked = np.where(ok, ee, -np.inf)
    return int(ks[int(np.argmax(masked))])   # argmax returns the first, i.e. smallest, maximiser


# -- feasibility -----------------------------------------------------------------


def constraint_violations(config: SystemConfig, p: float, K: int, M: int) -> list[str]:
    """Names of violated constraints; empty means feasible.

    Recomputes the rate from the public lower-bound rate formula rather
    than the optimizer's internal model.
    """
    from .analytic import lower_bound_rates

    bad = []
    if not (isinstance(M, (int, np.integer)) and 2 <= M <= config.m_max):
        bad.append("C1: 2 <= M <= M_max, integer")
    if not (isinstance(K, (int, np.integer)) and 1 <= K < M and 2 * K < config.coherence_symbols_T):
        bad.append("C2: 1 <= K < M, 2K < T")
    if not 0 <= p <= config.relay_max_power_PRmax:
        bad.append("C3: 0 <= P <= P_Rmax")
    if not bad:
        r1, r2 = lower_bound_rates(config, K, M, p)
        if min(r1, r2) < config.qos_floor_R0 * (1 - 1e-12):
            bad.append("C4: R_LB >= R0")
    return bad


# -- joint block-coordinate loop ---------------------------------------------------


def default_initial_point(config: SystemConfig) -> tuple[float, int, int]:
    return (config.relay_max_power_PRmax / 2.0, max(1, config.m_max // 4), max(2, config.m_max // 2))


def _ee_at(config: SystemConfig, p: float, K: int, M: int) -> float:
    return float(LbModel(config, K).ee(M, p))


def _project_start(config: SystemConfig, initial) -> tuple[float, int, int]:
    p, K, M = initial
    p = min(max(float(p), 1e-12), config.relay_max_power_PRmax)
    M = int(min(max(int(M), 2), config.m_max))
    K = int(min(max(int(K), 1), M - 1, config.max_pairs()))
    if not constraint_violations(config, p, K, M):
        return p, K, M
    # nearest feasible corner: full budgets, then the best K there
    for cand in ((config.relay_max_power_PRmax, K, M), (config.relay_max_power_PRmax, K, config.m_max)):
        if not constraint_violations(config, *cand):
            return cand
    p, M = config.relay_max_power_PRmax, config.m_max
    K = optimize_pairs(config, p, M)
    return p, K, M


def optimize_joint(
    config: SystemConfig,
    initial: tuple[float, int, int] | None = None,
    epsilon: float = 1e-6,
    n_loop_max: int = 50,
    tolerances: Tolerances | None = None,
) -> OptimumWithTrace:
    """Cyclic power -> antennas -> pairs maximisation of EE_LB.

    Each block keeps the incumbent coordinate unless its solution is at
    least as good, so EE_LB never decreases. Stops when the relative EE_LB
    change of a full cycle drops below ``epsilon``.

    ``evaluations`` counts three operations per dual inner iteration of
    the power and antenna blocks plus one per K scanned.
    """
    tol = tolerances or Tolerances()
    p, K, M = _project_start(config, initial or default_initial_point(config))
    ee = _ee_at(config, p, K, M)
    trace: list[TraceRecord] = [TraceRecord(0, ee, (0.0, 0.0, 0.0, 0.0), p, K, M, ee)]
    evals = 0
    power_inner: list[int] = []
    antenna_inner: list[int] = []
    converged = False
    n = 0
    for n in range(1, n_loop_max + 1):
        prev = ee
        xi, mu = ee, (0.0, 0.0, 0.0, 0.0)
        try:
            p_new, _, st = solve_power(config, K, M, tol, p0=p)
            evals += 3 * st.inner_iterations
            power_inner.append(st.inner_iterations)
            e = _ee_at(config, p_new, K, M)
            if e >= ee:
                p, ee = p_new, e
            xi, mu = st.xi, tuple(float(v) for v in st.mu)
        except InfeasibleError:
            pass
        try:
            m_new, _, st = solve_antennas(config, K, p, tol)
            evals += 3 * st.inner_iterations
            antenna_inner.append(st.inner_iterations)
            e = _ee_at(config, p, K, m_new)
            if e >= ee:
                M, ee = m_new, e
        except InfeasibleError:
            pass
        try:
            evals += len(pair_candidates(config, M))
            k_new = optimize_pairs(config, p, M)
            e = _ee_at(config, p, k_new, M)
            if e >= ee:
                K, ee = k_new, e
        except InfeasibleError:
            pass
        if ee < prev * (1.0 - 1e-9):
            raise ConsistencyError(f"EE_LB fell from {prev} to {ee} in outer iteration {n}")
        trace.append(TraceRecord(n, xi, mu, p, K, M, ee))
        if abs(ee - prev) <= epsilon * max(abs(prev), 1e-300):
            converged = True
            break
    model = LbModel(config, K)
    opt = Optimum(
        p_star=p, k_star=K, m_star=M, ee_lb_star=ee,
        rho_ue_star=config.device_density(K),
        qos_achieved=float(model.rate(M, p)),
        iterations=n, converged=converged,
    )
    return OptimumWithTrace(opt, trace, evals, tuple(power_inner), tuple(antenna_inner))


def optimize_multistart(config: SystemConfig, starts: list[tuple[float, int, int]] | None = None,
                        epsilon: float = 1e-6, n_loop_max: int = 50) -> tuple[OptimumWithTrace, list[OptimumWithTrace]]:
    """Run :func:`optimize_joint` from several starts; return the best run and all runs."""
    starts = starts or default_starts(config)
    runs = [optimize_joint(config, s, epsilon, n_loop_max) for s in starts]
    best = max(runs, key=lambda r: r.optimum.ee_lb_star)
    return best, runs


def default_starts(config: SystemConfig, count: int = 4) -> list[tuple[float, int, int]]:
    """Default start first, then starts spread over the (P, K, M) box."""
    pm, mm = config.relay_max_power_PRmax, config.m_max
    spread = [
        default_initial_point(config),
        (pm / 100.0, max(1, mm // 8), max(2, mm // 4)),
        (pm / 10.0, max(1, mm // 2), max(2, (3 * mm) // 4)),
        (pm, max(1, mm // 16), mm),
    ]
    return spread[:count]


# -- exhaustive-search oracle ------------------------------------------------------


def power_grid_dbm(config: SystemConfig, levels: int) -> np.ndarray:
    """``levels`` uniform dB steps ending at P_Rmax: ``P_Rmax_dBm * i / levels``."""
    if levels < 2:
        raise ValueError("need at least 2 power levels")
    top = watt_to_dbm(config.relay_max_power_PRmax)
    return top * np.arange(1, levels + 1) / levels


def es_evaluation_count(m_max: int, levels: int) -> int:
    return levels * m_max * (m_max - 1) // 2


def brute_force_oracle(config: SystemConfig, power_grid_levels: int = 50, with_qos: bool = True) -> OracleResult:
    """Exhaustive EE_LB search over the dB power grid, M in 2..M_max and K in 1..M-1."""
    grid_dbm = power_grid_dbm(config, power_grid_levels)
    grid_w = 10.0 ** (grid_dbm / 10.0) / 1e3
    m_max = config.m_max
    best = (-math.inf, None)
    evals = 0
    for K in range(1, m_max):
        ms = np.arange(K + 1, m_max + 1, dtype=float)
        evals += len(ms) * len(grid_w)
        if 2 * K >= config.coherence_symbols_T:
            continue
        model = LbModel(config, K)
        rate = model.rate(ms[None, :], grid_w[:, None])
        ee = model.c0 * rate / model.p_tot(ms[None, :], grid_w[:, None])
        if with_qos:
            ee = np.where(rate >= config.qos_floor_R0, ee, -np.inf)
        i, j = np.unravel_index(int(np.argmax(ee)), ee.shape)
        if ee[i, j] > best[0]:
            best = (float(ee[i, j]), (float(grid_w[i]), K, int(ms[j]), float(rate[i, j])))
    if best[1] is None:
        raise InfeasibleError("no grid point meets the QoS floor", "power")
    p, K, M, r = best[1]
    opt = Optimum(p, K, M, best[0], config.device_density(K), r, 1, True)
    return OracleResult(opt, evals, grid_dbm)


def per_pair_power_oracle(profile, M: int, config: SystemConfig, levels: int = 8):
    """Exhaustive search over per-pair relay powers with known locations (small K only).

    Each ``p_k`` takes ``levels`` values on a uniform grid up to the level
    that alone would exhaust the relay budget; combinations breaking the
    average power constraint are skipped. Returns ``(best EE, best p)``.
    """
    import itertools

    from .analytic import theorem1_rates
    from .core.results import PowerAllocation

    K = profile.K
    if K > 4:
        raise ValueError("per-pair oracle is exponential in K; use K <= 4")
    inv = 1.0 / profile.beta_hat[profile.destination]
    p_cap = config.relay_max_power_PRmax * (M - K) / inv
    grids = [np.linspace(0.0, c, levels + 1)[1:] for c in p_cap]
    best = (-math.inf, None)
    for combo in itertools.product(*grids):
        p = np.array(combo)
        p_relay = float(np.sum(p * inv) / (M - K))
        if p_relay > config.relay_max_power_PRmax * (1 + 1e-12):
            continue
        rep = theorem1_rates(profile, M, PowerAllocation(p), config)
        ee = rep.sum_rate / total_power(config, K, M, p_relay).p_tot
        if ee > best[0]:
            best = (ee, p)
    return best
