"""QoE maximization: missing-tile model, per-N_p two-variable LP, recovery.

For a fixed predictive tile count N_p the problem over encoding rates
(eta_p, eta_m) is linear: maximize

    mean(alpha)*eta_p - mean(beta)*N_m*(eta_p - eta_m)

subject to eta_m <= eta_p, the playback-window budget

    sum_g T_1*eta_p/v_g + sum_j (T_1 - T_2)*eta_m/v_j <= T_1,

the stall budget sum_j T_2*eta_m/v_j <= T_y, and the rate grid box. The
feasible region is a polygon in two variables, so the relaxed optimum comes
from exact vertex enumeration; recovery snaps eta_p to its two neighboring
grid rates and maximizes the grid eta_m for each. The outer search scans N_p
(every value in [M, S] for VN, N_p = M for FN).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class RateGrid:
    """Uniform encoding-rate grid {delta, 2*delta, ..., D*delta} (bit/s)."""

    delta: float = 1e5
    D: int = 200

    def __post_init__(self):
        if self.delta <= 0 or self.D < 1:
            raise ValueError(f"need delta > 0 and D >= 1, got {self}")

    @property
    def r1(self) -> float:
        return self.delta

    @property
    def r_max(self) -> float:
        return self.D * self.delta

    def values(self) -> np.ndarray:
        return self.delta * np.arange(1, self.D + 1)

    def floor(self, x: float) -> float:
        """Largest grid rate <= x (clamped to the grid ends)."""
        idx = math.floor(x / self.delta + 1e-9)
        return self.delta * min(max(idx, 1), self.D)

    def ceil(self, x: float) -> float:
        idx = math.ceil(x / self.delta - 1e-9)
        return self.delta * min(max(idx, 1), self.D)


@dataclass(frozen=True)
class QoEWeights:
    alpha: np.ndarray  # per-user weight on predictive quality
    beta: np.ndarray   # per-user weight on the perceptual-difference penalty


@dataclass(frozen=True)
class WeightProfile:
    """Per-user draws held fixed while beta_bar sweeps."""

    alpha: np.ndarray
    beta_offset: np.ndarray  # in [-0.02, 0.02]

    def at(self, beta_bar: float) -> QoEWeights:
        return QoEWeights(alpha=self.alpha, beta=beta_bar + self.beta_offset)


def draw_weight_profile(K: int, seed) -> WeightProfile:
    rng = np.random.default_rng(seed)
    return WeightProfile(
        alpha=rng.uniform(1.9, 2.1, size=K),
        beta_offset=rng.uniform(-0.02, 0.02, size=K),
    )


@dataclass(frozen=True)
class SchedulingConfig:
    T_1: float  # predictive-tile interval (s), also the playback window
    T_2: float  # missing-tile interval (s)
    T_y: float  # tolerable stall time (s)
    M: int      # FoV tile count
    S: int      # exact-scope tile count

    def __post_init__(self):
        if not (0 < self.T_y <= self.T_2 < self.T_1):
            raise ValueError(f"need 0 < T_y <= T_2 < T_1, got {self}")
        if not 1 <= self.M <= self.S:
            raise ValueError(f"need 1 <= M <= S, got M={self.M}, S={self.S}")


@dataclass(frozen=True)
class QoESolution:
    N_p: int
    N_m: int
    eta_p: float
    eta_m: float
    score: float
    feasible: bool
    slack: dict[str, float] = field(default_factory=dict)


INFEASIBLE = QoESolution(
    N_p=-1, N_m=-1, eta_p=float("nan"), eta_m=float("nan"),
    score=float("-inf"), feasible=False,
)


@dataclass(frozen=True)
class NpRates:
    """Link rates one N_p choice sees: per-group throughputs and the
    worst-case missing-group throughput, plus the missing-group count."""

    v_g: np.ndarray
    v_j: float | None
    J: int


RateProvider = Callable[[int], NpRates]


def expected_missing(n_p: int, M: int, S: int) -> int:
    """Expected number of missing tiles N_m = ceil(M*(S - N_p)/S)."""
    if not M <= n_p <= S:
        raise ValueError(f"need M={M} <= N_p <= S={S}, got N_p={n_p}")
    return math.ceil(M * (S - n_p) / S)


def qoe_score(eta_p: float, eta_m: float, n_m: int, weights: QoEWeights) -> float:
    """Average per-user QoE of one rate choice."""
    return float(
        np.mean(weights.alpha * eta_p - weights.beta * n_m * (eta_p - eta_m))
    )


@dataclass(frozen=True)
class _Coeffs:
    """Linear latency coefficients: a_p*eta_p + a_m*eta_m <= T_1 and
    b_m*eta_m <= T_y."""

    a_p: float
    a_m: float
    b_m: float
    T_1: float
    T_y: float


def _coeffs(rates: NpRates, sched: SchedulingConfig) -> _Coeffs:
    v_g = np.asarray(rates.v_g, dtype=float)
    if np.any(v_g <= 0):
        raise ValueError("all predictive group rates must be positive")
    a_p = sched.T_1 * float(np.sum(1.0 / v_g))
    if rates.J > 0:
        if rates.v_j is None or rates.v_j <= 0:
            raise ValueError("missing-group rate bound must be positive when J > 0")
        a_m = (sched.T_1 - sched.T_2) * rates.J / rates.v_j
        b_m = sched.T_2 * rates.J / rates.v_j
    else:
        a_m = b_m = 0.0
    return _Coeffs(a_p=a_p, a_m=a_m, b_m=b_m, T_1=sched.T_1, T_y=sched.T_y)


@dataclass(frozen=True)
class RelaxedSolution:
    eta_p: float
    eta_m: float
    score: float
    feasible: bool


def _objective(weights: QoEWeights, n_m: int) -> tuple[float, float]:
    c_p = float(np.mean(weights.alpha)) - float(np.mean(weights.beta)) * n_m
    c_m = float(np.mean(weights.beta)) * n_m
    return c_p, c_m


def solve_p2(
    n_p: int,
    v_g: Sequence[float],
    v_j: float | None,
    weights: QoEWeights,
    sched: SchedulingConfig,
    grid: RateGrid,
    J: int | None = None,
) -> RelaxedSolution:
    """Relaxed optimum of the fixed-N_p problem over [R_1, R_D]^2.

    The objective always uses the expected missing-tile count N_m; `J`
    overrides the missing-group count in the latency sums (for MLMSG they
    coincide, for basic grouping J = L*N_m). Exact vertex enumeration of the
    constraint polygon; ties on the objective prefer larger eta_m, then
    larger eta_p.
    """
    n_m = expected_missing(n_p, sched.M, sched.S)
    co = _coeffs(NpRates(np.asarray(v_g, dtype=float), v_j, n_m if J is None else J), sched)
    c_p, c_m = _objective(weights, n_m)

    rows = [
        (co.a_p, co.a_m, co.T_1),   # playback-window budget
        (-1.0, 1.0, 0.0),           # eta_m <= eta_p
        (1.0, 0.0, grid.r_max),
        (-1.0, 0.0, -grid.r1),
        (0.0, 1.0, grid.r_max),
        (0.0, -1.0, -grid.r1),
    ]
    if co.b_m > 0:
        rows.append((0.0, co.b_m, co.T_y))
    A = np.array([[r[0], r[1]] for r in rows])
    b = np.array([r[2] for r in rows])
    tol = 1e-9 * np.maximum(1.0, np.abs(b))

    best: tuple[float, float, float] | None = None  # (score, eta_m, eta_p)
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            det = A[i, 0] * A[j, 1] - A[i, 1] * A[j, 0]
            scale = max(np.abs(A[i]).max(), np.abs(A[j]).max(), 1.0)
            if abs(det) <= 1e-12 * scale * scale:
                continue
            x = (b[i] * A[j, 1] - A[i, 1] * b[j]) / det
            y = (A[i, 0] * b[j] - b[i] * A[j, 0]) / det
            if np.all(A @ np.array([x, y]) <= b + tol):
                cand = (c_p * x + c_m * y, y, x)
                if best is None or cand > best:
                    best = cand
    if best is None:
        return RelaxedSolution(float("nan"), float("nan"), float("-inf"), False)
    return RelaxedSolution(eta_p=best[2], eta_m=best[1], score=best[0], feasible=True)


def recover(
    relaxed: RelaxedSolution,
    n_p: int,
    v_g: Sequence[float],
    v_j: float | None,
    weights: QoEWeights,
    sched: SchedulingConfig,
    grid: RateGrid,
    J: int | None = None,
) -> QoESolution:
    """Snap the relaxed optimum back to the rate grid.

    Tries eta_p at the grid floor and ceiling of the relaxed value; for each,
    eta_m takes the largest grid rate satisfying the rate order and both
    latency budgets. Returns the better-scoring feasible pair.
    """
    if not relaxed.feasible:
        return INFEASIBLE
    n_m = expected_missing(n_p, sched.M, sched.S)
    co = _coeffs(NpRates(np.asarray(v_g, dtype=float), v_j, n_m if J is None else J), sched)
    c_p, c_m = _objective(weights, n_m)

    best: tuple[float, float, float] | None = None
    for eta_p in sorted({grid.floor(relaxed.eta_p), grid.ceil(relaxed.eta_p)}):
        budget = co.T_1 - co.a_p * eta_p
        if budget < -1e-9 * co.T_1:
            continue
        upper = min(eta_p, grid.r_max)
        if co.a_m > 0:
            upper = min(upper, budget / co.a_m)
        if co.b_m > 0:
            upper = min(upper, co.T_y / co.b_m)
        if upper < grid.r1 - 1e-9 * grid.r1:
            continue
        eta_m = grid.floor(upper)
        cand = (c_p * eta_p + c_m * eta_m, eta_m, eta_p)
        if best is None or cand > best:
            best = cand
    if best is None:
        return INFEASIBLE
    score, eta_m, eta_p = best
    slack = {
        "playback_window": co.T_1 - (co.a_p * eta_p + co.a_m * eta_m),
        "stall": co.T_y - co.b_m * eta_m,
        "rate_order": eta_p - eta_m,
    }
    return QoESolution(
        N_p=n_p, N_m=n_m, eta_p=eta_p, eta_m=eta_m,
        score=qoe_score(eta_p, eta_m, n_m, weights), feasible=True, slack=slack,
    )


def _np_values(sched: SchedulingConfig, mode: str) -> range:
    if mode == "vn":
        return range(sched.M, sched.S + 1)
    if mode == "fn":
        return range(sched.M, sched.M + 1)
    raise ValueError(f"unknown mode {mode!r}")


def optimize(
    rate_provider: RateProvider,
    weights: QoEWeights,
    sched: SchedulingConfig,
    grid: RateGrid,
    mode: str = "vn",
) -> QoESolution:
    """Outer maximization over N_p via relax-and-recover per value."""
    best = INFEASIBLE
    for n_p in _np_values(sched, mode):
        rates = rate_provider(n_p)
        relaxed = solve_p2(n_p, rates.v_g, rates.v_j, weights, sched, grid, J=rates.J)
        sol = recover(relaxed, n_p, rates.v_g, rates.v_j, weights, sched, grid, J=rates.J)
        if sol.feasible and sol.score > best.score:
            best = sol
    return best


def brute_force_oracle(
    rate_provider: RateProvider,
    weights: QoEWeights,
    sched: SchedulingConfig,
    grid: RateGrid,
    mode: str = "vn",
) -> QoESolution:
    """Exhaustive scan over every (N_p, eta_p, eta_m) grid triple."""
    vals = grid.values()
    eta_p = vals[None, :]  # columns
    eta_m = vals[:, None]  # rows
    best = INFEASIBLE
    for n_p in _np_values(sched, mode):
        rates = rate_provider(n_p)
        n_m = expected_missing(n_p, sched.M, sched.S)
        co = _coeffs(rates, sched)
        c_p, c_m = _objective(weights, n_m)
        feas = (eta_m <= eta_p) & (
            co.a_p * eta_p + co.a_m * eta_m <= co.T_1 * (1 + 1e-12) + 1e-15
        )
        if co.b_m > 0:
            feas &= co.b_m * eta_m <= co.T_y * (1 + 1e-12)
        obj = np.where(feas, c_p * eta_p + c_m * eta_m, -np.inf)
        idx = np.unravel_index(np.argmax(obj), obj.shape)
        if not np.isfinite(obj[idx]):
            continue
        ep, em = float(eta_p[0, idx[1]]), float(eta_m[idx[0], 0])
        score = qoe_score(ep, em, n_m, weights)
        if score > best.score:
            best = QoESolution(
                N_p=n_p, N_m=n_m, eta_p=ep, eta_m=em, score=score, feasible=True,
            )
    return best
