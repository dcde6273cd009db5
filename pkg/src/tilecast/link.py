"""Closed-form link layer: estimation quality, MMF power split, SINR/SE, bounds.

All SINR math is in linear scale; dB only ever appears at reporting
boundaries. Per multi-stream group with pilot length sigma (= stream count)
and normalized powers (q_u uplink, P total downlink):

  U(f,b)  = sigma*q_u*Psi(f,b)^2 / (1 + sum_t sigma*q_u*Psi(f,t))
  mu_f    = (sum_t sigma*q_u*Psi(f,t))^2 / (1 + sum_t sigma*q_u*Psi(f,t))
  MRT SINR(f,b) = N*q_d[f]*U(f,b) / (1 + Psi(f,b)*P)
  ZF  SINR(f,b) = (N-sigma)*q_d[f]*U(f,b) / (1 + (Psi(f,b)-U(f,b))*P)

Max-min fairness equalizes stream SINRs: with a_f the minimum per-user power
coefficient of stream f, q_d[f] = (P/a_f)/sum_t(1/a_t) and the common SINR is
omega = P / sum_t (1/a_t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    BoundInfeasibleError,
    DegenerateStreamError,
    PrecoderInfeasibleError,
    StarvationError,
)
from .grouping import Group


@dataclass(frozen=True)
class StreamStats:
    psi: np.ndarray  # per-user large-scale fading, shape (B,)
    u: np.ndarray    # per-user estimation quality, shape (B,)
    mu: float        # variance of the stream channel estimate


@dataclass(frozen=True)
class GroupRate:
    omega: float   # MMF SINR (linear)
    gamma: float   # spectral efficiency (bit/s/Hz)
    v: float       # throughput (bit/s)
    precoder: str  # "mrt" or "zf"


@dataclass(frozen=True)
class MmfResult:
    sinr: tuple[np.ndarray, ...]  # per-stream per-user SINR at the MMF split
    omega: float                  # equalized minimum SINR
    q_d: np.ndarray               # per-stream downlink powers, sums to P
    a: np.ndarray                 # per-stream minimal power coefficients


def estimation_quality(psi_row: Sequence[float], sigma: int, q_u: float) -> StreamStats:
    """Per-user estimation quality and estimate variance for one co-pilot stream.

    q_u = 0 is the no-pilot-energy limit (U = mu = 0); negative inputs are
    rejected.
    """
    psi = np.asarray(psi_row, dtype=float)
    if psi.size == 0 or np.any(psi <= 0):
        raise ValueError("psi values must be positive and non-empty")
    if sigma < 1:
        raise ValueError(f"pilot length must be >= 1, got {sigma}")
    if q_u < 0:
        raise ValueError(f"uplink power must be non-negative, got {q_u}")
    s = sigma * q_u * psi.sum()
    u = sigma * q_u * psi**2 / (1.0 + s)
    mu = s**2 / (1.0 + s)
    return StreamStats(psi=psi, u=u, mu=float(mu))


def mmf_allocate(a: Sequence[float], P: float) -> tuple[np.ndarray, float]:
    """Max-min fair downlink power split across streams.

    Returns (q_d, omega) with q_d[f] = (P/a[f]) / sum_t(1/a[t]) and
    omega = P / sum_t(1/a[t]); every stream then achieves a[f]*q_d[f] = omega.
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0 or np.any(a <= 0) or not np.all(np.isfinite(a)):
        raise DegenerateStreamError(f"power coefficients must be positive, got {a}")
    if P <= 0:
        raise ValueError(f"downlink power must be positive, got {P}")
    inv_sum = np.sum(1.0 / a)
    q_d = (P / a) / inv_sum
    omega = P / inv_sum
    return q_d, float(omega)


def _mmf_from_coefficients(coeff: list[np.ndarray], P: float) -> MmfResult:
    a = np.array([float(c.min()) for c in coeff])
    q_d, omega = mmf_allocate(a, P)
    sinr = tuple(c * q for c, q in zip(coeff, q_d))
    return MmfResult(sinr=sinr, omega=omega, q_d=q_d, a=a)


def mrt_coefficients(stats: Sequence[StreamStats], N: int, P: float) -> list[np.ndarray]:
    """Per-user power coefficients A(f,b); SINR(f,b) = A(f,b) * q_d[f]."""
    if N < 1:
        raise ValueError(f"need N >= 1, got {N}")
    return [N * st.u / (1.0 + st.psi * P) for st in stats]


def zf_coefficients(
    stats: Sequence[StreamStats], N: int, sigma: int, P: float
) -> list[np.ndarray]:
    if sigma >= N:
        raise PrecoderInfeasibleError(f"ZF needs sigma < N, got sigma={sigma}, N={N}")
    return [(N - sigma) * st.u / (1.0 + (st.psi - st.u) * P) for st in stats]


def sinr_mrt(stats: Sequence[StreamStats], N: int, P: float) -> MmfResult:
    """Per-user MRT SINR table and the MMF-equalized group SINR."""
    return _mmf_from_coefficients(mrt_coefficients(stats, N, P), P)


def sinr_zf(stats: Sequence[StreamStats], N: int, sigma: int, P: float) -> MmfResult:
    """Per-user ZF SINR table and the MMF-equalized group SINR."""
    return _mmf_from_coefficients(zf_coefficients(stats, N, sigma, P), P)


def worst_case_sinr(
    precoder: str,
    N: int,
    sigma_j: int,
    q_u: float,
    P: float,
    psi_min: float,
    psi_all: float,
) -> float:
    """Worst-case MMF SINR when only the group's weakest user and the total
    fading mass are known.

    Valid lower bound whenever psi_min <= every stream's minimum coefficient
    and the stream count equals sigma_j. The MRT form is independent of
    sigma_j.
    """
    if psi_min <= 0 or psi_all < psi_min:
        raise ValueError(f"need 0 < psi_min <= psi_all, got {psi_min}, {psi_all}")
    if precoder == "mrt":
        return N * P * (q_u * psi_min**2 / (1.0 + psi_min * P)) / (1.0 + q_u * psi_all)
    if precoder == "zf":
        if sigma_j >= N:
            raise PrecoderInfeasibleError(f"ZF bound needs sigma_j < N, got {sigma_j} >= {N}")
        denom = (
            1.0
            + q_u * psi_all
            + (1.0 + q_u * psi_all) * psi_min * P
            - sigma_j * q_u * psi_min**2 * P
        )
        if denom <= 0:
            raise BoundInfeasibleError(f"ZF bound denominator {denom} <= 0")
        return (N - sigma_j) * q_u * psi_min**2 * P / denom
    raise ValueError(f"unknown precoder {precoder!r}")


def spectral_efficiency(omega: float, sigma: int, T: int) -> float:
    """gamma = (1 - sigma/T) * log2(1 + omega), bit/s/Hz."""
    if omega < 0:
        raise ValueError(f"SINR must be non-negative, got {omega}")
    if not 0 <= sigma <= T:
        raise ValueError(f"need 0 <= sigma <= T, got sigma={sigma}, T={T}")
    return (1.0 - sigma / T) * math.log2(1.0 + omega)


def group_rate(gamma: float, W: float) -> float:
    """Throughput v = W * gamma, bit/s."""
    return W * gamma


def latency(eta: float, interval: float, rates: Sequence[float]) -> float:
    """Transmission latency of one phase: sum_g interval*eta / v_g."""
    rates = np.asarray(rates, dtype=float)
    if eta < 0:
        raise ValueError(f"encoding rate must be non-negative, got {eta}")
    if eta == 0 or rates.size == 0:
        return 0.0
    if np.any(rates <= 0):
        raise StarvationError("zero group rate; latency unbounded")
    return float(interval * eta * np.sum(1.0 / rates))


def rho(gammas: Sequence[float]) -> float:
    """Per-bit per-Hz delay of a grouping: sum_g 1/gamma_g."""
    gammas = np.asarray(gammas, dtype=float)
    if np.any(gammas <= 0):
        raise StarvationError("zero spectral efficiency; rho unbounded")
    return float(np.sum(1.0 / gammas))


def rate_group(
    group: Group,
    psi: np.ndarray,
    N: int,
    q_u: float,
    P: float,
    T: int,
    W: float,
    precoder: str,
) -> GroupRate:
    """Closed-form MMF rate of one multicast group (psi indexed by user id)."""
    sigma = group.sigma
    stats = [estimation_quality(psi[list(st.users)], sigma, q_u) for st in group.streams]
    if precoder == "mrt":
        res = sinr_mrt(stats, N, P)
    elif precoder == "zf":
        res = sinr_zf(stats, N, sigma, P)
    else:
        raise ValueError(f"unknown precoder {precoder!r}")
    gamma = spectral_efficiency(res.omega, sigma, T)
    return GroupRate(omega=res.omega, gamma=gamma, v=group_rate(gamma, W), precoder=precoder)


def rate_groups(
    groups: Sequence[Group],
    psi: np.ndarray,
    N: int,
    q_u: float,
    P: float,
    T: int,
    W: float,
    precoder: str,
) -> list[GroupRate]:
    return [rate_group(g, psi, N, q_u, P, T, W, precoder) for g in groups]


def worst_case_rate(
    precoder: str,
    N: int,
    sigma_j: int,
    q_u: float,
    P: float,
    psi_min: float,
    psi_all: float,
    T: int,
    W: float,
) -> GroupRate:
    """Rate of a hypothetical missing-tile group from the worst-case bound."""
    omega = worst_case_sinr(precoder, N, sigma_j, q_u, P, psi_min, psi_all)
    gamma = spectral_efficiency(omega, sigma_j, T)
    return GroupRate(omega=omega, gamma=gamma, v=group_rate(gamma, W), precoder=precoder)
