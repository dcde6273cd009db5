"""Single-cell deployment: user placement, large-scale fading, power normalization.

Users sit on an annular theater floor between radii r1 and r2 around the base
station. Large-scale fading follows the power-law model psi = c / tau^kappa.
All downstream link math works on powers normalized by the noise floor W*sigma^2.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class CellConfig:
    r1: float = 40.0          # inner radius (m)
    r2: float = 45.0          # outer radius (m)
    K: int = 100              # active users
    N: int = 128              # BS antennas
    c: float = 10.0 ** -3.5   # path-loss constant
    kappa: float = 3.76       # path-loss exponent
    noise_density: float = -174.0  # dBm/Hz
    P_u: float = 0.1          # HMD uplink power (W)
    P_d: float = 10.0         # total downlink power (W)
    W: float = 100e6          # bandwidth (Hz)
    C_B: float = 200e3        # coherence bandwidth (Hz)
    C_T: float = 1e-3         # coherence time (s)
    T: int = 200              # coherence interval (symbols); must equal C_B * C_T

    def __post_init__(self):
        if not (0 < self.r1 < self.r2):
            raise ConfigError(f"need 0 < r1 < r2, got r1={self.r1}, r2={self.r2}")
        if self.K < 1 or self.N < 1:
            raise ConfigError(f"need K >= 1 and N >= 1, got K={self.K}, N={self.N}")
        if self.c <= 0 or self.kappa <= 0:
            raise ConfigError("path-loss parameters must be positive")
        if self.W <= 0:
            raise ConfigError(f"bandwidth must be positive, got {self.W}")
        if self.P_u <= 0 or self.P_d <= 0:
            raise ConfigError("uplink and downlink powers must be positive")
        expected_T = self.C_B * self.C_T
        if abs(self.T - expected_T) > 1e-6 * max(1.0, expected_T):
            raise ConfigError(
                f"coherence interval T={self.T} != C_B*C_T={expected_T}"
            )


@dataclass(frozen=True)
class UserLink:
    id: int        # user index k
    tau: float     # distance to BS (m)
    psi: float     # large-scale fading coefficient
    viewport: int  # viewport id (1-based)


def large_scale_fading(tau: float, c: float, kappa: float) -> float:
    """psi = c / tau^kappa."""
    return c / tau ** kappa


def noise_psd_watts(noise_density_dbm: float) -> float:
    """Convert a noise power spectral density from dBm/Hz to W/Hz."""
    return 10.0 ** ((noise_density_dbm - 30.0) / 10.0)


def normalize_powers(config: CellConfig) -> tuple[float, float]:
    """Return (q_u, P): uplink and total downlink powers over the noise floor.

    q_u = P_u / (W * sigma^2),  P = P_d / (W * sigma^2), with sigma^2 the noise
    PSD in W/Hz.
    """
    sigma2 = noise_psd_watts(config.noise_density)
    q_u = config.P_u / (config.W * sigma2)
    P = config.P_d / (config.W * sigma2)
    if q_u <= 0 or P <= 0:
        raise ConfigError("normalized powers must be positive")
    return q_u, P


def generate_users(config: CellConfig, L: int, seed: int) -> list[UserLink]:
    """Place K users on the annulus and split them over L viewports.

    Distances are uniform on [r1, r2]; viewport ids are assigned round-robin
    after a seeded shuffle, so every viewport 1..L is non-empty. Deterministic
    for a fixed seed.
    """
    if L < 1 or L > config.K:
        raise ConfigError(f"need 1 <= L <= K, got L={L}, K={config.K}")
    rng = np.random.default_rng(seed)
    tau = rng.uniform(config.r1, config.r2, size=config.K)
    order = rng.permutation(config.K)
    viewport = np.empty(config.K, dtype=int)
    viewport[order] = np.arange(config.K) % L + 1
    return [
        UserLink(
            id=k,
            tau=float(tau[k]),
            psi=large_scale_fading(float(tau[k]), config.c, config.kappa),
            viewport=int(viewport[k]),
        )
        for k in range(config.K)
    ]


def psi_array(users: list[UserLink]) -> np.ndarray:
    """Large-scale fading coefficients indexed by user id."""
    out = np.empty(len(users))
    for u in users:
        out[u.id] = u.psi
    return out


def users_by_viewport(users: list[UserLink]) -> dict[int, tuple[int, ...]]:
    """Map viewport id -> sorted tuple of its user ids."""
    table: dict[int, list[int]] = {}
    for u in users:
        table.setdefault(u.viewport, []).append(u.id)
    return {l: tuple(sorted(ids)) for l, ids in table.items()}


def write_users_csv(users: list[UserLink], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "tau", "psi", "viewport"])
        for u in users:
            writer.writerow([u.id, repr(u.tau), repr(u.psi), u.viewport])
