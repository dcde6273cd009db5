"""Monte Carlo validation oracle for the closed-form link layer.

Draws uncorrelated Rayleigh channels, runs MMSE estimation from explicit
pilot observations, builds MRT/ZF precoders from the estimates, and forms the
hardening-bound SINR from sample moments of h^H b. Exists to check the closed
forms, so it shares no code path with the link module beyond the group layout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PilotShortageError, PrecoderInfeasibleError, SingularPrecoderError


@dataclass
class ChannelBatch:
    """R realizations of one group's channels.

    `h` has shape (R, N, U) where the U columns concatenate the streams'
    users; column (f, b) ~ CN(0, psi[f][b] * I_N). `offsets[f]` is the first
    column of stream f. The pilot-noise seed is pre-split from the batch seed
    so estimation is reproducible and independent of the channel draws.
    """

    h: np.ndarray
    psi: tuple[np.ndarray, ...]
    offsets: tuple[int, ...]
    seed: object
    noise_seed: np.random.SeedSequence

    @property
    def trials(self) -> int:
        return self.h.shape[0]

    @property
    def streams(self) -> int:
        return len(self.psi)

    def columns(self, f: int) -> range:
        return range(self.offsets[f], self.offsets[f] + len(self.psi[f]))


@dataclass
class EstimationResult:
    h_tilde: np.ndarray        # (R, N, F) stream channel estimates
    z: tuple[np.ndarray, ...]  # per-stream user scalings: H_tilde(f,b) = z[f][b]*h_tilde_f
    mu: np.ndarray             # (F,) estimate variances


def draw_batch(psi_rows: Sequence[Sequence[float]], N: int, R: int, seed) -> ChannelBatch:
    """Draw R iid realizations of the group channel matrix."""
    psi = tuple(np.asarray(row, dtype=float) for row in psi_rows)
    offsets = []
    total = 0
    for row in psi:
        offsets.append(total)
        total += row.size
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    channel_seed, noise_seed = root.spawn(2)
    rng = np.random.default_rng(channel_seed)
    scale = np.sqrt(np.concatenate(psi) / 2.0)
    h = rng.standard_normal((R, N, total)) + 1j * rng.standard_normal((R, N, total))
    h *= scale
    return ChannelBatch(h=h, psi=psi, offsets=tuple(offsets), seed=seed, noise_seed=noise_seed)


def pilot_matrix(sigma: int, F: int) -> np.ndarray:
    """F mutually orthonormal sigma-length pilot sequences (DFT columns)."""
    if sigma < F:
        raise PilotShortageError(f"need sigma >= F, got sigma={sigma}, F={F}")
    n = np.arange(sigma)
    k = np.arange(F)
    return np.exp(-2j * np.pi * np.outer(n, k) / sigma) / np.sqrt(sigma)


def simulate_estimation(batch: ChannelBatch, sigma: int, q_u: float) -> EstimationResult:
    """MMSE-estimate each stream's co-pilot channel from the uplink block.

    Builds the received pilot block Y = sum_{f,b} sqrt(sigma*q_u) h_{f,b}
    phi_f^T + noise, de-spreads with each stream's pilot, and applies the MMSE
    scaling. Per-user estimates follow from the fixed linear map
    H_tilde(f,b) = z(f,b) * h_tilde_f.
    """
    F = batch.streams
    phi = pilot_matrix(sigma, F)
    rng = np.random.default_rng(batch.noise_seed)
    R, N, _ = batch.h.shape
    y = rng.standard_normal((R, N, sigma)) + 1j * rng.standard_normal((R, N, sigma))
    y *= np.sqrt(0.5)
    root = np.sqrt(sigma * q_u)
    h_sum = np.stack(
        [batch.h[:, :, batch.columns(f)].sum(axis=2) for f in range(F)], axis=2
    )
    y += h_sum @ (root * phi.T)
    scale = np.array([sigma * q_u * batch.psi[f].sum() for f in range(F)])
    h_tilde = (y @ np.conj(phi)) * (scale / (1.0 + scale))
    z = tuple(root * batch.psi[f] / scale[f] for f in range(F))
    return EstimationResult(h_tilde=h_tilde, z=z, mu=scale**2 / (1.0 + scale))


def build_precoders(
    est: EstimationResult, kind: str, q_d: Sequence[float], sigma: int, N: int
) -> np.ndarray:
    """Per-realization precoding matrix, shape (R, N, F)."""
    q_d = np.asarray(q_d, dtype=float)
    h_tilde = est.h_tilde
    if kind == "mrt":
        return h_tilde * np.sqrt(q_d / (N * est.mu))
    if kind == "zf":
        if sigma >= N:
            raise PrecoderInfeasibleError(f"ZF needs sigma < N, got sigma={sigma}, N={N}")
        gram = np.conj(np.swapaxes(h_tilde, 1, 2)) @ h_tilde
        try:
            # stable solve on the small F x F Gram system, not an explicit inverse
            x = np.linalg.solve(gram, np.conj(np.swapaxes(h_tilde, 1, 2)))
        except np.linalg.LinAlgError as exc:
            raise SingularPrecoderError(
                "rank-deficient channel estimate; retry with a new realization"
            ) from exc
        v = np.conj(np.swapaxes(x, 1, 2))  # h_tilde @ gram^{-1}
        return v * np.sqrt((N - sigma) * q_d * est.mu)
    raise ValueError(f"unknown precoder {kind!r}")


def _assemble_sinr(m1: np.ndarray, m2: np.ndarray, stream_of: np.ndarray) -> np.ndarray:
    signal = np.abs(m1[np.arange(m1.shape[0]), stream_of]) ** 2
    return signal / (1.0 + m2.sum(axis=1) - signal)


def mmf_sinr_estimate(
    sinr: Sequence[np.ndarray], q_d: Sequence[float], P: float
) -> float:
    """Group MMF SINR from per-user estimates at the MMF power split.

    Re-runs the max-min recombination on the measured values: each stream's
    minimum user gives its power coefficient, and omega = P / sum_f(1/a_f).
    Averages the per-stream measurements instead of taking a single noisy
    minimum.
    """
    a = np.array([float(np.min(s)) / q for s, q in zip(sinr, q_d)])
    return float(P / np.sum(1.0 / a))


def _split_by_stream(values: np.ndarray, sizes: Sequence[int]) -> list[np.ndarray]:
    out = []
    offset = 0
    for s in sizes:
        out.append(values[offset : offset + s])
        offset += s
    return out


def empirical_sinr(
    batch: ChannelBatch, precoders: np.ndarray, blocks: int = 10
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Hardening-bound SINR per user from sample moments, with a standard error.

    Returns (sinr, stderr), each a list of per-stream arrays. The moments
    E{h^H b} and E{|h^H b|^2} are sample means over realizations; the standard
    error comes from splitting the realizations into `blocks` blocks.
    """
    R = batch.trials
    sizes = [row.size for row in batch.psi]
    stream_of = np.concatenate([np.full(s, f) for f, s in enumerate(sizes)])
    g = np.conj(np.swapaxes(batch.h, 1, 2)) @ precoders
    sinr_users = _assemble_sinr(g.mean(axis=0), (np.abs(g) ** 2).mean(axis=0), stream_of)
    edges = np.linspace(0, R, min(blocks, R) + 1, dtype=int)
    block_vals = np.stack(
        [
            _assemble_sinr(g[a:b].mean(axis=0), (np.abs(g[a:b]) ** 2).mean(axis=0), stream_of)
            for a, b in zip(edges[:-1], edges[1:])
        ]
    )
    nb = block_vals.shape[0]
    stderr_users = (
        block_vals.std(axis=0, ddof=1) / np.sqrt(nb) if nb > 1 else np.zeros_like(sinr_users)
    )
    return _split_by_stream(sinr_users, sizes), _split_by_stream(stderr_users, sizes)


def empirical_sinr_multi(
    psi_rows: Sequence[Sequence[float]],
    N: int,
    q_u: float,
    powers: dict[str, Sequence[float]],
    sigma: int,
    trials: int,
    seed,
    chunk: int = 2500,
) -> dict[str, tuple[list[np.ndarray], list[np.ndarray]]]:
    """Draw/estimate/precode/measure in one pass, chunked over trials.

    `powers` maps precoder kind to its per-stream downlink powers; channel
    and pilot-noise draws are shared across precoders, so adding a precoder
    does not change the random stream. Peak memory is one chunk of
    realizations; chunk seeds are spawned deterministically from `seed`.
    """
    sizes = [np.asarray(row).size for row in psi_rows]
    stream_of = np.concatenate([np.full(s, f) for f, s in enumerate(sizes)])
    starts = list(range(0, trials, chunk))
    seeds = np.random.SeedSequence(seed).spawn(len(starts))
    total = sum(sizes)
    sum1 = {k: np.zeros((total, len(sizes)), dtype=complex) for k in powers}
    sum2 = {k: np.zeros((total, len(sizes))) for k in powers}
    block_vals = {k: [] for k in powers}
    for child, start in zip(seeds, starts):
        r = min(chunk, trials - start)
        batch = draw_batch(psi_rows, N, r, child)
        est = simulate_estimation(batch, sigma, q_u)
        hc = np.conj(np.swapaxes(batch.h, 1, 2))
        for kind, q_d in powers.items():
            b = build_precoders(est, kind, q_d, sigma, N)
            g = hc @ b
            c1 = g.sum(axis=0)
            c2 = (np.abs(g) ** 2).sum(axis=0)
            sum1[kind] += c1
            sum2[kind] += c2
            block_vals[kind].append(_assemble_sinr(c1 / r, c2 / r, stream_of))
    out = {}
    for kind in powers:
        sinr_users = _assemble_sinr(sum1[kind] / trials, sum2[kind] / trials, stream_of)
        blocks = np.stack(block_vals[kind])
        nb = blocks.shape[0]
        stderr_users = (
            blocks.std(axis=0, ddof=1) / np.sqrt(nb) if nb > 1 else np.zeros_like(sinr_users)
        )
        out[kind] = (_split_by_stream(sinr_users, sizes), _split_by_stream(stderr_users, sizes))
    return out


def empirical_sinr_chunked(
    psi_rows: Sequence[Sequence[float]],
    N: int,
    q_u: float,
    q_d: Sequence[float],
    sigma: int,
    precoder: str,
    trials: int,
    seed,
    chunk: int = 2500,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Single-precoder front end of empirical_sinr_multi."""
    return empirical_sinr_multi(
        psi_rows, N, q_u, {precoder: q_d}, sigma, trials, seed, chunk
    )[precoder]
