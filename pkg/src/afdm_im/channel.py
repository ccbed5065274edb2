"""Integer delay-Doppler multipath channel and its DAF-domain matrix model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from . import daft as _daft
from .config import ChannelConfig, CsiError, FrameConfig


class NonIntegerShiftError(ValueError):
    """``2*N*lambda1*l`` is not an integer, so the path is not a pure DAF shift."""


@dataclass(frozen=True)
class PathSet:
    gains: np.ndarray
    delays: np.ndarray
    dopplers: np.ndarray
    gains_est: np.ndarray

    @property
    def P(self) -> int:
        return self.gains.size


@dataclass(frozen=True)
class EffectiveChannel:
    H_eff: np.ndarray
    H_est: np.ndarray
    H_paths: np.ndarray  # (P, N, N)


def delay_doppler_grid(chan: ChannelConfig) -> list[tuple[int, int]]:
    """All admissible ``(l, alpha)`` pairs, delay-major."""
    return list(product(range(chan.l_max + 1), range(-chan.alpha_max, chan.alpha_max + 1)))


def noise_variance(frame: FrameConfig, snr_db: float) -> float:
    """N0 for a given Eb/N0 in dB."""
    return float(frame.Eb) / 10.0 ** (snr_db / 10.0)


def sample_paths(chan: ChannelConfig, rng: np.random.Generator) -> PathSet:
    grid = delay_doppler_grid(chan)
    pick = rng.permutation(len(grid))[: chan.P]
    delays = np.array([grid[k][0] for k in pick], dtype=int)
    dopplers = np.array([grid[k][1] for k in pick], dtype=int)
    gains = complex_normal(rng, chan.P, 1.0 / chan.P)
    return PathSet(gains, delays, dopplers, gains.copy())


def complex_normal(rng: np.random.Generator, shape, var: float) -> np.ndarray:
    return np.sqrt(var / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def corrupt_csi(
    gains: np.ndarray,
    rho: float,
    rng: np.random.Generator,
    model: CsiError | str = CsiError.AMPLITUDE,
) -> np.ndarray:
    """Receiver-side estimate ``sqrt(1 - rho**2) * h + rho * phi`` with i.i.d. ``phi ~ CN(0, 1)``.

    ``model="variance"`` treats ``rho`` as the error variance instead.
    """
    if rho == 0.0:
        return np.array(gains, copy=True)
    phi = complex_normal(rng, np.shape(gains), 1.0)
    if CsiError(model) is CsiError.VARIANCE:
        return np.sqrt(1.0 - rho) * gains + np.sqrt(rho) * phi
    return np.sqrt(1.0 - rho**2) * gains + rho * phi


def daf_shift(l: int, alpha: int, frame: FrameConfig) -> int:
    """``loc = -alpha + 2*N*lambda1*l``, not reduced modulo N."""
    shift = 2 * frame.N * frame.lambda1 * l
    k = round(shift)
    if abs(shift - k) > 1e-9:
        raise NonIntegerShiftError(
            f"2*N*lambda1*l = {shift} is not an integer (N={frame.N}, lambda1={frame.lambda1}, l={l})"
        )
    return -alpha + int(k)


def subchannel_matrix(l: int, alpha: int, frame: FrameConfig) -> np.ndarray:
    """Phase-permutation matrix of one path in the DAF domain."""
    N = frame.N
    loc = daf_shift(l, alpha, frame)
    rows = np.arange(N)
    cols = (rows + loc) % N
    phase = (2 * np.pi / N) * (
        N * frame.lambda2 * (cols.astype(float) ** 2 - rows.astype(float) ** 2)
        - cols * l
        + N * frame.lambda1 * l**2
    )
    H = np.zeros((N, N), dtype=complex)
    H[rows, cols] = np.exp(1j * phase)
    return H


def subchannel_stack(frame: FrameConfig, pairs) -> np.ndarray:
    return np.stack([subchannel_matrix(l, a, frame) for l, a in pairs])


def effective_channel(paths: PathSet, frame: FrameConfig) -> EffectiveChannel:
    H_paths = subchannel_stack(frame, zip(paths.delays, paths.dopplers))
    H_eff = np.tensordot(paths.gains, H_paths, axes=1)
    H_est = np.tensordot(paths.gains_est, H_paths, axes=1)
    return EffectiveChannel(H_eff, H_est, H_paths)


def transmit_daf_domain(
    x: np.ndarray, H_eff: np.ndarray, N0: float, rng: np.random.Generator | None = None
) -> np.ndarray:
    """``y = H_eff x + w`` with ``w ~ CN(0, N0 I)``; works on single frames or batches."""
    y = np.einsum("...ij,...j->...i", H_eff, x)
    if N0 > 0:
        if rng is None:
            raise ValueError("a generator is required when N0 > 0")
        y = y + complex_normal(rng, y.shape, N0)
    return y


def add_cpp(s: np.ndarray, L: int, lambda1: float) -> np.ndarray:
    """Prepend a chirp-periodic prefix of length ``L``."""
    N = s.shape[-1]
    if L == 0:
        return s.copy()
    k = np.arange(L, 0, -1)  # prefix sample at position -k
    prefix = s[..., N - k] * np.exp(-2j * np.pi * lambda1 * (N**2 - 2 * N * k))
    return np.concatenate([prefix, s], axis=-1)


def ltv_convolve(
    s_ext: np.ndarray, L: int, gains, delays, dopplers, N: int
) -> np.ndarray:
    """``r[t] = sum_i h_i s[t - l_i] exp(2j*pi*alpha_i*t/N)`` for ``t = 0..N-1``.

    ``s_ext`` holds samples ``-L..N-1``; time zero is the first sample after the prefix.
    """
    t = np.arange(N)
    r = np.zeros(N, dtype=complex)
    for h, l, a in zip(gains, delays, dopplers):
        r += h * s_ext[L + t - l] * np.exp(2j * np.pi * a * t / N)
    return r


def time_domain_oracle(
    x: np.ndarray,
    paths: PathSet,
    frame: FrameConfig,
    L_cpp: int,
    op: _daft.DaftOperator | None = None,
) -> np.ndarray:
    """Noiseless received DAF vector computed through the time-domain chain.

    idaft -> chirp-periodic prefix -> multipath with Doppler -> prefix removal -> daft.
    """
    l_max = int(np.max(paths.delays)) if paths.P else 0
    if L_cpp < l_max:
        raise ValueError(f"prefix length {L_cpp} shorter than the largest delay {l_max}")
    if op is None:
        op = _daft.build(frame.N, frame.lambda1, frame.lambda2)
    s = _daft.idaft(op, x)
    s_ext = add_cpp(s, L_cpp, frame.lambda1)
    r = ltv_convolve(s_ext, L_cpp, paths.gains, paths.delays, paths.dopplers, frame.N)
    return _daft.daft(op, r)


def sample_grid_gains(
    chan: ChannelConfig, batch: int, rng: np.random.Generator
) -> np.ndarray:
    """``(batch, P_max)`` gains over the full delay-Doppler grid, zero on inactive pairs.

    Each row activates ``P`` grid pairs uniformly without replacement.
    """
    P_max = chan.P_max
    h = complex_normal(rng, (batch, chan.P), 1.0 / chan.P)
    if chan.P == P_max:
        return h
    pick = np.argsort(rng.random((batch, P_max)), axis=1)[:, : chan.P]
    out = np.zeros((batch, P_max), dtype=complex)
    np.put_along_axis(out, pick, h, axis=1)
    return out


def corrupt_grid_gains(
    gains: np.ndarray,
    rho: float,
    rng: np.random.Generator,
    model: CsiError | str = CsiError.AMPLITUDE,
) -> np.ndarray:
    """Batched CSI corruption that leaves inactive grid pairs at zero."""
    if rho == 0.0:
        return gains
    est = corrupt_csi(gains, rho, rng, model)
    return np.where(gains != 0, est, 0)


def placements(chan: ChannelConfig) -> list[tuple[tuple[int, int], ...]]:
    """Every set of ``P`` distinct grid pairs (``C(P_max, P)`` of them)."""
    return list(combinations(delay_doppler_grid(chan), chan.P))


def placement_count(chan: ChannelConfig) -> int:
    return math.comb(chan.P_max, chan.P)
