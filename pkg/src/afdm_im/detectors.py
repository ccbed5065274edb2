"""Joint ML, MMSE + group-wise ML, and plain MMSE hard detection.

Every detector here works on a batch: ``y`` is ``(B, N)`` and the channel
estimate is ``(B, N, N)``. Decisions come back as ``(B, g)`` group labels,
which are the group bit blocks read as MSB-first integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import codec
from .config import FrameConfig

MAX_JOINT_BITS = 24


class Detector(str, Enum):
    ML = "ml"
    MMSE_ML = "mmse_ml"
    MMSE_HARD = "mmse_hard"


class CodebookTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class Codebook:
    """Frame codebook for joint ML (``frames`` is ``None`` when not built) and group candidates."""

    cfg: FrameConfig
    group: codec.GroupCandidateSet
    slots: np.ndarray
    frames: np.ndarray | None = None


def build_codebook(cfg: FrameConfig, joint: bool = False) -> Codebook:
    frames = None
    if joint:
        if cfg.p > MAX_JOINT_BITS:
            raise CodebookTooLargeError(
                f"joint ML over 2**{cfg.p} codewords refused (limit 2**{MAX_JOINT_BITS}); use mmse_ml"
            )
        frames = codec.frame_codebook(cfg)
    return Codebook(cfg, codec.group_candidates(cfg), codec.daf_index_map(cfg), frames)


def _as_batch(y: np.ndarray, H: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    single = y.ndim == 1
    if single:
        y, H = y[None], H[None]
    return y, H, single


def ml_detect(y: np.ndarray, H_est: np.ndarray, frames: np.ndarray) -> np.ndarray:
    """Index of the codeword minimizing ``||y - H_est x||^2``; ties go to the lowest index."""
    y, H, single = _as_batch(y, H_est)
    K = frames.shape[0]
    # keep the (B, N, K) intermediate around 32 MB
    step = max(1, (1 << 21) // max(1, y.shape[1] * K))
    out = np.empty(y.shape[0], dtype=np.int64)
    for s in range(0, y.shape[0], step):
        Hc = H[s:s + step] @ frames.T
        d = y[s:s + step, :, None] - Hc
        metric = (d.real**2 + d.imag**2).sum(axis=1)
        out[s:s + step] = metric.argmin(axis=1)
    return out[0] if single else out


def mmse_equalize(
    y: np.ndarray, H_est: np.ndarray, gamma: float
) -> tuple[np.ndarray, np.ndarray]:
    """MMSE estimate and per-subsymbol bias factors.

    Returns ``x_hat = H^H (H H^H + I/gamma)^-1 y`` and ``R_u = f_u^H (H H^H + I/gamma)^-1 f_u``
    with ``f_u`` the ``u``-th column of ``H``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    y, H, single = _as_batch(y, H_est)
    N = H.shape[-1]
    gram = H @ H.conj().transpose(0, 2, 1)
    gram[:, np.arange(N), np.arange(N)] += 1.0 / gamma
    W = np.linalg.solve(gram, H)  # gram^-1 H; gram is Hermitian positive definite
    x_hat = np.einsum("bij,bi->bj", W.conj(), y)
    R = np.einsum("bij,bij->bj", H.conj(), W).real
    if single:
        return x_hat[0], R[0]
    return x_hat, R


def group_ml_detect(
    x_hat_groups: np.ndarray, R_groups: np.ndarray, candidates: np.ndarray
) -> np.ndarray:
    """Per-group argmin of ``||x_hat - R x||^2`` over candidate vectors.

    ``x_hat_groups`` and ``R_groups`` are ``(..., n)``; returns candidate indices ``(...)``.
    """
    scaled = R_groups[..., None, :] * candidates  # (..., K, n)
    d = x_hat_groups[..., None, :] - scaled
    return (d.real**2 + d.imag**2).sum(axis=-1).argmin(axis=-1)


def mmse_hard_labels(x_hat: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Nearest-PSK decisions per subsymbol, packed into group labels (all slots active)."""
    if cfg.p1 != 0 or cfg.m != cfg.n:
        raise ValueError("mmse_hard needs a scheme without index modulation (m == n)")
    M = cfg.M
    d = np.rint(np.angle(x_hat) * M / (2 * np.pi)).astype(np.int64) % M
    sym = d ^ (d >> 1)
    slots = codec.daf_index_map(cfg)
    per_slot = sym[..., slots]  # (B, g, n)
    bps = cfg.bits_per_symbol
    labels = np.zeros(per_slot.shape[:-1], dtype=np.int64)
    for k in range(cfg.n):
        labels = (labels << bps) | per_slot[..., k]
    return labels


def detect_labels(
    y: np.ndarray,
    H_est: np.ndarray,
    book: Codebook,
    detector: Detector | str,
    gamma: float | None = None,
) -> np.ndarray:
    """Batched detection returning ``(B, g)`` group labels."""
    detector = Detector(detector)
    cfg = book.cfg
    y, H, _ = _as_batch(y, H_est)
    if detector is Detector.ML:
        if book.frames is None:
            raise ValueError("joint ML needs a codebook built with joint=True")
        idx = ml_detect(y, H, book.frames)
        return codec.codeword_index_to_labels(idx, cfg)
    if gamma is None:
        raise ValueError(f"{detector.value} needs gamma = Eb/N0")
    x_hat, R = mmse_equalize(y, H, gamma)
    if detector is Detector.MMSE_HARD:
        return mmse_hard_labels(x_hat, cfg)
    return group_ml_detect(x_hat[:, book.slots], R[:, book.slots], book.group.vectors)


def detect_frame(
    y: np.ndarray,
    H_est: np.ndarray,
    cfg: FrameConfig,
    detector: Detector | str,
    gamma: float | None = None,
) -> list[int]:
    """Single-frame detection returning the recovered bit list."""
    book = build_codebook(cfg, joint=Detector(detector) is Detector.ML)
    labels = detect_labels(y, H_est, book, detector, gamma)[0]
    width = cfg.p1 + cfg.p2
    bits: list[int] = []
    for lbl in labels:
        bits += codec.int_to_bits(int(lbl), width)
    return bits
