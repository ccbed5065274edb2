"""Index-modulation codec: bits <-> DAF-domain frame vectors.

Each group's bit block is ``p1`` index bits followed by ``p2`` modulated bits.
Index bits select one of the first ``2**p1`` m-combinations of the group's
``n`` slots in lexicographic order; modulated bits are Gray-mapped onto M-PSK.
All bit/integer conversions are MSB-first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .config import FrameConfig, Grouping


class IllegalPatternError(ValueError):
    """An activation pattern outside the codebook (rank >= 2**p1)."""


def bits_to_int(bits: Sequence[int]) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def int_to_bits(value: int, width: int) -> list[int]:
    return [(value >> (width - 1 - k)) & 1 for k in range(width)]


def gray_encode(d: int) -> int:
    return d ^ (d >> 1)


def gray_decode(code: int) -> int:
    d = code
    shift = code >> 1
    while shift:
        d ^= shift
        shift >>= 1
    return d


def _usable_patterns(n: int, m: int) -> int:
    return 1 << (math.comb(n, m).bit_length() - 1)


def combo_rank_to_indices(rank: int, n: int, m: int) -> tuple[int, ...]:
    """The ``rank``-th m-subset of ``range(n)`` in lexicographic order."""
    if not 0 <= rank < _usable_patterns(n, m):
        raise ValueError(f"combination rank {rank} out of range for C({n},{m})")
    out = []
    c = 0
    for pos in range(m):
        while True:
            block = math.comb(n - c - 1, m - pos - 1)
            if rank < block:
                break
            rank -= block
            c += 1
        out.append(c)
        c += 1
    return tuple(out)


def indices_to_combo_rank(indices: Sequence[int], n: int, m: int) -> int:
    """Inverse of :func:`combo_rank_to_indices`.

    Raises:
        IllegalPatternError: the pattern's lexicographic rank is not in the codebook.
    """
    idx = sorted(int(k) for k in indices)
    if len(idx) != m or len(set(idx)) != m or idx[0] < 0 or idx[-1] >= n:
        raise IllegalPatternError(f"{indices!r} is not an {m}-subset of range({n})")
    rank = 0
    prev = -1
    for pos, k in enumerate(idx):
        for c in range(prev + 1, k):
            rank += math.comb(n - c - 1, m - pos - 1)
        prev = k
    if rank >= _usable_patterns(n, m):
        raise IllegalPatternError(f"pattern {tuple(idx)} has rank {rank}, outside the codebook")
    return rank


def psk_map(bits: Sequence[int], M: int) -> complex:
    """Gray-labelled M-PSK with zero phase offset."""
    if len(bits) != M.bit_length() - 1:
        raise ValueError(f"M={M} takes {M.bit_length() - 1} bits, got {len(bits)}")
    d = gray_decode(bits_to_int(bits))
    if d == 0:
        return 1 + 0j
    if 4 * d == 2 * M:
        return -1 + 0j
    return complex(np.exp(2j * np.pi * d / M))


def psk_demap(symbol: complex, M: int) -> list[int]:
    """Nearest-point hard decision, returned as bits."""
    d = int(np.round(np.angle(symbol) * M / (2 * np.pi))) % M
    return int_to_bits(gray_encode(d), M.bit_length() - 1)


def psk_points(M: int) -> np.ndarray:
    """Constellation indexed by label: ``psk_points(M)[label] == psk_map(bits(label))``."""
    width = M.bit_length() - 1
    return np.array([psk_map(int_to_bits(lbl, width), M) for lbl in range(M)])


def group_slot_to_daf_index(i: int, l: int, grouping: Grouping | str, n: int, g: int) -> int:
    """DAF position of slot ``l`` of group ``i``."""
    if Grouping(grouping) is Grouping.LOCALIZED:
        return i * n + l
    return i + l * g


def daf_index_map(cfg: FrameConfig) -> np.ndarray:
    """``(g, n)`` integer array of DAF positions per group and slot."""
    return np.array(
        [[group_slot_to_daf_index(i, l, cfg.grouping, cfg.n, cfg.g) for l in range(cfg.n)]
         for i in range(cfg.g)],
        dtype=np.intp,
    )


@dataclass(frozen=True)
class GroupContent:
    combo_rank: int
    indices: tuple[int, ...]
    symbols: tuple[complex, ...]


@dataclass(frozen=True)
class Frame:
    bits: tuple[int, ...]
    groups: tuple[GroupContent, ...]
    x: np.ndarray


def _group_from_bits(block: Sequence[int], cfg: FrameConfig) -> GroupContent:
    p1 = cfg.p1
    bps = cfg.bits_per_symbol
    rank = bits_to_int(block[:p1])
    indices = combo_rank_to_indices(rank, cfg.n, cfg.m)
    mod = block[p1:]
    symbols = tuple(psk_map(mod[k * bps:(k + 1) * bps], cfg.M) for k in range(cfg.m))
    return GroupContent(rank, indices, symbols)


def encode_frame(bits: Sequence[int], cfg: FrameConfig) -> Frame:
    bits = tuple(int(b) for b in bits)
    if len(bits) != cfg.p:
        raise ValueError(f"frame carries {cfg.p} bits, got {len(bits)}")
    width = cfg.p1 + cfg.p2
    slots = daf_index_map(cfg)
    x = np.zeros(cfg.N, dtype=complex)
    groups = []
    for i in range(cfg.g):
        grp = _group_from_bits(bits[i * width:(i + 1) * width], cfg)
        for k, q in zip(grp.indices, grp.symbols):
            x[slots[i, k]] = q
        groups.append(grp)
    return Frame(bits, tuple(groups), x)


def decode_frame(
    decisions: Sequence[tuple[Sequence[int], Sequence[complex]]], cfg: FrameConfig
) -> list[int]:
    """Bits from per-group ``(active indices, symbols)`` decisions."""
    if len(decisions) != cfg.g:
        raise ValueError(f"expected {cfg.g} group decisions, got {len(decisions)}")
    bits: list[int] = []
    for indices, symbols in decisions:
        rank = indices_to_combo_rank(indices, cfg.n, cfg.m)
        bits += int_to_bits(rank, cfg.p1)
        for q in symbols:
            bits += psk_demap(q, cfg.M)
    return bits


@dataclass(frozen=True)
class GroupCandidateSet:
    """All legal group vectors; row ``label`` carries the group bit block ``label`` (MSB-first)."""

    vectors: np.ndarray  # (2**(p1+p2), n)
    ranks: np.ndarray
    symbol_labels: np.ndarray  # (2**(p1+p2), m) PSK labels in slot order

    def __len__(self) -> int:
        return self.vectors.shape[0]


@lru_cache(maxsize=64)
def _candidates(n: int, m: int, M: int, p1: int) -> GroupCandidateSet:
    bps = M.bit_length() - 1
    p2 = m * bps
    points = psk_points(M)
    count = 1 << (p1 + p2)
    vectors = np.zeros((count, n), dtype=complex)
    ranks = np.empty(count, dtype=np.intp)
    sym = np.empty((count, m), dtype=np.intp)
    for label in range(count):
        rank = label >> p2
        idx = combo_rank_to_indices(rank, n, m)
        for k in range(m):
            s = (label >> (p2 - (k + 1) * bps)) & (M - 1)
            sym[label, k] = s
            vectors[label, idx[k]] = points[s]
        ranks[label] = rank
    vectors.setflags(write=False)
    return GroupCandidateSet(vectors, ranks, sym)


def group_candidates(cfg: FrameConfig) -> GroupCandidateSet:
    return _candidates(cfg.n, cfg.m, cfg.M, cfg.p1)


def frames_from_labels(labels: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Vectorized encoder: ``(B, g)`` group labels -> ``(B, N)`` frame vectors."""
    cand = group_candidates(cfg).vectors
    slots = daf_index_map(cfg)
    x = np.zeros((labels.shape[0], cfg.N), dtype=complex)
    x[:, slots.ravel()] = cand[labels].reshape(labels.shape[0], -1)
    return x


def labels_to_codeword_index(labels: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Concatenate group labels (group 0 most significant) into the frame's bit integer."""
    width = cfg.p1 + cfg.p2
    out = np.zeros(labels.shape[:-1], dtype=np.int64)
    for i in range(cfg.g):
        out = (out << width) | labels[..., i]
    return out


def codeword_index_to_labels(index: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    width = cfg.p1 + cfg.p2
    index = np.asarray(index, dtype=np.int64)
    shifts = width * np.arange(cfg.g - 1, -1, -1)
    return (index[..., None] >> shifts) & ((1 << width) - 1)


def frame_codebook(cfg: FrameConfig) -> np.ndarray:
    """All ``2**p`` frame vectors, row ``j`` carrying bits ``int_to_bits(j, p)``."""
    if cfg.p > 24:
        raise ValueError(f"full-frame codebook of 2**{cfg.p} entries is too large")
    labels = codeword_index_to_labels(np.arange(1 << cfg.p), cfg)
    return frames_from_labels(labels, cfg)
