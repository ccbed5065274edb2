"""Closed-form union bound on the average bit error probability of joint ML detection.

The received frame is written as ``y = U(x) h + w`` with ``U(x) = [H_1 x, ..., H_P x]``.
Pairwise error probabilities use the two-exponential Q-function approximation,
averaged over ``h_est ~ CN(0, Psi)``; the bound sums them weighted by the
Hamming distance of the bit labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import erfc

from . import channel, codec
from .config import ChannelConfig, CsiError, FrameConfig

MAX_BOUND_BITS = 16
EIG_CLIP = 1e-10


class PepMode(str, Enum):
    DET_FORM = "det_form"
    HIGH_SNR = "high_snr"


def upsilon(x: np.ndarray, H_paths: np.ndarray) -> np.ndarray:
    """``(N, P)`` matrix whose column ``i`` is ``H_i x``."""
    return np.einsum("pij,j->ip", H_paths, x)


def q_approx(x):
    """Q(x) ~ exp(-x^2/2)/12 + exp(-2x^2/3)/4."""
    x = np.asarray(x, dtype=float)
    return np.exp(-(x**2) / 2) / 12 + np.exp(-2 * x**2 / 3) / 4


def q_exact(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def csi_variance(P: int, rho: float, model: CsiError | str = CsiError.AMPLITUDE) -> float:
    """Per-path variance of the estimated gain, ``(1 - rho^2)/P + rho^2``."""
    if CsiError(model) is CsiError.VARIANCE:
        return (1.0 - rho) / P + rho
    return (1.0 - rho**2) / P + rho**2


def csi_covariance(P: int, rho: float, model: CsiError | str = CsiError.AMPLITUDE) -> np.ndarray:
    return csi_variance(P, rho, model) * np.eye(P)


def exponent_weights(N0: float, rho: float, upsilon_energy: float, rho_exponent: int = 1):
    """``(q1, q2)``: the exponent scales of the two Q-approximation terms.

    ``rho_exponent=1`` reproduces the penalty ``rho * ||U(x_i)||^2`` as printed;
    ``2`` uses the estimation-error variance ``rho**2`` instead.
    """
    penalty = N0 + rho**rho_exponent * upsilon_energy
    if not penalty > 0:
        raise ValueError("need N0 > 0 or rho > 0")
    return 1.0 / (4.0 * penalty), 1.0 / (3.0 * penalty)


@dataclass(frozen=True)
class PairwiseTerm:
    delta: np.ndarray  # U(x_i) - U(x_j), (N, P)
    gram: np.ndarray  # delta^H delta, (P, P)
    eigenvalues: np.ndarray
    hamming: int

    @property
    def rank(self) -> int:
        kappa = self.eigenvalues
        if kappa.size == 0 or kappa.max() <= 0:
            return 0
        return int(np.count_nonzero(kappa > 1e-9 * kappa.max()))


def pairwise_term(
    x_i: np.ndarray, x_j: np.ndarray, H_paths: np.ndarray, hamming: int = 0
) -> PairwiseTerm:
    delta = upsilon(x_i, H_paths) - upsilon(x_j, H_paths)
    gram = delta.conj().T @ delta
    kappa = np.linalg.eigvalsh(gram)
    if kappa.min() < -EIG_CLIP * max(1.0, kappa.max()):
        raise ArithmeticError(f"difference Gram matrix not PSD (min eigenvalue {kappa.min()})")
    return PairwiseTerm(delta, gram, np.clip(kappa, 0.0, None), hamming)


def _pep(term: PairwiseTerm, q1: float, q2: float, psi: np.ndarray, mode: PepMode) -> float:
    if not np.any(term.eigenvalues > 0):
        raise ValueError("identical codewords have no pairwise error probability")
    if mode is PepMode.DET_FORM:
        I = np.eye(psi.shape[0])
        d1 = np.linalg.det(I + q1 * psi @ term.gram).real
        d2 = np.linalg.det(I + q2 * psi @ term.gram).real
        return (1 / 12) / d1 + (1 / 4) / d2
    kappa = term.eigenvalues[term.eigenvalues > 1e-9 * term.eigenvalues.max()]
    P = psi.shape[0]
    return (1 / 12) / np.prod(q1 * kappa / P) + (1 / 4) / np.prod(q2 * kappa / P)


def pep_unconditional(
    x_i: np.ndarray,
    x_j: np.ndarray,
    H_paths: np.ndarray,
    N0: float,
    rho: float = 0.0,
    mode: PepMode | str = PepMode.DET_FORM,
    rho_exponent: int = 1,
    csi_error: CsiError | str = CsiError.AMPLITUDE,
) -> float:
    """Approximate unconditional probability that ML prefers ``x_j`` when ``x_i`` was sent.

    ``det_form`` evaluates ``1/12 / det(I + q1 Psi A) + 1/4 / det(I + q2 Psi A)`` on the
    ``P x P`` Gram matrix ``A``; ``high_snr`` keeps only the product of ``q kappa / P``
    over the nonzero eigenvalues.
    """
    mode = PepMode(mode)
    term = pairwise_term(x_i, x_j, H_paths)
    energy = float(np.sum(np.abs(upsilon(x_i, H_paths)) ** 2))
    q1, q2 = exponent_weights(N0, rho, energy, rho_exponent)
    return _pep(term, q1, q2, csi_covariance(H_paths.shape[0], rho, csi_error), mode)


def _hamming(a: int, b: int) -> int:
    return bin(a ^ b).count("1")


def placement_terms(
    frame: FrameConfig, H_paths: np.ndarray, book: np.ndarray | None = None
) -> list[tuple[int, int, PairwiseTerm]]:
    """All ordered pairs ``(i, j)``, ``i != j``, with their pairwise terms."""
    if book is None:
        book = codec.frame_codebook(frame)
    K = book.shape[0]
    return [
        (i, j, pairwise_term(book[i], book[j], H_paths, _hamming(i, j)))
        for i in range(K)
        for j in range(K)
        if i != j
    ]


class BoundCalculator:
    """Caches pairwise terms of every path placement so a whole SNR sweep is cheap."""

    def __init__(self, frame: FrameConfig, chan: ChannelConfig):
        if frame.p > MAX_BOUND_BITS:
            raise ValueError(
                f"pairwise enumeration over 2**{frame.p} codewords refused (limit 2**{MAX_BOUND_BITS})"
            )
        self.frame = frame
        self.chan = chan
        book = codec.frame_codebook(frame)
        self.upsilon_energy = chan.P * frame.g * frame.m
        self.placements = channel.placements(chan)
        self.terms = []
        for pairs in self.placements:
            H_paths = channel.subchannel_stack(frame, pairs)
            energies = np.sum(np.abs(np.einsum("pij,kj->kip", H_paths, book)) ** 2, axis=(1, 2))
            # constant-modulus codewords and phase-permutation paths fix ||U(x)||^2
            assert np.allclose(energies, self.upsilon_energy), energies
            self.terms.append(placement_terms(frame, H_paths, book))

    def bound(
        self,
        snr_db: float,
        mode: PepMode | str = PepMode.DET_FORM,
        rho: float | None = None,
        rho_exponent: int = 1,
    ) -> float:
        mode = PepMode(mode)
        rho = self.chan.rho if rho is None else rho
        N0 = channel.noise_variance(self.frame, snr_db)
        q1, q2 = exponent_weights(N0, rho, self.upsilon_energy, rho_exponent)
        psi = csi_covariance(self.chan.P, rho, self.chan.csi_error)
        scale = 1.0 / ((1 << self.frame.p) * self.frame.p)
        total = 0.0
        for terms in self.terms:
            acc = 0.0
            for _, _, term in terms:
                acc += _pep(term, q1, q2, psi, mode) * term.hamming
            total += acc * scale
        return total / len(self.terms)


def abep_bound(
    frame: FrameConfig,
    chan: ChannelConfig,
    snr_db: float,
    mode: PepMode | str = PepMode.DET_FORM,
    rho_exponent: int = 1,
) -> float:
    """Union bound on the BER, averaged over all placements of ``P`` paths on the grid."""
    return BoundCalculator(frame, chan).bound(snr_db, mode, rho_exponent=rho_exponent)


@dataclass(frozen=True)
class RankSummary:
    """Minimum Gram rank over pairs, split by which bits the pair disagrees on."""

    min_rank_index: int  # pairs whose activation patterns differ
    min_rank_mod: int  # pairs with identical patterns (modulated bits only)
    fraction_deficient_mod: float  # share of (placement, mod-only pair) with rank < P
    fraction_deficient_index: float


def rank_scan(frame: FrameConfig, chan: ChannelConfig) -> RankSummary:
    """Exhaustive rank scan over placements and codeword pairs."""
    calc = BoundCalculator(frame, chan)
    labels = codec.codeword_index_to_labels(np.arange(1 << frame.p), frame)
    ranks_of = codec.group_candidates(frame).ranks
    patterns = ranks_of[labels]  # (K, g)
    idx_ranks, mod_ranks = [], []
    for terms in calc.terms:
        for i, j, term in terms:
            same_pattern = np.array_equal(patterns[i], patterns[j])
            (mod_ranks if same_pattern else idx_ranks).append(term.rank)
    idx_ranks, mod_ranks = np.array(idx_ranks), np.array(mod_ranks)
    P = chan.P
    return RankSummary(
        int(idx_ranks.min()) if idx_ranks.size else P,
        int(mod_ranks.min()) if mod_ranks.size else P,
        float(np.mean(mod_ranks < P)) if mod_ranks.size else 0.0,
        float(np.mean(idx_ranks < P)) if idx_ranks.size else 0.0,
    )
