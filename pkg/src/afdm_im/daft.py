"""Discrete affine Fourier transform.

The forward operator is ``A = L(l2) F L(l1)`` with ``L(lam) = diag(exp(-2j*pi*lam*u**2))``
and ``F`` the unitary DFT. Frames are at most a few dozen subsymbols long, so
both directions are stored as dense matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def chirp_diagonal(N: int, lam: float) -> np.ndarray:
    u = np.arange(N, dtype=float)
    return np.exp(-2j * np.pi * lam * u**2)


def dft_matrix(N: int) -> np.ndarray:
    u = np.arange(N)
    return np.exp(-2j * np.pi * np.outer(u, u) / N) / np.sqrt(N)


@dataclass(frozen=True)
class DaftOperator:
    N: int
    lambda1: float
    lambda2: float
    forward: np.ndarray
    inverse: np.ndarray


def build(N: int, lambda1: float, lambda2: float) -> DaftOperator:
    if N < 1:
        raise ValueError("N must be positive")
    A = chirp_diagonal(N, lambda2)[:, None] * dft_matrix(N) * chirp_diagonal(N, lambda1)[None, :]
    Ah = A.conj().T.copy()
    A.setflags(write=False)
    Ah.setflags(write=False)
    return DaftOperator(N, lambda1, lambda2, A, Ah)


def _check(op: DaftOperator, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[-1] != op.N:
        raise ValueError(f"expected trailing length {op.N}, got {v.shape[-1]}")
    return v


def idaft(op: DaftOperator, x: np.ndarray) -> np.ndarray:
    """DAF domain -> time domain. Accepts a vector or a ``(..., N)`` batch."""
    return _check(op, x) @ op.inverse.T


def daft(op: DaftOperator, r: np.ndarray) -> np.ndarray:
    """Time domain -> DAF domain."""
    return _check(op, r) @ op.forward.T
