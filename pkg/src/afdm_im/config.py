"""Configuration records and bit bookkeeping shared by the whole transceiver."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction


class Grouping(str, Enum):
    LOCALIZED = "localized"
    DISTRIBUTED = "distributed"


# Any irrational number works for the chirp-2 parameter; this one is fixed for reproducibility.
DEFAULT_LAMBDA2 = 1.0 / (2.0 * math.pi)


class CsiError(str, Enum):
    """How ``rho`` enters the receiver's gain estimate.

    ``amplitude``: ``sqrt(1 - rho**2) h + rho phi`` (error variance ``rho**2``).
    ``variance``: ``sqrt(1 - rho) h + sqrt(rho) phi`` (error variance ``rho``).
    """

    AMPLITUDE = "amplitude"
    VARIANCE = "variance"


class ConfigError(ValueError):
    """Raised when a configuration violates its invariants."""


def _is_power_of_two(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


def derive_bit_budget(
    n: int, m: int, M: int, g: int, *, allow_degenerate: bool = False
) -> tuple[int, int, int, Fraction]:
    """Return ``(p1, p2, p, Eb)`` for a group layout.

    ``p1`` index bits and ``p2`` modulated bits per group, ``p`` bits per frame,
    and the energy per bit ``Eb = g*m/p`` as an exact fraction.

    ``allow_degenerate`` admits ``C(n, m) == 1`` (``p1 == 0``), which is how the
    plain AFDM/OFDM schemes without index modulation pass through the codec.
    """
    if not (1 <= m <= n) or g < 1:
        raise ConfigError(f"need 1 <= m <= n and g >= 1, got n={n}, m={m}, g={g}")
    if M < 2 or not _is_power_of_two(M):
        raise ConfigError(f"PSK order must be a power of two >= 2, got M={M}")
    combos = math.comb(n, m)
    if combos < 2 and not allow_degenerate:
        raise ConfigError(f"C({n},{m}) = {combos}: no index bits can be carried")
    p1 = combos.bit_length() - 1  # floor(log2(C(n, m)))
    p2 = m * (M.bit_length() - 1)
    p = g * (p1 + p2)
    return p1, p2, p, Fraction(g * m, p)


def full_diversity_lambda1(N: int, alpha_max: int) -> float:
    """Chirp-1 parameter that separates all integer Doppler taps: (2*alpha_max + 1) / (2N)."""
    return (2 * alpha_max + 1) / (2 * N)


@dataclass(frozen=True)
class FrameConfig:
    """Modulation-side parameters of one frame.

    ``index_modulation=False`` selects the plain scheme: every subsymbol is
    active (``m == n``) and no index bits are sent.
    """

    n: int
    m: int
    g: int
    M: int
    grouping: Grouping = Grouping.LOCALIZED
    lambda1: float = 0.0
    lambda2: float = DEFAULT_LAMBDA2
    index_modulation: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "grouping", Grouping(self.grouping))
        if not self.index_modulation and self.m != self.n:
            raise ConfigError("schemes without index modulation need m == n")
        derive_bit_budget(
            self.n, self.m, self.M, self.g, allow_degenerate=not self.index_modulation
        )

    @property
    def N(self) -> int:
        return self.n * self.g

    @property
    def budget(self) -> tuple[int, int, int, Fraction]:
        return derive_bit_budget(
            self.n, self.m, self.M, self.g, allow_degenerate=not self.index_modulation
        )

    @property
    def p1(self) -> int:
        return self.budget[0]

    @property
    def p2(self) -> int:
        return self.budget[1]

    @property
    def p(self) -> int:
        return self.budget[2]

    @property
    def Eb(self) -> Fraction:
        return self.budget[3]

    @property
    def bits_per_symbol(self) -> int:
        return self.M.bit_length() - 1


@dataclass(frozen=True)
class ChannelConfig:
    """Statistical description of the delay-Doppler channel."""

    P: int
    l_max: int
    alpha_max: int
    rho: float = 0.0
    csi_error: CsiError = CsiError.AMPLITUDE

    def __post_init__(self) -> None:
        object.__setattr__(self, "csi_error", CsiError(self.csi_error))
        if self.l_max < 0 or self.alpha_max < 0:
            raise ConfigError("l_max and alpha_max must be nonnegative")
        if not 1 <= self.P <= self.P_max:
            raise ConfigError(f"need 1 <= P <= P_max={self.P_max}, got P={self.P}")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho must lie in [0, 1], got {self.rho}")

    @property
    def P_max(self) -> int:
        return (self.l_max + 1) * (2 * self.alpha_max + 1)


def is_full_diversity(frame: FrameConfig, chan: ChannelConfig) -> bool:
    """True when all paths land on distinct DAF shifts.

    ``P_max == N`` is accepted (the comparison is ``<=``).
    """
    lam = full_diversity_lambda1(frame.N, chan.alpha_max)
    return chan.P_max <= frame.N and math.isclose(frame.lambda1, lam, rel_tol=1e-12, abs_tol=0.0)


@dataclass
class BerRecord:
    snr_db: float
    trials: int
    bit_errors_total: int
    bit_errors_index: int
    bit_errors_mod: int
    ber_total: float
    ber_index: float
    ber_mod: float
    seed: int
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_counts(
        cls,
        snr_db: float,
        trials: int,
        errors_index: int,
        errors_mod: int,
        frame: FrameConfig,
        seed: int,
    ) -> "BerRecord":
        n_index = trials * frame.g * frame.p1
        n_mod = trials * frame.g * frame.p2
        total = errors_index + errors_mod
        return cls(
            snr_db=snr_db,
            trials=trials,
            bit_errors_total=total,
            bit_errors_index=errors_index,
            bit_errors_mod=errors_mod,
            ber_total=total / (n_index + n_mod) if trials else math.nan,
            ber_index=errors_index / n_index if n_index else math.nan,
            ber_mod=errors_mod / n_mod if n_mod else math.nan,
            seed=seed,
        )
