import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from afdm_im.config import (
    BerRecord,
    ChannelConfig,
    ConfigError,
    FrameConfig,
    derive_bit_budget,
    full_diversity_lambda1,
    is_full_diversity,
)


@pytest.mark.parametrize(
    "n, m, M, g, expected",
    [
        (4, 1, 4, 1, (2, 2, 4, Fraction(1, 4))),
        (4, 1, 2, 16, (2, 1, 48, Fraction(1, 3))),
    ],
)
def test_bit_budget_examples(n, m, M, g, expected):
    assert derive_bit_budget(n, m, M, g) == expected


def test_bit_budget_rejects_no_index_freedom():
    with pytest.raises(ConfigError):
        derive_bit_budget(2, 2, 2, 1)


def test_bit_budget_degenerate_allowed_for_plain_schemes():
    assert derive_bit_budget(4, 4, 2, 1, allow_degenerate=True) == (0, 4, 4, Fraction(1))


@pytest.mark.parametrize("M", [0, 1, 3, 6])
def test_bad_psk_order(M):
    with pytest.raises(ConfigError):
        derive_bit_budget(4, 1, M, 1)


@given(n=st.integers(2, 12), data=st.data(), logM=st.integers(1, 4), g=st.integers(1, 8))
def test_bit_budget_properties(n, data, logM, g):
    m = data.draw(st.integers(1, n - 1))
    p1, p2, p, Eb = derive_bit_budget(n, m, 2**logM, g)
    assert 2**p1 <= math.comb(n, m) < 2 ** (p1 + 1)
    assert p2 == m * logM and p == g * (p1 + p2)
    assert Eb * p == g * m


@pytest.mark.parametrize(
    "N, amax, expected", [(4, 1, Fraction(3, 8)), (64, 3, Fraction(7, 128)), (4, 0, Fraction(1, 8))]
)
def test_full_diversity_lambda1(N, amax, expected):
    assert full_diversity_lambda1(N, amax) == float(expected)


@pytest.mark.parametrize(
    "n, g, l_max, amax, lam1, expected",
    [
        (4, 1, 0, 1, 3 / 8, True),
        (4, 1, 1, 1, 3 / 8, False),
        (4, 16, 2, 3, 7 / 128, True),
    ],
)
def test_is_full_diversity(n, g, l_max, amax, lam1, expected):
    frame = FrameConfig(n, 1, g, 4, lambda1=lam1)
    assert is_full_diversity(frame, ChannelConfig(1, l_max, amax)) is expected


def test_full_diversity_boundary_is_inclusive():
    # P_max = 3*1 = 3 on N = 3 subsymbols
    frame = FrameConfig(3, 1, 1, 2, lambda1=full_diversity_lambda1(3, 1))
    assert is_full_diversity(frame, ChannelConfig(1, 0, 1))


def test_full_diversity_needs_matching_lambda1():
    frame = FrameConfig(4, 1, 1, 4, lambda1=0.0)
    assert not is_full_diversity(frame, ChannelConfig(1, 0, 1))


@given(N=st.integers(2, 64), l_max=st.integers(0, 4), amax=st.integers(0, 4), dl=st.integers(0, 2), da=st.integers(0, 2))
def test_full_diversity_monotone(N, l_max, amax, dl, da):
    def fd(l, a):
        frame = FrameConfig(N, 1, 1, 2, lambda1=full_diversity_lambda1(N, a))
        return is_full_diversity(frame, ChannelConfig(1, l, a))

    if fd(l_max + dl, amax + da):
        assert fd(l_max, amax)


def test_channel_config_invariants():
    assert ChannelConfig(21, 2, 3).P_max == 21
    with pytest.raises(ConfigError):
        ChannelConfig(4, 0, 1)
    with pytest.raises(ConfigError):
        ChannelConfig(2, 0, 1, rho=1.5)


def test_frame_config_invariants():
    cfg = FrameConfig(4, 1, 16, 4)
    assert cfg.N == 64 and cfg.p == 64 and cfg.Eb == Fraction(1, 4)
    with pytest.raises(ConfigError):
        FrameConfig(4, 2, 1, 4, index_modulation=False)


def test_ber_record_partition():
    frame = FrameConfig(4, 1, 2, 4)
    rec = BerRecord.from_counts(10.0, 1000, 7, 13, frame, seed=3)
    assert rec.bit_errors_total == 20
    assert rec.ber_index == 7 / (1000 * 2 * 2)
    assert rec.ber_mod == 13 / (1000 * 2 * 2)
    recon = (frame.p1 * rec.ber_index + frame.p2 * rec.ber_mod) / (frame.p1 + frame.p2)
    assert math.isclose(recon, rec.ber_total, rel_tol=1e-15)
