import math

import numpy as np
import pytest

from afdm_im import abep, channel, codec
from afdm_im.abep import PepMode
from afdm_im.config import ChannelConfig, FrameConfig, full_diversity_lambda1

from oracles import pep_sampling, q_function

FIG3 = FrameConfig(4, 1, 1, 4, lambda1=3 / 8)
FIG3_CHAN = ChannelConfig(3, 0, 1)
FIG6A_CHAN = ChannelConfig(2, 0, 1)
FIG6B_CHAN = ChannelConfig(2, 1, 1)


def fig3_paths(k=0, chan=FIG3_CHAN):
    return channel.subchannel_stack(FIG3, channel.placements(chan)[k])


def test_q_approx_examples():
    assert abep.q_approx(0.0) == pytest.approx(1 / 3, abs=1e-15)
    assert abep.q_approx(3.0) == pytest.approx(math.exp(-4.5) / 12 + math.exp(-6) / 4, rel=1e-14)
    assert q_function(3.0) == pytest.approx(1.35e-3, rel=0.01)


def test_q_approx_error_profile():
    x = np.linspace(0, 10, 200001)
    err = np.abs(abep.q_approx(x) - q_function(x))
    # worst case sits at the origin: Q(0) = 1/2 against 1/12 + 1/4
    assert err.argmax() == 0 and err[0] == pytest.approx(1 / 6, rel=1e-12)
    assert err[x >= 0.5].max() < 0.025
    assert err[x >= 1.5].max() < 0.02
    np.testing.assert_allclose(abep.q_exact(x), q_function(x), rtol=1e-14)


def test_upsilon_columns_and_linearity():
    H = fig3_paths()
    book = codec.frame_codebook(FIG3)
    U = abep.upsilon(book[3], H)
    assert U.shape == (4, 3)
    for i in range(3):
        np.testing.assert_allclose(U[:, i], H[i] @ book[3], atol=1e-15)
    np.testing.assert_allclose(
        abep.upsilon(book[3], H) - abep.upsilon(book[9], H), abep.upsilon(book[3] - book[9], H), atol=1e-14
    )
    x = np.array([1, 2j, 0, -1])
    np.testing.assert_array_equal(abep.upsilon(x, np.eye(4)[None])[:, 0], x)


@pytest.mark.parametrize("chan", [FIG3_CHAN, FIG6A_CHAN, FIG6B_CHAN])
def test_upsilon_energy_is_constant(chan):
    book = codec.frame_codebook(FIG3)
    for pairs in channel.placements(chan):
        H = channel.subchannel_stack(FIG3, pairs)
        for x in book:
            e = np.sum(np.abs(abep.upsilon(x, H)) ** 2)
            assert e == pytest.approx(chan.P * FIG3.g * FIG3.m, rel=1e-12)


def test_scalar_bpsk_example():
    N0 = 0.3
    got = abep.pep_unconditional(np.array([1.0]), np.array([-1.0]), np.eye(1)[None], N0)
    q1, q2 = 1 / (4 * N0), 1 / (3 * N0)
    assert got == pytest.approx((1 / 12) / (1 + 4 * q1) + (1 / 4) / (1 + 4 * q2), rel=1e-14)


def test_perfect_csi_weights():
    q1, q2 = abep.exponent_weights(0.02, 0.0, 12.0)
    assert q1 == 1 / (4 * 0.02) and q2 == 1 / (3 * 0.02)


def test_rho_exponent_switch():
    a = abep.exponent_weights(0.02, 0.1, 12.0, rho_exponent=1)
    b = abep.exponent_weights(0.02, 0.1, 12.0, rho_exponent=2)
    assert a[0] == pytest.approx(1 / (4 * (0.02 + 1.2)))
    assert b[0] == pytest.approx(1 / (4 * (0.02 + 0.12)))
    with pytest.raises(ValueError):
        abep.exponent_weights(0.0, 0.0, 12.0)


def test_csi_covariance():
    np.testing.assert_allclose(abep.csi_covariance(3, 0.0), np.eye(3) / 3)
    assert abep.csi_variance(3, 0.01) == pytest.approx((1 - 1e-4) / 3 + 1e-4)
    assert abep.csi_variance(3, 0.01, "variance") == pytest.approx(0.99 / 3 + 0.01)


def test_pair_symmetry_and_range():
    book = codec.frame_codebook(FIG3)
    for k in range(len(channel.placements(FIG6B_CHAN))):
        H = fig3_paths(k, FIG6B_CHAN)
        for i in range(16):
            for j in range(i + 1, 16):
                for rho in (0.0, 0.01):
                    a = abep.pep_unconditional(book[i], book[j], H, 0.01, rho)
                    b = abep.pep_unconditional(book[j], book[i], H, 0.01, rho)
                    assert a == pytest.approx(b, rel=1e-12)
                    assert 0 < a <= 1 / 3


def test_identical_codewords_rejected():
    book = codec.frame_codebook(FIG3)
    with pytest.raises(ValueError):
        abep.pep_unconditional(book[2], book[2], fig3_paths(), 0.1)


def test_small_and_large_gram_share_eigenvalues():
    book = codec.frame_codebook(FIG3)
    for chan in (FIG3_CHAN, FIG6B_CHAN):
        H = fig3_paths(0, chan)
        for i, j in [(0, 1), (0, 5), (3, 12), (7, 8)]:
            term = abep.pairwise_term(book[i], book[j], H)
            big = np.linalg.eigvalsh(term.delta @ term.delta.conj().T)
            big_nz = np.sort(big[big > 1e-9])
            small_nz = np.sort(term.eigenvalues[term.eigenvalues > 1e-9])
            np.testing.assert_allclose(big_nz, small_nz, atol=1e-9)


def test_high_snr_form_gap_per_pair():
    book = codec.frame_codebook(FIG3)
    H = fig3_paths()
    for snr in (30, 35, 40):
        N0 = channel.noise_variance(FIG3, snr)
        q1, q2 = 1 / (4 * N0), 1 / (3 * N0)
        for i in range(16):
            for j in range(16):
                if i == j:
                    continue
                d = abep.pep_unconditional(book[i], book[j], H, N0, mode=PepMode.DET_FORM)
                h = abep.pep_unconditional(book[i], book[j], H, N0, mode=PepMode.HIGH_SNR)
                kappa = abep.pairwise_term(book[i], book[j], H).eigenvalues
                expected = (1 / 12) / np.prod(q1 * kappa / 3) + (1 / 4) / np.prod(q2 * kappa / 3)
                assert h == pytest.approx(expected, rel=1e-10)
                assert h >= d
                if kappa.min() > 0.4 or snr >= 40:
                    assert (h - d) / d < 0.05


def test_high_snr_form_gap_on_bound():
    calc = abep.BoundCalculator(FIG3, FIG3_CHAN)
    gaps = [(calc.bound(s, PepMode.HIGH_SNR) - calc.bound(s)) / calc.bound(s) for s in (30, 35, 40, 50)]
    assert all(a > b > 0 for a, b in zip(gaps, gaps[1:]))
    assert gaps[1] < 0.05


def test_bound_equals_brute_force_sum():
    calc = abep.BoundCalculator(FIG3, FIG6B_CHAN)
    book = codec.frame_codebook(FIG3)
    for snr in (5.0, 20.0):
        N0 = channel.noise_variance(FIG3, snr)
        total = 0.0
        for pairs in channel.placements(FIG6B_CHAN):
            H = channel.subchannel_stack(FIG3, pairs)
            acc = 0.0
            for i in range(16):
                for j in range(16):
                    if i != j:
                        acc += abep.pep_unconditional(book[i], book[j], H, N0) * bin(i ^ j).count("1")
            total += acc * (1 / (16 * 4))
        assert calc.bound(snr) == total / 15


def test_bound_monotone_and_floor():
    calc = abep.BoundCalculator(FIG3, FIG3_CHAN)
    vals = [calc.bound(s) for s in range(0, 45, 5)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    floor = [calc.bound(s, rho=0.01) for s in (60, 80, 100)]
    assert floor[0] > 1e-4
    assert floor[2] == pytest.approx(floor[1], rel=1e-3)
    assert calc.bound(80, rho=0.005) < floor[1]


def test_bound_guard():
    with pytest.raises(ValueError):
        abep.BoundCalculator(FrameConfig(4, 1, 5, 4, lambda1=full_diversity_lambda1(20, 1)), FIG3_CHAN)


@pytest.mark.parametrize("i, j", [(0, 1), (0, 5), (3, 12)])
@pytest.mark.parametrize("snr", [15, 20, 25])
def test_det_form_matches_sampled_integrand(i, j, snr):
    # importance-sampled average of the two-exponential conditional PEP
    book = codec.frame_codebook(FIG3)
    H = fig3_paths()
    N0 = channel.noise_variance(FIG3, snr)
    term = abep.pairwise_term(book[i], book[j], H)
    rng = np.random.default_rng(100 * i + j + snr)
    mc = pep_sampling(term.delta, N0, 0.0, 3.0, 1 / 3, 100_000, rng, proposal_var=min(1 / 3, 8 * N0))
    assert mc == pytest.approx(abep.pep_unconditional(book[i], book[j], H, N0), rel=0.1)


def test_det_form_matches_sampled_integrand_with_csi_error():
    book = codec.frame_codebook(FIG3)
    H = fig3_paths()
    N0, rho = channel.noise_variance(FIG3, 10.0), 0.01
    term = abep.pairwise_term(book[0], book[5], H)
    psi = abep.csi_variance(3, rho)
    mc = pep_sampling(term.delta, N0, rho, 3.0, psi, 100_000, np.random.default_rng(5))
    assert mc == pytest.approx(abep.pep_unconditional(book[0], book[5], H, N0, rho), rel=0.1)


def test_rank_scan_full_diversity():
    s = abep.rank_scan(FIG3, FIG3_CHAN)
    assert s.min_rank_index == 3 and s.min_rank_mod == 3
    s = abep.rank_scan(FIG3, FIG6A_CHAN)
    assert s.min_rank_index == 2 and s.min_rank_mod == 2
    assert s.fraction_deficient_mod == 0.0


def test_rank_scan_overlapped_grid():
    s = abep.rank_scan(FIG3, FIG6B_CHAN)
    assert s.min_rank_mod == 1
    assert s.min_rank_index == 2
    assert s.fraction_deficient_mod == pytest.approx(2 / 15)
    assert s.fraction_deficient_index == 0.0
