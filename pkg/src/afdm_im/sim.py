"""Monte-Carlo BER engine.

Frames are simulated in vectorized batches. Every batch draws, in order: group
labels, path gains over the delay-Doppler grid (and which pairs are active),
the CSI error, then the noise. A fresh channel is drawn for every frame.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import __version__, abep, channel, codec
from .config import (
    DEFAULT_LAMBDA2,
    BerRecord,
    ChannelConfig,
    ConfigError,
    FrameConfig,
    Grouping,
    full_diversity_lambda1,
)
from .daft import build as build_daft
from .detectors import Detector, build_codebook, detect_labels

log = logging.getLogger(__name__)


class Scheme(str, Enum):
    AFDM_IM = "afdm_im"
    AFDM = "afdm"
    OFDM = "ofdm"
    OFDM_IM = "ofdm_im"

    @property
    def index_modulation(self) -> bool:
        return self in (Scheme.AFDM_IM, Scheme.OFDM_IM)

    @property
    def chirped(self) -> bool:
        return self in (Scheme.AFDM_IM, Scheme.AFDM)


@dataclass(frozen=True)
class StopRule:
    min_trials: int = 10_000
    min_bit_errors: int = 100
    max_trials: int = 10_000_000

    def done(self, trials: int, errors: int) -> bool:
        if trials >= self.max_trials:
            return True
        return trials >= self.min_trials and errors >= self.min_bit_errors

    def split(self, workers: int) -> "StopRule":
        return StopRule(
            math.ceil(self.min_trials / workers),
            math.ceil(self.min_bit_errors / workers),
            math.ceil(self.max_trials / workers),
        )


@dataclass(frozen=True)
class SweepConfig:
    scheme: Scheme
    detector: Detector
    frame: FrameConfig
    channel: ChannelConfig
    snr_db_list: tuple[float, ...]
    stop: StopRule = StopRule()
    seed: int = 0
    cpp_check: bool = False
    batch_size: int | None = None
    label: str = ""


def make_frame(
    scheme: Scheme | str,
    n: int,
    m: int,
    g: int,
    M: int,
    alpha_max: int,
    grouping: Grouping | str = Grouping.LOCALIZED,
    lambda1: float | None = None,
    lambda2: float | None = None,
) -> FrameConfig:
    """Frame parameters with the scheme's constraints applied.

    OFDM variants zero both chirp parameters; plain (non-IM) variants activate
    every subsymbol. AFDM variants default ``lambda1`` to the full-diversity value.
    """
    scheme = Scheme(scheme)
    if not scheme.index_modulation:
        m = n
    if scheme.chirped:
        lam1 = full_diversity_lambda1(n * g, alpha_max) if lambda1 is None else lambda1
        lam2 = DEFAULT_LAMBDA2 if lambda2 is None else lambda2
    else:
        lam1 = lam2 = 0.0
    return FrameConfig(
        n, m, g, M, Grouping(grouping), lam1, lam2, index_modulation=scheme.index_modulation
    )


@dataclass
class SweepResult:
    records: list[BerRecord]
    meta: dict = field(default_factory=dict)


def _default_batch(frame: FrameConfig, detector: Detector) -> int:
    N = frame.N
    if detector is Detector.ML:
        return max(64, min(1 << 15, (1 << 20) // (N * (1 << frame.p))))
    return max(16, min(1 << 14, (1 << 19) // (N * N)))


def _cpp_check(frame: FrameConfig, chan: ChannelConfig, rng: np.random.Generator, frames: int = 4):
    op = build_daft(frame.N, frame.lambda1, frame.lambda2)
    for _ in range(frames):
        labels = rng.integers(0, 1 << (frame.p1 + frame.p2), (1, frame.g))
        x = codec.frames_from_labels(labels, frame)[0]
        paths = channel.sample_paths(chan, rng)
        y_td = channel.time_domain_oracle(x, paths, frame, chan.l_max, op)
        y_mm = channel.effective_channel(paths, frame).H_eff @ x
        err = np.linalg.norm(y_td - y_mm) / np.linalg.norm(x)
        if err > 1e-9:
            raise AssertionError(f"time-domain chain disagrees with the matrix model ({err:.2e})")


def simulate(
    cfg: SweepConfig, snr_db: float, rng: np.random.Generator, stop: StopRule
) -> tuple[int, int, int]:
    """Run frames until ``stop`` is met; returns ``(trials, index_errors, mod_errors)``."""
    frame, chan = cfg.frame, cfg.channel
    N, p2 = frame.N, frame.p2
    book = build_codebook(frame, joint=cfg.detector is Detector.ML)
    grid = channel.delay_doppler_grid(chan)
    H_grid = channel.subchannel_stack(frame, grid).reshape(len(grid), N * N)
    N0 = channel.noise_variance(frame, snr_db)
    gamma = 10.0 ** (snr_db / 10.0)
    n_labels = 1 << (frame.p1 + p2)
    mod_mask = (1 << p2) - 1
    batch = cfg.batch_size or _default_batch(frame, cfg.detector)

    trials = err_idx = err_mod = 0
    while not stop.done(trials, err_idx + err_mod):
        B = min(batch, stop.max_trials - trials)
        labels = rng.integers(0, n_labels, (B, frame.g))
        x = codec.frames_from_labels(labels, frame)
        h = channel.sample_grid_gains(chan, B, rng)
        h_est = channel.corrupt_grid_gains(h, chan.rho, rng, chan.csi_error)
        H = (h @ H_grid).reshape(B, N, N)
        H_est = H if h_est is h else (h_est @ H_grid).reshape(B, N, N)
        y = channel.transmit_daf_domain(x, H, N0, rng)
        decided = detect_labels(y, H_est, book, cfg.detector, gamma)
        diff = labels ^ decided
        err_idx += int(np.bitwise_count(diff >> p2).sum())
        err_mod += int(np.bitwise_count(diff & mod_mask).sum())
        trials += B
    return trials, err_idx, err_mod


def _worker(args):
    cfg, snr_db, point_index, worker_index, stop = args
    seq = np.random.SeedSequence(cfg.seed, spawn_key=(point_index, worker_index))
    return simulate(cfg, snr_db, np.random.default_rng(seq), stop)


def run_point(
    cfg: SweepConfig, snr_db: float, point_index: int = 0, workers: int = 1
) -> BerRecord:
    """BER at one Eb/N0. ``workers == 1`` is the bit-exact reproducibility reference."""
    if cfg.cpp_check:
        seq = np.random.SeedSequence(cfg.seed, spawn_key=(point_index, 1 << 30))
        _cpp_check(cfg.frame, cfg.channel, np.random.default_rng(seq))
    t0 = time.perf_counter()
    if workers <= 1:
        parts = [_worker((cfg, snr_db, point_index, 0, cfg.stop))]
    else:
        share = cfg.stop.split(workers)
        jobs = [(cfg, snr_db, point_index, w, share) for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_worker, jobs))
    trials, e_idx, e_mod = (sum(col) for col in zip(*parts))
    rec = BerRecord.from_counts(snr_db, trials, e_idx, e_mod, cfg.frame, cfg.seed)
    total = rec.bit_errors_total
    rec.meta = {
        "wall_time_s": time.perf_counter() - t0,
        "workers": workers,
        # binomial estimate: relative standard error ~ 1/sqrt(errors)
        "rel_std_error": 1.0 / math.sqrt(total) if total else math.inf,
    }
    log.info("%s snr=%.1f dB trials=%d ber=%.3e", cfg.label or cfg.scheme.value, snr_db, trials, rec.ber_total)
    return rec


def run_sweep(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    t0 = time.perf_counter()
    records = [run_point(cfg, snr, k, workers) for k, snr in enumerate(cfg.snr_db_list)]
    meta = {
        "label": cfg.label,
        "scheme": cfg.scheme.value,
        "detector": cfg.detector.value,
        "frame": cfg.frame,
        "channel": cfg.channel,
        "seed": cfg.seed,
        "workers": workers,
        "wall_time_s": time.perf_counter() - t0,
        "version": __version__,
    }
    return SweepResult(records, meta)


def theory_curve(
    frame: FrameConfig,
    chan: ChannelConfig,
    snr_db_list,
    mode: abep.PepMode | str = abep.PepMode.DET_FORM,
    rho_exponent: int = 1,
) -> list[tuple[float, float]]:
    calc = abep.BoundCalculator(frame, chan)
    return [(float(s), calc.bound(s, mode, rho_exponent=rho_exponent)) for s in snr_db_list]


def with_overrides(cfg: SweepConfig, **kw) -> SweepConfig:
    """Copy of ``cfg`` with sweep-level fields replaced; ``rho`` is routed to the channel."""
    if "rho" in kw:
        rho = kw.pop("rho")
        if rho is not None:
            kw["channel"] = replace(cfg.channel, rho=rho)
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})


def check_detector(cfg: SweepConfig) -> None:
    if cfg.detector is Detector.MMSE_HARD and cfg.frame.index_modulation:
        raise ConfigError("mmse_hard only applies to schemes without index modulation")
    if cfg.detector is Detector.ML and cfg.frame.p > 24:
        raise ConfigError(f"joint ML with p={cfg.frame.p} bits is out of reach; use mmse_ml")
