"""Command line entry point: ``afdm-im {sweep,theory,demo,compare}``."""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from contextlib import contextmanager
from dataclasses import replace

import numpy as np

from . import abep, channel, codec
from .config import ConfigError
from .configfile import load_compare, load_sweep
from .daft import build as build_daft
from .detectors import CodebookTooLargeError, Detector, detect_frame
from .sim import Scheme, SweepConfig, check_detector, make_frame, run_sweep, theory_curve, with_overrides

CSV_COLUMNS = [
    "snr_db",
    "trials",
    "bit_errors_total",
    "bit_errors_index",
    "bit_errors_mod",
    "ber_total",
    "ber_index",
    "ber_mod",
]

log = logging.getLogger("afdm_im")


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _row(rec) -> list:
    return [
        f"{rec.snr_db:g}",
        rec.trials,
        rec.bit_errors_total,
        rec.bit_errors_index,
        rec.bit_errors_mod,
        f"{rec.ber_total:.6e}",
        f"{rec.ber_index:.6e}",
        f"{rec.ber_mod:.6e}",
    ]


def _apply_overrides(cfg: SweepConfig, args) -> SweepConfig:
    kw = {"seed": args.seed, "rho": args.rho}
    if getattr(args, "detector", None):
        kw["detector"] = Detector(args.detector)
    if getattr(args, "scheme", None):
        scheme = Scheme(args.scheme)
        f = cfg.frame
        lam1 = f.lambda1 if scheme.chirped and cfg.scheme.chirped else None
        lam2 = f.lambda2 if scheme.chirped and cfg.scheme.chirped else None
        kw["scheme"] = scheme
        kw["frame"] = make_frame(scheme, f.n, f.m, f.g, f.M, cfg.channel.alpha_max, f.grouping, lam1, lam2)
        if not getattr(args, "detector", None) and cfg.detector is Detector.MMSE_HARD and scheme.index_modulation:
            kw["detector"] = Detector.MMSE_ML
    out = with_overrides(cfg, **kw)
    check_detector(out)
    return out


def cmd_sweep(args) -> int:
    cfg = _apply_overrides(load_sweep(args.config), args)
    result = run_sweep(cfg, workers=args.workers)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in result.records:
            w.writerow(_row(rec))
    return 0


def cmd_compare(args) -> int:
    cfgs = [_apply_overrides(c, args) for c in load_compare(args.config)]
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label"] + CSV_COLUMNS)
        for cfg in cfgs:
            for rec in run_sweep(cfg, workers=args.workers).records:
                w.writerow([cfg.label] + _row(rec))
    return 0


def cmd_theory(args) -> int:
    cfg = load_sweep(args.config)
    chan = cfg.channel if args.rho is None else replace(cfg.channel, rho=args.rho)
    curve = theory_curve(cfg.frame, chan, cfg.snr_db_list, args.mode, args.rho_exponent)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["snr_db", "abep"])
        for snr, val in curve:
            w.writerow([f"{snr:g}", f"{val:.6e}"])
    return 0


def _fmt(v: np.ndarray) -> str:
    return "[" + ", ".join(f"{z.real:+.3f}{z.imag:+.3f}j" for z in np.atleast_1d(v)) + "]"


def cmd_demo(args) -> int:
    cfg = _apply_overrides(load_sweep(args.config), args)
    frame, chan = cfg.frame, cfg.channel
    snr = args.snr if args.snr is not None else cfg.snr_db_list[-1]
    rng = np.random.default_rng(cfg.seed)
    bits = rng.integers(0, 2, frame.p).tolist()
    enc = codec.encode_frame(bits, frame)
    paths = channel.sample_paths(chan, rng)
    paths = replace(paths, gains_est=channel.corrupt_csi(paths.gains, chan.rho, rng, chan.csi_error))
    op = build_daft(frame.N, frame.lambda1, frame.lambda2)
    s = op.inverse @ enc.x
    N0 = channel.noise_variance(frame, snr)
    y = channel.time_domain_oracle(enc.x, paths, frame, chan.l_max, op)
    y = y + channel.complex_normal(rng, frame.N, N0)
    H_est = channel.effective_channel(paths, frame).H_est
    gamma = 10.0 ** (snr / 10.0)
    detector = cfg.detector
    if detector is Detector.ML and frame.p > 24:
        detector = Detector.MMSE_ML
    decided = detect_frame(y, H_est, frame, detector, gamma)
    errors = sum(a != b for a, b in zip(bits, decided))

    out = sys.stdout
    print(f"scheme {cfg.scheme.value}  detector {detector.value}  N={frame.N}  p={frame.p}  Eb/N0={snr:g} dB", file=out)
    print(f"bits      {''.join(map(str, bits))}", file=out)
    for i, grp in enumerate(enc.groups):
        print(f"group {i}: k={grp.combo_rank} active={list(grp.indices)} q={_fmt(np.array(grp.symbols))}", file=out)
    print(f"x         {_fmt(enc.x)}", file=out)
    print(f"s         {_fmt(s)}", file=out)
    for h, l, a in zip(paths.gains, paths.delays, paths.dopplers):
        print(f"path      l={l} alpha={a:+d} h={h:.3f}", file=out)
    print(f"y         {_fmt(y)}", file=out)
    print(f"decided   {''.join(map(str, decided))}  bit errors {errors}", file=out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="afdm-im", description="AFDM with index modulation: BER sweeps and bounds")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sim=True):
        p.add_argument("--config", required=True, help="sweep description file")
        p.add_argument("--out", help="CSV destination (default stdout)")
        p.add_argument("--rho", type=float, help="override the CSI error level")
        if sim:
            p.add_argument("--seed", type=int, help="override the master seed")
            p.add_argument("--workers", type=int, default=1)
            p.add_argument("--detector", choices=[d.value for d in Detector])
            p.add_argument("--scheme", choices=[s.value for s in Scheme])

    p = sub.add_parser("sweep", help="Monte-Carlo BER over the configured SNR list")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="run every [scheme ...] section and merge the CSVs")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("theory", help="union bound on the BER of joint ML detection")
    common(p, sim=False)
    p.add_argument("--mode", choices=[m.value for m in abep.PepMode], default="det_form")
    p.add_argument("--rho-exponent", type=int, choices=[1, 2], default=1)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("demo", help="trace a single frame through the link")
    common(p)
    p.add_argument("--snr", type=float, help="Eb/N0 in dB (default: last configured point)")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, CodebookTooLargeError, configparser.Error, ValueError, OSError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"afdm-im: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
