"""Reader for the INI-style sweep description files.

Grammar (keys are case-sensitive)::

    [frame]
    scheme = afdm_im            ; afdm_im | afdm | ofdm | ofdm_im
    n = 4
    m = 1
    g = 1
    M = 4
    grouping = localized        ; localized | distributed
    lambda1 = 0.375             ; optional, AFDM variants only
    lambda2 = 0.159             ; optional, AFDM variants only

    [channel]
    P = 3
    l_max = 0
    alpha_max = 1
    rho = 0                     ; optional
    csi_error = amplitude       ; optional: amplitude | variance

    [sweep]
    detector = ml               ; ml | mmse_ml | mmse_hard
    snr_db = 0:5:25             ; start:step:stop (inclusive) or a comma list
    min_trials = 10000
    min_bit_errors = 100
    max_trials = 10000000
    seed = 0
    cpp_check = false
    batch_size = 4096           ; optional

    [scheme OFDM]               ; zero or more, used by ``compare``
    scheme = ofdm
    M = 2

A ``[scheme NAME]`` section may override any key of the three base sections.
"""

from __future__ import annotations

import configparser
from pathlib import Path

import numpy as np

from .config import ChannelConfig, ConfigError, CsiError
from .detectors import Detector
from .sim import Scheme, StopRule, SweepConfig, check_detector, make_frame

FRAME_KEYS = {"scheme", "n", "m", "g", "M", "grouping", "lambda1", "lambda2"}
CHANNEL_KEYS = {"P", "l_max", "alpha_max", "rho", "csi_error"}
SWEEP_KEYS = {
    "detector", "snr_db", "min_trials", "min_bit_errors", "max_trials",
    "seed", "cpp_check", "batch_size", "label",
}


def parse_snr_list(text: str) -> tuple[float, ...]:
    text = text.strip()
    if ":" in text:
        parts = [float(t) for t in text.split(":")]
        if len(parts) != 3 or parts[1] <= 0:
            raise ConfigError(f"snr range must be start:step:stop with step > 0, got {text!r}")
        start, step, stop = parts
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(round(start + k * step, 10)) for k in range(count))
    values = tuple(float(t) for t in text.split(",") if t.strip())
    if not values:
        raise ConfigError("empty snr_db list")
    return values


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def read_config(path: str | Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser.read(path)
    for section in ("frame", "channel", "sweep"):
        if not parser.has_section(section):
            raise ConfigError(f"{path}: missing [{section}] section")
    return parser


def scheme_sections(parser: configparser.ConfigParser) -> list[str]:
    return [s for s in parser.sections() if s.startswith("scheme ")]


def _merged(parser: configparser.ConfigParser, overrides: str | None) -> dict[str, str]:
    values: dict[str, str] = {}
    for section, allowed in (("frame", FRAME_KEYS), ("channel", CHANNEL_KEYS), ("sweep", SWEEP_KEYS)):
        for key, val in parser.items(section):
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[key] = val
    if overrides is not None:
        for key, val in parser.items(overrides):
            if key not in FRAME_KEYS | CHANNEL_KEYS | SWEEP_KEYS:
                raise ConfigError(f"unknown key {key!r} in [{overrides}]")
            values[key] = val
        values.setdefault("label", overrides.split(" ", 1)[1].strip())
    return values


def build_sweep(parser: configparser.ConfigParser, section: str | None = None) -> SweepConfig:
    """Sweep description from the base sections, optionally overlaid with a ``[scheme ...]`` section."""
    v = _merged(parser, section)

    def get(key, conv, default=None):
        if key not in v:
            if default is None:
                raise ConfigError(f"missing required key {key!r}")
            return default
        try:
            return conv(v[key])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key!r}: {v[key]!r}") from exc

    scheme = Scheme(get("scheme", str, "afdm_im"))
    alpha_max = get("alpha_max", int)
    frame = make_frame(
        scheme,
        n=get("n", int),
        m=get("m", int, 1),
        g=get("g", int, 1),
        M=get("M", int),
        alpha_max=alpha_max,
        grouping=get("grouping", str, "localized"),
        lambda1=float(v["lambda1"]) if "lambda1" in v else None,
        lambda2=float(v["lambda2"]) if "lambda2" in v else None,
    )
    chan = ChannelConfig(
        P=get("P", int),
        l_max=get("l_max", int),
        alpha_max=alpha_max,
        rho=get("rho", float, 0.0),
        csi_error=CsiError(get("csi_error", str, "amplitude")),
    )
    defaults = StopRule()
    stop = StopRule(
        get("min_trials", int, defaults.min_trials),
        get("min_bit_errors", int, defaults.min_bit_errors),
        get("max_trials", int, defaults.max_trials),
    )
    batch = get("batch_size", int, 0)
    cfg = SweepConfig(
        scheme=scheme,
        detector=Detector(get("detector", str, "ml")),
        frame=frame,
        channel=chan,
        snr_db_list=parse_snr_list(get("snr_db", str)),
        stop=stop,
        seed=get("seed", int, 0),
        cpp_check=get("cpp_check", _bool, False),
        batch_size=batch or None,
        label=v.get("label", scheme.value),
    )
    check_detector(cfg)
    return cfg


def load_sweep(path: str | Path) -> SweepConfig:
    return build_sweep(read_config(path))


def load_compare(path: str | Path) -> list[SweepConfig]:
    parser = read_config(path)
    sections = scheme_sections(parser)
    if not sections:
        return [build_sweep(parser)]
    return [build_sweep(parser, s) for s in sections]
