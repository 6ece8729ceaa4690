"""Experiment configuration files.

The format is INI (``configparser``) with these sections; every key not
listed is rejected.  ``auto`` selects the documented default.

.. code-block:: ini

    [experiment]
    schema = 1            ; format version, must be 1
    name = table1

    [pn]
    degree = 11           ; 5..12
    taps = auto           ; tap mask, e.g. 0x500, or auto for the built-in one
    seed = 1              ; nonzero initial register state

    [rates]
    alpha_hz = 1e9        ; transmit chip rate
    beta_hz = 0.995e9     ; replica chip rate, below alpha

    [sim]
    oversampling = 8      ; samples per alpha chip, >= 4
    periods = auto        ; transmitted PN periods; auto = minimum needed
    rng_seed = 0          ; root of every random stream

    [channel]
    taps =                ; one path per line: delay_ns gain_re gain_im
        0.0 1.0 0.0
        10.0 0.5 0.0
    snr_db = 30           ; or noise_density = ...; omit both for no noise

    [correlator]
    lpf_bandwidth_hz = auto   ; auto = (alpha - beta) / 10
    threshold_db = 20
    smooth_chips = 0.25

    [outputs]
    dir = out
    formats = csv, json
    points_per_chip = 8   ; PDP rows written per chip of delay

A power-table override uses a separate file with one section per sub-unit
(keys ``rails`` in volts, ``standby_ma``, ``active_ma``) and an optional
``[supply]`` section (``input_v``, ``overhead_ma``, ``measured_total_ma``).
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

from .channel import MultipathChannel
from .correlator import DEFAULT_SMOOTH_CHIPS, SlideParams
from .errors import (
    AliasingRiskError,
    ConfigError,
    InvalidDegreeError,
    InvalidInputError,
    InvalidRatesError,
    InvalidTapsError,
    NonMaximalTapsError,
    PreconditionError,
    SounderError,
)
from .peripherals import PowerEntry, PowerTable
from .pn import LfsrConfig, generate_pn

SCHEMA_VERSION = 1
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class PnSpec:
    degree: int
    taps: Optional[int] = None
    seed: int = 1


@dataclass(frozen=True)
class RatesSpec:
    alpha_hz: float
    beta_hz: float


@dataclass(frozen=True)
class SimSpec:
    oversampling: int = 8
    periods: Optional[int] = None
    rng_seed: int = 0


@dataclass(frozen=True)
class ChannelSpec:
    taps: Tuple[Tuple[float, float, float], ...] = ((0.0, 1.0, 0.0),)
    snr_db: Optional[float] = None
    noise_density: Optional[float] = None

    def path_list(self):
        return tuple((d * 1e-9, complex(re, im)) for d, re, im in self.taps)


@dataclass(frozen=True)
class CorrelatorSpec:
    lpf_bandwidth_hz: Optional[float] = None
    threshold_db: float = 20.0
    smooth_chips: float = DEFAULT_SMOOTH_CHIPS


@dataclass(frozen=True)
class OutputsSpec:
    dir: str = "out"
    formats: Tuple[str, ...] = FORMATS
    points_per_chip: int = 8


@dataclass(frozen=True)
class ExperimentConfig:
    pn: PnSpec
    rates: RatesSpec
    sim: SimSpec = field(default_factory=SimSpec)
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    correlator: CorrelatorSpec = field(default_factory=CorrelatorSpec)
    outputs: OutputsSpec = field(default_factory=OutputsSpec)
    name: str = "experiment"
    schema: int = SCHEMA_VERSION

    def lfsr(self) -> LfsrConfig:
        return LfsrConfig(self.pn.degree, self.pn.taps, self.pn.seed)

    def slide_params(self) -> SlideParams:
        return SlideParams(
            self.rates.alpha_hz, self.rates.beta_hz, self.lfsr(), self.correlator.lpf_bandwidth_hz
        )

    def warmup_periods(self) -> int:
        """Leading PN periods discarded so every path has arrived."""
        pn_samples = self.lfsr().length * self.sim.oversampling
        fs = self.rates.alpha_hz * self.sim.oversampling
        max_delay = max(round(d * 1e-9 * fs) for d, _, _ in self.channel.taps)
        return max(1, math.ceil(max_delay / pn_samples))

    def required_periods(self) -> int:
        pn_samples = self.lfsr().length * self.sim.oversampling
        window = self.slide_params().slide_samples(self.rates.alpha_hz * self.sim.oversampling)
        return self.warmup_periods() + math.ceil(window / pn_samples)

    def tx_periods(self) -> int:
        return self.sim.periods if self.sim.periods is not None else self.required_periods()


_KEYS = {
    "experiment": ("schema", "name"),
    "pn": ("degree", "taps", "seed"),
    "rates": ("alpha_hz", "beta_hz"),
    "sim": ("oversampling", "periods", "rng_seed"),
    "channel": ("taps", "snr_db", "noise_density"),
    "correlator": ("lpf_bandwidth_hz", "threshold_db", "smooth_chips"),
    "outputs": ("dir", "formats", "points_per_chip"),
}
_REQUIRED = {"pn": ("degree",), "rates": ("alpha_hz", "beta_hz")}


class _Section:
    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self.items = dict(parser.items(name)) if parser.has_section(name) else {}

    def _raw(self, key):
        value = self.items.get(key)
        if value is None or value.strip().lower() in ("", "auto"):
            return None
        return value.strip()

    def _convert(self, key, func, default):
        raw = self._raw(key)
        if raw is None:
            return default
        try:
            return func(raw)
        except ValueError as exc:
            raise ConfigError(f"{self.name}.{key}", f"cannot parse {raw!r}: {exc}") from None

    def int(self, key, default=None):
        return self._convert(key, lambda s: int(s, 0), default)

    def float(self, key, default=None):
        def parse(s):
            v = float(s)
            if not math.isfinite(v):
                raise ValueError("not finite")
            return v

        return self._convert(key, parse, default)

    def str(self, key, default=None):
        raw = self._raw(key)
        return default if raw is None else raw


def _parse_taps(text: Optional[str]):
    if text is None:
        return ChannelSpec().taps
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ConfigError(
                "channel.taps", f"row {lineno} needs 'delay_ns gain_re gain_im', got {line.strip()!r}"
            )
        try:
            rows.append(tuple(float(f) for f in fields))
        except ValueError:
            raise ConfigError("channel.taps", f"row {lineno} is not numeric: {line.strip()!r}") from None
    if not rows:
        raise ConfigError("channel.taps", "at least one path is required")
    return tuple(rows)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text."""
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=(";", "#"), empty_lines_in_values=False
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from None
    for section in parser.sections():
        if section not in _KEYS:
            raise ConfigError(section, "unknown section")
        for key in parser.options(section):
            if key not in _KEYS[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
    for section, keys in _REQUIRED.items():
        for key in keys:
            if _Section(parser, section)._raw(key) is None:
                raise ConfigError(f"{section}.{key}", "required key missing")

    exp = _Section(parser, "experiment")
    pn = _Section(parser, "pn")
    rates = _Section(parser, "rates")
    sim = _Section(parser, "sim")
    chan = _Section(parser, "channel")
    corr = _Section(parser, "correlator")
    out = _Section(parser, "outputs")

    formats = out.str("formats")
    cfg = ExperimentConfig(
        name=exp.str("name", "experiment"),
        schema=exp.int("schema", SCHEMA_VERSION),
        pn=PnSpec(pn.int("degree"), pn.int("taps"), pn.int("seed", 1)),
        rates=RatesSpec(rates.float("alpha_hz"), rates.float("beta_hz")),
        sim=SimSpec(sim.int("oversampling", 8), sim.int("periods"), sim.int("rng_seed", 0)),
        channel=ChannelSpec(
            _parse_taps(chan.items.get("taps")),
            chan.float("snr_db"),
            chan.float("noise_density"),
        ),
        correlator=CorrelatorSpec(
            corr.float("lpf_bandwidth_hz"),
            corr.float("threshold_db", 20.0),
            corr.float("smooth_chips", DEFAULT_SMOOTH_CHIPS),
        ),
        outputs=OutputsSpec(
            out.str("dir", "out"),
            tuple(f.strip() for f in formats.split(",")) if formats else FORMATS,
            out.int("points_per_chip", 8),
        ),
    )
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def validate(cfg: ExperimentConfig) -> None:
    """Re-check every embedded invariant, naming the offending key."""
    if cfg.schema != SCHEMA_VERSION:
        raise ConfigError("experiment.schema", f"unsupported version {cfg.schema}")
    try:
        lfsr = cfg.lfsr()
    except InvalidDegreeError as exc:
        raise ConfigError("pn.degree", str(exc)) from None
    except InvalidTapsError as exc:
        raise ConfigError("pn.taps", str(exc)) from None
    except InvalidInputError as exc:
        raise ConfigError("pn.seed", str(exc)) from None
    try:
        generate_pn(lfsr)
    except NonMaximalTapsError as exc:
        raise ConfigError("pn.taps", str(exc)) from None
    try:
        cfg.slide_params()
    except InvalidRatesError as exc:
        key = "rates.alpha_hz" if not cfg.rates.alpha_hz > 0 else "rates.beta_hz"
        raise ConfigError(key, str(exc)) from None
    except PreconditionError as exc:
        raise ConfigError("correlator.lpf_bandwidth_hz", str(exc)) from None
    if cfg.sim.oversampling < 4:
        raise ConfigError("sim.oversampling", str(AliasingRiskError(
            f"oversampling {cfg.sim.oversampling} < 4 risks aliasing")))
    if not 0 <= cfg.sim.rng_seed < 2**64:
        raise ConfigError("sim.rng_seed", "must be an unsigned 64-bit integer")
    if cfg.channel.snr_db is not None and cfg.channel.noise_density is not None:
        raise ConfigError("channel.noise_density", "give snr_db or noise_density, not both")
    try:
        MultipathChannel(cfg.channel.path_list(), cfg.channel.noise_density or 0.0)
    except SounderError as exc:
        key = "channel.noise_density" if "noise" in str(exc) else "channel.taps"
        raise ConfigError(key, str(exc)) from None
    if cfg.sim.periods is not None and cfg.sim.periods < cfg.required_periods():
        raise ConfigError(
            "sim.periods",
            f"{cfg.sim.periods} periods cannot fill one slide period; need {cfg.required_periods()}",
        )
    bad = [f for f in cfg.outputs.formats if f not in FORMATS]
    if bad:
        raise ConfigError("outputs.formats", f"unknown format(s) {bad}; choose from {FORMATS}")
    if cfg.outputs.points_per_chip < 1:
        raise ConfigError("outputs.points_per_chip", "must be >= 1")
    if not cfg.correlator.threshold_db > 0:
        raise ConfigError("correlator.threshold_db", "must be positive")
    if not cfg.correlator.smooth_chips > 0:
        raise ConfigError("correlator.smooth_chips", "must be positive")


def _fmt(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize to text that :func:`parse_config` reads back to an equal config."""
    taps_rows = "\n".join(
        f"    {_fmt(float(d))} {_fmt(float(re))} {_fmt(float(im))}" for d, re, im in cfg.channel.taps
    )
    lines = [
        "[experiment]",
        f"schema = {cfg.schema}",
        f"name = {cfg.name}",
        "",
        "[pn]",
        f"degree = {cfg.pn.degree}",
        f"taps = {'auto' if cfg.pn.taps is None else hex(cfg.pn.taps)}",
        f"seed = {cfg.pn.seed}",
        "",
        "[rates]",
        f"alpha_hz = {_fmt(float(cfg.rates.alpha_hz))}",
        f"beta_hz = {_fmt(float(cfg.rates.beta_hz))}",
        "",
        "[sim]",
        f"oversampling = {cfg.sim.oversampling}",
        f"periods = {_fmt(cfg.sim.periods)}",
        f"rng_seed = {cfg.sim.rng_seed}",
        "",
        "[channel]",
        "taps =",
        taps_rows,
    ]
    if cfg.channel.snr_db is not None:
        lines.append(f"snr_db = {_fmt(float(cfg.channel.snr_db))}")
    if cfg.channel.noise_density is not None:
        lines.append(f"noise_density = {_fmt(float(cfg.channel.noise_density))}")
    lpf = cfg.correlator.lpf_bandwidth_hz
    lines += [
        "",
        "[correlator]",
        f"lpf_bandwidth_hz = {_fmt(None if lpf is None else float(lpf))}",
        f"threshold_db = {_fmt(float(cfg.correlator.threshold_db))}",
        f"smooth_chips = {_fmt(float(cfg.correlator.smooth_chips))}",
        "",
        "[outputs]",
        f"dir = {cfg.outputs.dir}",
        f"formats = {', '.join(cfg.outputs.formats)}",
        f"points_per_chip = {cfg.outputs.points_per_chip}",
        "",
    ]
    return "\n".join(lines)


def parse_power_table(text: str, base: Optional[PowerTable] = None) -> PowerTable:
    """Override entries of ``base`` (the built-in table by default)."""
    from .peripherals import DEFAULT_POWER_TABLE

    base = base or DEFAULT_POWER_TABLE
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from None
    units = dict(base.units)
    supply = {
        "input_v": base.input_voltage,
        "overhead_ma": base.supply_overhead * 1e3,
        "measured_total_ma": base.measured_total * 1e3,
    }
    for section in parser.sections():
        sec = _Section(parser, section)
        if section == "supply":
            for key in sec.items:
                if key not in supply:
                    raise ConfigError(f"supply.{key}", "unknown key")
                supply[key] = sec.float(key)
            continue
        for key in sec.items:
            if key not in ("rails", "standby_ma", "active_ma"):
                raise ConfigError(f"{section}.{key}", "unknown key")
        old = units.get(section)
        rails_text = sec.str("rails")
        try:
            rails = (
                tuple(float(v) for v in rails_text.split(","))
                if rails_text is not None
                else (old.rails if old else ())
            )
        except ValueError:
            raise ConfigError(f"{section}.rails", f"cannot parse {rails_text!r}") from None
        standby = sec.float("standby_ma", old.standby * 1e3 if old else 0.0) * 1e-3
        active = sec.float("active_ma", old.active * 1e3 if old else None)
        if active is None:
            raise ConfigError(f"{section}.active_ma", "required for a new unit")
        try:
            units[section] = PowerEntry(rails, standby, active * 1e-3)
        except InvalidInputError as exc:
            raise ConfigError(f"{section}.active_ma", str(exc)) from None
    return PowerTable(
        units,
        input_voltage=supply["input_v"],
        supply_overhead=supply["overhead_ma"] * 1e-3,
        measured_total=supply["measured_total_ma"] * 1e-3,
    )
