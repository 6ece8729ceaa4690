"""Behavioral models of the evaluation-board sub-units."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Tuple

import numpy as np

from .errors import (
    InvalidInputError,
    ShapeMismatchError,
    ToggleCapacityError,
    UnknownUnitError,
)
from .filters import lowpass
from .waveform import SampledSignal

IDEAL_SPLIT_DB = 3.01
DIFF_AMP_GAINS_DB = (0, 3, 10, 20)  # 0 dB is a bench test setting, not a switch position


@dataclass(frozen=True)
class BalunModel:
    """1:1 center-tapped transformer; flat in band.

    ``insertion_loss_db`` is the loss on top of the ideal 3.01 dB split.
    """

    insertion_loss_db: float = 0.5
    bandwidth: float = 700e6

    def __post_init__(self):
        if self.insertion_loss_db < 0:
            raise InvalidInputError("insertion_loss_db must be >= 0")

    @property
    def amplitude_factor(self) -> float:
        return 10.0 ** (-(IDEAL_SPLIT_DB + self.insertion_loss_db) / 20.0)


@dataclass(frozen=True)
class DiffAmpModel:
    cutoff: float = 150e3
    gain_db: float = 10

    def __post_init__(self):
        if not self.cutoff > 0:
            raise InvalidInputError("cutoff must be positive")
        if self.gain_db not in DIFF_AMP_GAINS_DB:
            raise InvalidInputError(
                f"gain_db {self.gain_db} is not a switch position {DIFF_AMP_GAINS_DB[1:]}"
            )


def balun_split(sig: SampledSignal, m: BalunModel) -> Tuple[SampledSignal, SampledSignal]:
    """Split a single-ended signal into an antiphase pair."""
    pos = sig.samples * m.amplitude_factor
    return sig.with_samples(pos), sig.with_samples(-pos)


def diff_merge_filter_amplify(
    pos: SampledSignal, neg: SampledSignal, m: DiffAmpModel
) -> SampledSignal:
    """``LPF(pos - neg)`` scaled by the selected gain; the filter starts at rest."""
    if pos.sample_rate != neg.sample_rate or len(pos) != len(neg):
        raise ShapeMismatchError(
            f"pos ({len(pos)} @ {pos.sample_rate:g} Hz) and neg "
            f"({len(neg)} @ {neg.sample_rate:g} Hz) differ"
        )
    diff = pos.samples - neg.samples
    out = lowpass(diff, m.cutoff, pos.sample_rate) * 10.0 ** (m.gain_db / 20.0)
    return pos.with_samples(out)


def dominant_frequency(sig: SampledSignal) -> float:
    """Frequency of the strongest non-DC FFT bin, in Hz."""
    x = sig.samples.real - sig.samples.real.mean()
    spec = np.abs(np.fft.rfft(x))
    spec[0] = 0.0
    return float(np.argmax(spec) * sig.sample_rate / len(x))


def _extremum(x: np.ndarray, i: int) -> float:
    """Vertex of the parabola through the samples around ``x[i]``."""
    if i == 0 or i == len(x) - 1:
        return float(x[i])
    a, b, c = x[i - 1], x[i], x[i + 1]
    denom = a - 2 * b + c
    if denom == 0:
        return float(b)
    return float(b - (a - c) ** 2 / (8 * denom))


def swing(x: np.ndarray) -> float:
    """Peak-to-peak amplitude with crest values refined between samples."""
    return _extremum(x, int(np.argmax(x))) - _extremum(x, int(np.argmin(x)))


def clock_buffer(
    sig: SampledSignal,
    sensitivity_vpp: float = 0.06,
    out_vpp: float = 0.6,
    max_toggle: float = 7.5e9,
) -> SampledSignal:
    """Hysteretic comparator squaring up a clock.

    The input is AC coupled (mean removed).  Thresholds sit at
    ``+-sensitivity_vpp / 4``; an input whose peak-to-peak swing is below
    ``sensitivity_vpp`` leaves the output parked at its initial level.  The
    swing is measured on parabola-refined crests so a sampled sine is judged
    by its true amplitude rather than by where the grid happens to fall.
    """
    x = sig.samples.real - sig.samples.real.mean()
    freq = dominant_frequency(sig)
    if freq > max_toggle:
        raise ToggleCapacityError(
            f"input at {freq:g} Hz exceeds the {max_toggle:g} Hz toggle capacity"
        )
    hi, lo = out_vpp / 2.0, -out_vpp / 2.0
    thr = sensitivity_vpp / 4.0
    state = x[0] >= thr
    if swing(x) < sensitivity_vpp * (1 - 1e-4):
        return sig.with_samples(np.full(len(x), hi if state else lo))
    out = np.empty(len(x))
    for i, v in enumerate(x):
        if state and v <= -thr:
            state = False
        elif not state and v >= thr:
            state = True
        out[i] = hi if state else lo
    return sig.with_samples(out)


@dataclass(frozen=True)
class PowerEntry:
    """One sub-unit: its supply rails (volts) and per-rail current (amps)."""

    rails: Tuple[float, ...]
    standby: float
    active: float

    def __post_init__(self):
        if not self.active >= self.standby >= 0:
            raise InvalidInputError(
                f"need active >= standby >= 0, got standby={self.standby} active={self.active}"
            )


@dataclass(frozen=True)
class PowerTable:
    """Sub-unit current draws plus the 5 V supply block.

    ``supply_overhead`` is the regulator block's own standby draw;
    ``measured_total`` the whole-board peak at the 5 V input.
    """

    units: Mapping[str, PowerEntry]
    input_voltage: float = 5.0
    supply_overhead: float = 4e-3
    measured_total: float = 172e-3


# "< 1 mA" standby entries are carried at their 1 mA bound.
DEFAULT_POWER_TABLE = PowerTable(
    units={
        "clock_buffer": PowerEntry((3.3,), 1e-3, 44e-3),
        "diff_converter": PowerEntry((2.5, -2.5), 1e-3, 5e-3),
        "single_ended_converter": PowerEntry((), 0.0, 0.0),
    }
)


def rail_name(volts: float) -> str:
    return f"{volts:+g}V"


@dataclass(frozen=True)
class PowerReport:
    rail_currents: Dict[str, float]
    input_current: float
    measured_total: float
    active_units: Tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "schema": "sounder.power/1",
            "active_units": list(self.active_units),
            "rail_currents_a": dict(self.rail_currents),
            "input_current_a": self.input_current,
            "measured_total_a": self.measured_total,
        }


def power_budget(table: PowerTable, active_units: Iterable[str]) -> PowerReport:
    """Per-rail currents and the implied draw at the 5 V input.

    Regulators are ideal pass-through (input current = output current), the
    charge-pump inverter included; the supply block's overhead is added.
    """
    active = tuple(sorted(set(active_units)))
    unknown = [u for u in active if u not in table.units]
    if unknown:
        raise UnknownUnitError(
            f"unknown unit(s) {', '.join(unknown)}; known: {', '.join(sorted(table.units))}"
        )
    rails: Dict[str, float] = {}
    for name in sorted(table.units):
        entry = table.units[name]
        current = entry.active if name in active else entry.standby
        for v in entry.rails:
            key = rail_name(v)
            rails[key] = rails.get(key, 0.0) + current
    total = sum(rails.values()) + table.supply_overhead
    return PowerReport(rails, total, table.measured_total, active)
