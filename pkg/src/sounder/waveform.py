"""Sampled baseband waveforms and their periodogram spectra."""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import AliasingRiskError, InvalidInputError
from .pn import PnSequence

MAX_CHIP_RATE = 1e9
MIN_OVERSAMPLING = 4

# Bins more than this far below the peak count as exact spectral zeros.
NULL_FLOOR_DB = -150.0


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """Uniformly sampled complex-baseband waveform.

    Attributes:
        samples: complex sample values (volts).
        sample_rate: samples per second.
        t0: time of the first sample, seconds.
    """

    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.complex128)
        if samples.ndim != 1 or samples.size == 0:
            raise InvalidInputError("samples must be a nonempty 1-D sequence")
        if not self.sample_rate > 0:
            raise InvalidInputError(f"sample_rate must be positive, got {self.sample_rate}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.samples)) / self.sample_rate

    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))

    def with_samples(self, samples) -> "SampledSignal":
        return SampledSignal(samples, self.sample_rate, self.t0)

    def window(self, start: int, count: Optional[int] = None) -> "SampledSignal":
        """Sub-signal beginning at sample ``start``; time base is kept."""
        stop = len(self.samples) if count is None else start + count
        if not 0 <= start < stop <= len(self.samples):
            raise InvalidInputError(
                f"window [{start}, {stop}) outside signal of {len(self.samples)} samples"
            )
        return SampledSignal(
            self.samples[start:stop], self.sample_rate, self.t0 + start / self.sample_rate
        )


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Two-sided periodogram.

    ``power`` holds the signal power falling in each bin (it sums to the mean
    time-domain power); ``power_db`` is the same, relative to its peak.
    """

    freqs: np.ndarray
    power: np.ndarray

    @property
    def power_db(self) -> np.ndarray:
        peak = self.power.max()
        with np.errstate(divide="ignore"):
            rel = 10.0 * np.log10(self.power / peak) if peak > 0 else np.full_like(self.power, -np.inf)
        return np.maximum(rel, -300.0)

    @property
    def bin_width(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["freq_hz", "power_db"])
        for f, p in zip(self.freqs, self.power_db):
            writer.writerow([f"{f:.9e}", f"{p:.6f}"])
        return buf.getvalue()


def synthesize(
    seq: PnSequence, chip_rate: float, oversampling: int = 8, periods: int = 1
) -> SampledSignal:
    """NRZ waveform holding each bipolar chip for ``oversampling`` samples."""
    if oversampling < MIN_OVERSAMPLING:
        raise AliasingRiskError(
            f"oversampling {oversampling} < {MIN_OVERSAMPLING} risks aliasing the chip spectrum"
        )
    if periods < 1:
        raise InvalidInputError(f"periods must be >= 1, got {periods}")
    if not chip_rate > 0:
        raise InvalidInputError(f"chip_rate must be positive, got {chip_rate}")
    if chip_rate > MAX_CHIP_RATE:
        warnings.warn(
            f"chip rate {chip_rate:g} Hz exceeds the 1 Gbps hardware maximum",
            stacklevel=2,
        )
    one_period = np.repeat(seq.bipolar(), oversampling)
    return SampledSignal(np.tile(one_period, periods), chip_rate * oversampling)


def power_spectrum(sig: SampledSignal, nfft: Optional[int] = None) -> Spectrum:
    """Rectangular-window periodogram, bins ordered from -fs/2 upwards.

    ``nfft`` defaults to the signal length; shorter transforms are refused
    (they would drop samples), longer ones zero-pad.  Using an integer number
    of PN periods and the default ``nfft`` puts every spectral line exactly on
    a bin.
    """
    n = len(sig.samples)
    if nfft is None:
        nfft = n
    if nfft < n:
        raise InvalidInputError(f"nfft {nfft} shorter than signal length {n}")
    spec = np.fft.fftshift(np.fft.fft(sig.samples, nfft))
    power = np.abs(spec) ** 2 / (nfft * n)
    freqs = np.fft.fftshift(np.fft.fftfreq(nfft, d=1.0 / sig.sample_rate))
    return Spectrum(freqs, power)


def _null_offsets(occupied: np.ndarray) -> Optional[float]:
    """Position of the first missing line in a run of occupied bins."""
    idx = np.flatnonzero(occupied)
    if len(idx) < 3:
        return None
    gaps = np.diff(idx)
    spacing = gaps.min()
    wide = np.flatnonzero(gaps > spacing)
    if not len(wide):
        return None
    j = wide[0]
    return (idx[j] + idx[j + 1]) / 2.0


def first_null(spec: Spectrum, upper: bool = True) -> float:
    """Frequency of the first spectral null above (or below) DC.

    Works on exact line spectra (an integer number of periods without zero
    padding): bins below ``NULL_FLOOR_DB`` are empty, and the null is the
    middle of the first gap wider than the regular line spacing.
    """
    if spec.power.max() <= 0:
        raise InvalidInputError("spectrum is identically zero")
    occupied = spec.power_db > NULL_FLOOR_DB
    centre = int(np.searchsorted(spec.freqs, 0.0))
    if upper:
        pos = _null_offsets(occupied[centre:])
        if pos is None:
            raise InvalidInputError("no spectral null found above DC")
        return float(np.interp(centre + pos, np.arange(len(spec.freqs)), spec.freqs))
    pos = _null_offsets(occupied[centre::-1])
    if pos is None:
        raise InvalidInputError("no spectral null found below DC")
    return float(np.interp(centre - pos, np.arange(len(spec.freqs)), spec.freqs))


def null_to_null_bandwidth(spec: Spectrum) -> float:
    return first_null(spec, upper=True) - first_null(spec, upper=False)
