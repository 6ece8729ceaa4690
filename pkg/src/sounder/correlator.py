"""Dual-clock sliding correlation and power delay profile extraction.

The received signal ``rx`` (chips at ``alpha``) is multiplied by a replica of
the same PN sequence clocked at the slower rate ``beta`` and low-pass
filtered.  The replica slips one chip against ``rx`` every ``gamma / alpha``
seconds, so the filter output traces the channel's delay profile stretched
by the sliding factor ``gamma = alpha / (alpha - beta)``.

The low-pass is the single-pole filter from :mod:`sounder.filters`.  Its
output is advanced by the lag at which it peaks for an ideal one-chip
correlation triangle, so a zero-delay path peaks at observation time zero;
the sync reference receives the identical treatment.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from .errors import InvalidRatesError, PreconditionError, WrongAxisError
from .filters import lowpass, lowpass_periodic
from .pn import LfsrConfig, generate_pn
from .waveform import SampledSignal

MIN_SAMPLES_PER_CHIP = 4
DEFAULT_LPF_FRACTION = 0.1
DEFAULT_SMOOTH_CHIPS = 0.25
DEFAULT_MIN_PROMINENCE_DB = 1.0


def sliding_factor(alpha: float, beta: float) -> float:
    """Time dilation ``alpha / (alpha - beta)``."""
    if not 0 < beta < alpha:
        raise InvalidRatesError(f"need 0 < beta < alpha, got alpha={alpha!r} beta={beta!r}")
    return alpha / (alpha - beta)


@dataclass(frozen=True)
class SlideParams:
    """Clock rates, shared PN configuration and post-mixer filter bandwidth.

    ``lpf_bandwidth=None`` selects ``(alpha - beta) / 10``.
    """

    alpha: float
    beta: float
    pn: LfsrConfig
    lpf_bandwidth: Optional[float] = None

    def __post_init__(self):
        sliding_factor(self.alpha, self.beta)
        if self.lpf_bandwidth is None:
            object.__setattr__(
                self, "lpf_bandwidth", DEFAULT_LPF_FRACTION * (self.alpha - self.beta)
            )
        if not 0 < self.lpf_bandwidth < self.alpha - self.beta:
            raise PreconditionError(
                f"lpf_bandwidth {self.lpf_bandwidth:g} Hz must lie in (0, alpha - beta = "
                f"{self.alpha - self.beta:g} Hz)"
            )

    @property
    def gamma(self) -> float:
        return sliding_factor(self.alpha, self.beta)

    @property
    def slide_period(self) -> float:
        """Observation time for the replica to slip one full PN period."""
        return self.gamma * self.pn.length / self.alpha

    def slide_samples(self, sample_rate: float) -> int:
        return int(round(self.slide_period * sample_rate))


@dataclass(frozen=True, eq=False)
class PowerDelayProfile:
    """Power versus delay over one PN period.

    ``dilated`` profiles are indexed by observation time; true-delay profiles
    (from :func:`undilate`) by propagation delay in ``[0, L / alpha)``.
    """

    axis: np.ndarray
    power: np.ndarray
    gamma: float
    alpha: float
    pn_length: int
    dilated: bool = True
    t_zero: Optional[float] = None

    @property
    def spacing(self) -> float:
        return float(self.axis[1] - self.axis[0])

    @property
    def span(self) -> float:
        return len(self.axis) * self.spacing

    @property
    def chip_width(self) -> float:
        """One chip on this profile's axis."""
        return (self.gamma if self.dilated else 1.0) / self.alpha

    def power_db(self) -> np.ndarray:
        peak = self.power.max()
        if peak <= 0:
            return np.full_like(self.power, -300.0)
        with np.errstate(divide="ignore"):
            return np.maximum(10.0 * np.log10(self.power / peak), -300.0)

    def to_csv(self, step: int = 1) -> str:
        """CSV of every ``step``-th point."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["obs_time_s" if self.dilated else "delay_s", "power_linear", "power_db"])
        db = self.power_db()
        for i in range(0, len(self.axis), step):
            writer.writerow([f"{self.axis[i]:.12e}", f"{self.power[i]:.12e}", f"{db[i]:.6f}"])
        return buf.getvalue()


class PathEstimate(NamedTuple):
    delay: float
    power_db: float


def _chip_waveform(bipolar: np.ndarray, rate: float, sample_rate: float, n: np.ndarray):
    # Chip edges snap to the nearest sample.
    idx = np.floor((n + 0.5) * (rate / sample_rate)).astype(np.int64)
    return bipolar[np.mod(idx, len(bipolar))]


def _alignment_lag(p: SlideParams, sample_rate: float, nwin: int) -> int:
    """Samples by which the filter delays the peak of a one-chip triangle."""
    n = np.arange(nwin)
    half_width = p.gamma * sample_rate / p.alpha
    tri = np.maximum(0.0, 1.0 - np.minimum(n, nwin - n) / half_width)
    y = lowpass_periodic(tri, p.lpf_bandwidth, sample_rate)
    return int(np.argmax(y))


def _check_grid(p: SlideParams, sample_rate: float, duration: float) -> int:
    if sample_rate < MIN_SAMPLES_PER_CHIP * p.alpha * (1 - 1e-12):
        raise PreconditionError(
            f"sample rate {sample_rate:g} Hz below {MIN_SAMPLES_PER_CHIP} x alpha "
            f"= {MIN_SAMPLES_PER_CHIP * p.alpha:g} Hz"
        )
    nwin = p.slide_samples(sample_rate)
    if duration * sample_rate < nwin - 1e-6:
        raise PreconditionError(
            f"signal lasts {duration:g} s; one slide period needs {nwin / sample_rate:g} s"
        )
    return nwin


def slide_correlate(rx: SampledSignal, p: SlideParams) -> PowerDelayProfile:
    """Sliding-correlate ``rx`` against the ``beta``-clocked replica.

    Uses the first slide period of ``rx``, treated as one period of a
    periodic record.  I and Q are filtered separately and combined as
    ``I**2 + Q**2``.
    """
    fs = rx.sample_rate
    nwin = _check_grid(p, fs, rx.duration)
    n = np.arange(nwin)
    replica = _chip_waveform(generate_pn(p.pn).bipolar(), p.beta, fs, n)
    mixed = rx.samples[:nwin] * replica
    i_out = lowpass_periodic(mixed.real, p.lpf_bandwidth, fs)
    q_out = lowpass_periodic(mixed.imag, p.lpf_bandwidth, fs)
    lag = _alignment_lag(p, fs, nwin)
    power = np.roll(i_out * i_out + q_out * q_out, -lag)
    return PowerDelayProfile(
        axis=rx.t0 + n / fs,
        power=power,
        gamma=p.gamma,
        alpha=p.alpha,
        pn_length=p.pn.length,
        dilated=True,
    )


def sync_reference(
    p: SlideParams, duration: float, sample_rate: float, t0: float = 0.0
) -> SampledSignal:
    """Filtered product of the ``alpha`` and ``beta`` clocked PN waveforms.

    Both generators start at chip 0 at ``t0``.  The filter is run from one
    slide period before ``t0`` so the output is free of start-up transients.
    Its envelope ``abs(x)**2`` peaks at dilated time zero and once per slide
    period thereafter.
    """
    nwin = _check_grid(p, sample_rate, duration)
    count = int(round(duration * sample_rate))
    lag = _alignment_lag(p, sample_rate, nwin)
    n = np.arange(-nwin, count + lag)
    chips = generate_pn(p.pn).bipolar()
    mixed = _chip_waveform(chips, p.alpha, sample_rate, n) * _chip_waveform(
        chips, p.beta, sample_rate, n
    )
    y = lowpass(mixed, p.lpf_bandwidth, sample_rate)
    return SampledSignal(y[nwin + lag:], sample_rate, t0)


def sync_time_zero(sync: SampledSignal, p: SlideParams) -> float:
    """Observation time of the first sync envelope peak."""
    nwin = min(p.slide_samples(sync.sample_rate), len(sync.samples))
    env = np.abs(sync.samples[:nwin]) ** 2
    return sync.t0 + int(np.argmax(env)) / sync.sample_rate


def _wrap(x: np.ndarray, span: float, spacing: float) -> np.ndarray:
    # Values a rounding error short of ``span`` belong at zero.
    r = np.mod(x, span)
    return np.where(r > span - 1e-6 * spacing, np.maximum(r - span, 0.0), r)


def _rotate_sorted(axis: np.ndarray, power: np.ndarray):
    start = int(np.argmin(axis))
    return np.roll(axis, -start), np.roll(power, -start)


def undilate(pdp: PowerDelayProfile, t_zero: float) -> PowerDelayProfile:
    """Map observation time to propagation delay: ``(t - t_zero) / gamma``,
    wrapped into one PN period."""
    if not pdp.dilated:
        raise WrongAxisError("profile is already on the true-delay axis")
    delay = _wrap(pdp.axis - t_zero, pdp.span, pdp.spacing) / pdp.gamma
    axis, power = _rotate_sorted(delay, pdp.power)
    return replace(pdp, axis=axis, power=power, dilated=False, t_zero=t_zero)


def redilate(pdp: PowerDelayProfile, t_zero: float, start: float) -> PowerDelayProfile:
    """Inverse of :func:`undilate` for a window beginning at ``start``."""
    if pdp.dilated:
        raise WrongAxisError("profile is already on the dilated axis")
    span = pdp.span * pdp.gamma
    obs = start + _wrap(pdp.axis * pdp.gamma + t_zero - start, span, pdp.spacing * pdp.gamma)
    axis, power = _rotate_sorted(obs, pdp.power)
    return replace(pdp, axis=axis, power=power, dilated=True, t_zero=None)


def smoothed_power(pdp: PowerDelayProfile, smooth_chips: float = DEFAULT_SMOOTH_CHIPS):
    """Circular moving average ``smooth_chips`` chips wide."""
    width = max(1, int(round(smooth_chips * pdp.chip_width / pdp.spacing)))
    return uniform_filter1d(pdp.power, size=width, mode="wrap")


def extract_paths(
    pdp: PowerDelayProfile,
    threshold_db: float,
    smooth_chips: float = DEFAULT_SMOOTH_CHIPS,
    min_prominence_db: float = DEFAULT_MIN_PROMINENCE_DB,
) -> List[PathEstimate]:
    """Local maxima within ``threshold_db`` of the strongest, sorted by delay.

    The profile is treated as circular.  A maximum must rise at least
    ``min_prominence_db`` above the deeper of the two valleys separating it
    from higher ground, which discards ripple on flat peak tops.  Plateaus
    report their earliest point.  Powers are relative to the strongest path.
    """
    if pdp.dilated:
        raise WrongAxisError("extract_paths needs a true-delay profile; call undilate first")
    sm = smoothed_power(pdp, smooth_chips)
    peak = sm.max()
    if not peak > 0:
        return []
    n = len(sm)
    tiled = np.concatenate([sm, sm, sm])
    idx, props = find_peaks(
        tiled, height=peak * 10.0 ** (-threshold_db / 10.0), prominence=0.0, plateau_size=1
    )
    first = props["left_edges"]
    heights = tiled[idx]
    base = heights - props["prominences"]
    with np.errstate(divide="ignore"):
        prominence_db = np.where(base > 0, 10.0 * np.log10(heights / np.maximum(base, 1e-300)), np.inf)
    keep = (first >= n) & (first < 2 * n) & (prominence_db >= min_prominence_db)
    paths = [
        PathEstimate(float(pdp.axis[i - n]), 10.0 * math.log10(tiled[i] / peak))
        for i in first[keep]
    ]
    return sorted(paths, key=lambda path: path.delay)


def paths_to_json(paths: List[PathEstimate]) -> str:
    records = [{"delay_ns": p.delay * 1e9, "power_db": p.power_db} for p in paths]
    return json.dumps({"schema": "sounder.paths/1", "paths": records}, indent=2, sort_keys=True) + "\n"
