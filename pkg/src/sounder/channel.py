"""Static tapped-delay-line multipath channel with complex AWGN.

Tap delays are rounded to the nearest sample, so the delay granularity is
``1 / sample_rate``; with 8x oversampling that is 1/8 chip.  The channel is
quasi-static: no Doppler or time variation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import DelayOutOfRangeError, InvalidInputError
from .waveform import SampledSignal

Tap = Tuple[float, complex]


@dataclass(frozen=True)
class MultipathChannel:
    """Discrete paths ``(delay_s, gain)`` plus per-sample noise variance."""

    taps: Tuple[Tap, ...]
    noise_density: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        taps = tuple((float(d), complex(g)) for d, g in self.taps)
        if not taps:
            raise InvalidInputError("channel needs at least one tap")
        delays = [d for d, _ in taps]
        if any(d < 0 for d in delays):
            raise InvalidInputError("tap delays must be >= 0")
        if any(b < a for a, b in zip(delays, delays[1:])):
            raise InvalidInputError("tap delays must be listed in nondecreasing order")
        if self.noise_density < 0:
            raise InvalidInputError("noise_density must be >= 0")
        if not 0 <= self.rng_seed < 2**64:
            raise InvalidInputError("rng_seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "taps", taps)

    @classmethod
    def from_snr(
        cls,
        taps: Sequence[Tap],
        snr_db: float,
        reference: SampledSignal,
        rng_seed: int = 0,
    ) -> "MultipathChannel":
        """Noise variance set ``snr_db`` below the mean power of the noiseless
        channel output for ``reference``."""
        clean = cls(tuple(taps), 0.0, rng_seed).apply(reference)
        density = clean.mean_power() / 10.0 ** (snr_db / 10.0)
        return cls(tuple(taps), density, rng_seed)

    @property
    def max_delay(self) -> float:
        return self.taps[-1][0]

    def apply(self, sig: SampledSignal) -> SampledSignal:
        return apply(self, sig)


def apply(ch: MultipathChannel, sig: SampledSignal) -> SampledSignal:
    """Sum of delayed, scaled copies of ``sig`` plus noise.

    Samples before a path's arrival are zero for that path; the output keeps
    the input length.
    """
    n = len(sig.samples)
    if ch.max_delay >= sig.duration:
        raise DelayOutOfRangeError(
            f"tap delay {ch.max_delay:g} s not shorter than signal duration {sig.duration:g} s"
        )
    out = np.zeros(n, dtype=np.complex128)
    for delay, gain in ch.taps:
        shift = int(round(delay * sig.sample_rate))
        if shift >= n:
            raise DelayOutOfRangeError(f"tap delay {delay:g} s rounds past the last sample")
        out[shift:] += gain * sig.samples[: n - shift]
    if ch.noise_density > 0:
        rng = np.random.default_rng(ch.rng_seed)
        scale = np.sqrt(ch.noise_density / 2.0)
        out += scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return sig.with_samples(out)
