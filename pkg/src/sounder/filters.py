"""First-order low-pass filter shared by the correlator and the diff amp."""
from __future__ import annotations

import numpy as np
from scipy import signal


def one_pole_coeffs(cutoff: float, sample_rate: float):
    """Bilinear-transform single-pole low-pass, prewarped so the response is
    exactly -3 dB at ``cutoff``; unity gain at DC.
    """
    if not 0 < cutoff < sample_rate / 2:
        raise ValueError(f"cutoff {cutoff} Hz must lie in (0, {sample_rate / 2}) Hz")
    k = np.tan(np.pi * cutoff / sample_rate)
    b = np.array([k, k]) / (1.0 + k)
    a = np.array([1.0, (k - 1.0) / (k + 1.0)])
    return b, a


def lowpass(x: np.ndarray, cutoff: float, sample_rate: float) -> np.ndarray:
    """Causal filtering starting from rest."""
    b, a = one_pole_coeffs(cutoff, sample_rate)
    return signal.lfilter(b, a, x)


def lowpass_periodic(x: np.ndarray, cutoff: float, sample_rate: float) -> np.ndarray:
    """Steady-state response to ``x`` repeated forever.

    The filter state at the start of the block is chosen equal to the state
    at its end, so the output is what a filter that has been running on the
    periodic input for a long time would produce.
    """
    b, a = one_pole_coeffs(cutoff, sample_rate)
    _, zf = signal.lfilter(b, a, x, zi=[0.0])
    pole = -a[1]
    z0 = zf[0] / (1.0 - pole ** len(x))
    y, _ = signal.lfilter(b, a, x, zi=[z0])
    return y


def response(freq, cutoff: float, sample_rate: float) -> np.ndarray:
    """Complex frequency response at ``freq`` Hz."""
    b, a = one_pole_coeffs(cutoff, sample_rate)
    _, h = signal.freqz(b, a, worN=np.atleast_1d(freq), fs=sample_rate)
    return h
