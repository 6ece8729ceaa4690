"""Small end-to-end helpers shared by the correlator and acceptance tests."""
import numpy as np

from sounder.channel import MultipathChannel, apply
from sounder.correlator import (
    SlideParams,
    slide_correlate,
    sync_reference,
    sync_time_zero,
    undilate,
)
from sounder.pn import LfsrConfig, generate_pn
from sounder.waveform import synthesize


def slide(degree, alpha, gamma):
    """SlideParams with beta chosen for an exact sliding factor."""
    return alpha * (1.0 - 1.0 / gamma)


def received(p, paths, oversampling=8, noise=0.0, seed=0):
    """Steady-state received signal covering one slide period.

    One PN period of lead-in is dropped so delayed paths are already present
    at the start of the window.
    """
    seq = generate_pn(p.pn)
    periods = int(np.ceil(p.gamma)) + 2
    tx = synthesize(seq, p.alpha, oversampling, periods)
    rx = apply(MultipathChannel(paths, noise, seed), tx)
    return rx.window(seq.length * oversampling)


def params(degree=5, alpha=1e9, gamma=50.0, lpf=None):
    return SlideParams(alpha, slide(degree, alpha, gamma), LfsrConfig(degree), lpf)


def sound(p, paths, oversampling=8, noise=0.0, seed=0):
    """Dilated profile, true-delay profile and t_zero for ``paths``."""
    rx = received(p, paths, oversampling, noise, seed)
    dilated = slide_correlate(rx, p)
    sync = sync_reference(p, p.slide_period, rx.sample_rate, t0=rx.t0)
    t_zero = sync_time_zero(sync, p)
    return dilated, undilate(dilated, t_zero), t_zero
