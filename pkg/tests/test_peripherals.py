import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import sine_amplitude
from sounder.config import parse_power_table
from sounder.errors import (
    InvalidInputError,
    ShapeMismatchError,
    ToggleCapacityError,
    UnknownUnitError,
)
from sounder.peripherals import (
    DEFAULT_POWER_TABLE,
    BalunModel,
    DiffAmpModel,
    balun_split,
    clock_buffer,
    diff_merge_filter_amplify,
    power_budget,
)
from sounder.waveform import SampledSignal


def tone(freq, fs, cycles, amp=1.0, phase=0.0):
    n = int(round(cycles * fs / freq))
    t = np.arange(n) / fs
    return SampledSignal(amp * np.sin(2 * np.pi * freq * t + phase), fs)


def steady_gain(model, freq, fs=60e6, settle=30e-6, span=200e-6):
    """Output/input amplitude of a sine once the filter has settled."""
    sig = tone(freq, fs, (settle + span) * freq)
    pos, neg = balun_split(sig, BalunModel(0.0))
    out = diff_merge_filter_amplify(pos, neg, model).samples.real
    skip = int(settle * fs)
    diff = (pos.samples - neg.samples).real
    return sine_amplitude(out[skip:], freq, fs) / sine_amplitude(diff[skip:], freq, fs)


def test_balun_ideal_split():
    sig = tone(1e6, 100e6, 5)
    pos, neg = balun_split(sig, BalunModel(0.0))
    assert np.allclose(pos.samples, sig.samples * 10 ** (-3.01 / 20))
    assert 10 ** (-3.01 / 20) == pytest.approx(0.7071, abs=5e-4)
    assert np.array_equal(pos.samples + neg.samples, np.zeros(len(sig)))


def test_balun_fundamental_of_square_wave():
    fs, f = 40e9, 500e6
    n = 4000
    t = np.arange(n) / fs
    square = 0.05 * np.sign(np.sin(2 * np.pi * f * t + 1e-3))
    pos, neg = balun_split(SampledSignal(square, fs), BalunModel(0.5))
    fundamental = sine_amplitude(pos.samples.real, f, fs)
    assert fundamental == pytest.approx(4 / np.pi * 0.05 * 10 ** (-3.51 / 20), rel=1e-2)
    assert abs(fundamental - 44e-3) / 44e-3 < 0.10
    assert sine_amplitude(neg.samples.real, f, fs) == pytest.approx(fundamental)


def test_balun_invariant():
    with pytest.raises(InvalidInputError):
        BalunModel(-0.1)


def test_diff_amp_common_mode_rejection():
    sig = tone(100e3, 10e6, 3)
    out = diff_merge_filter_amplify(sig, sig, DiffAmpModel(gain_db=20))
    assert np.all(out.samples == 0)


def test_diff_amp_shape_mismatch():
    a = tone(100e3, 10e6, 3)
    with pytest.raises(ShapeMismatchError):
        diff_merge_filter_amplify(a, a.window(0, 10), DiffAmpModel())
    with pytest.raises(ShapeMismatchError):
        diff_merge_filter_amplify(a, SampledSignal(a.samples, 20e6), DiffAmpModel())


def test_diff_amp_gain_positions():
    for g in (3, 10, 20):
        assert DiffAmpModel(gain_db=g).gain_db == g
    with pytest.raises(InvalidInputError):
        DiffAmpModel(gain_db=6)
    with pytest.raises(InvalidInputError):
        DiffAmpModel(cutoff=0.0)


def test_diff_amp_3db_at_cutoff():
    assert steady_gain(DiffAmpModel(150e3, 0), 150e3) == pytest.approx(0.7071, rel=0.02)


def test_diff_amp_decade_attenuation():
    g = steady_gain(DiffAmpModel(150e3, 0), 1.5e6)
    assert 20 * np.log10(g) == pytest.approx(-20.04, abs=0.2)


@pytest.mark.parametrize("gain_db", [3, 10, 20])
def test_diff_amp_passband_gain(gain_db):
    g = steady_gain(DiffAmpModel(150e3, gain_db), 5e3, fs=10e6, settle=100e-6, span=2e-3)
    assert 20 * np.log10(g) == pytest.approx(gain_db, abs=0.05)


def test_clock_buffer_squares_up_70mv():
    fs = 40e9
    sig = tone(1e9, fs, 50, amp=0.035)
    out = clock_buffer(sig, sensitivity_vpp=0.07)
    levels = np.unique(out.samples.real)
    assert levels.tolist() == [-0.3, 0.3]
    edges = np.count_nonzero(np.diff(out.samples.real))
    assert edges in (99, 100)
    spectrum = np.abs(np.fft.rfft(out.samples.real))
    assert np.argmax(spectrum[1:]) + 1 == 50


def test_clock_buffer_silent_below_sensitivity():
    out = clock_buffer(tone(1e9, 40e9, 50, amp=0.02), sensitivity_vpp=0.06)
    assert np.ptp(out.samples.real) == 0


def test_clock_buffer_toggle_capacity():
    with pytest.raises(ToggleCapacityError):
        clock_buffer(tone(8e9, 64e9, 50, amp=0.1), max_toggle=7.5e9)


@settings(max_examples=25, deadline=None)
@given(
    freq=st.sampled_from([100e6, 250e6, 500e6, 1e9]),
    amp=st.floats(0.035, 0.5),
    cycles=st.integers(5, 40),
    phase=st.floats(0, 2 * np.pi),
)
def test_clock_buffer_two_transitions_per_cycle(freq, amp, cycles, phase):
    fs = 40 * freq
    out = clock_buffer(tone(freq, fs, cycles, amp, phase), sensitivity_vpp=0.07)
    assert len(np.unique(out.samples.real)) == 2
    edges = np.count_nonzero(np.diff(out.samples.real))
    # The first half-cycle may be absorbed by the starting state.
    assert 2 * cycles - 2 <= edges <= 2 * cycles


def test_balun_diff_round_trip():
    fs, f = 100e6, 1e6
    sig = tone(f, fs, 40)
    model = BalunModel(0.5)
    pos, neg = balun_split(sig, model)
    out = diff_merge_filter_amplify(pos, neg, DiffAmpModel(cutoff=20e6, gain_db=0)).samples.real
    skip = 1000
    ratio = sine_amplitude(out[skip:], f, fs) / sine_amplitude(sig.samples.real[skip:], f, fs)
    assert ratio == pytest.approx(2 * model.amplitude_factor, rel=0.01)


def test_power_clock_buffer_alone():
    report = power_budget(DEFAULT_POWER_TABLE, {"clock_buffer"})
    assert report.rail_currents["+3.3V"] == pytest.approx(44e-3, abs=1e-15)


def test_power_diff_converter():
    report = power_budget(DEFAULT_POWER_TABLE, {"diff_converter"})
    assert report.rail_currents["+2.5V"] == pytest.approx(5e-3, abs=1e-15)
    assert report.rail_currents["-2.5V"] == pytest.approx(5e-3, abs=1e-15)


def test_power_total_within_measured():
    report = power_budget(DEFAULT_POWER_TABLE, set(DEFAULT_POWER_TABLE.units))
    assert report.input_current <= 172e-3
    doc = report.to_dict()
    assert doc["schema"] == "sounder.power/1"
    json.dumps(doc)


def test_power_unknown_unit():
    with pytest.raises(UnknownUnitError):
        power_budget(DEFAULT_POWER_TABLE, {"flux_capacitor"})


@given(st.sets(st.sampled_from(sorted(DEFAULT_POWER_TABLE.units))), st.sampled_from(sorted(DEFAULT_POWER_TABLE.units)))
def test_power_monotone(active, extra):
    before = power_budget(DEFAULT_POWER_TABLE, active)
    after = power_budget(DEFAULT_POWER_TABLE, active | {extra})
    for rail, amps in before.rail_currents.items():
        assert after.rail_currents[rail] >= amps
    assert after.input_current >= before.input_current


def test_power_table_override():
    table = parse_power_table(
        "[clock_buffer]\nactive_ma = 50\n\n[supply]\nmeasured_total_ma = 180\n",
        DEFAULT_POWER_TABLE,
    )
    report = power_budget(table, {"clock_buffer"})
    assert report.rail_currents["+3.3V"] == pytest.approx(50e-3)
    assert report.measured_total == pytest.approx(180e-3)
