"""Sliding-correlator channel sounding simulator and RF board toolkit."""
from .channel import MultipathChannel, apply
from .correlator import (
    PathEstimate,
    PowerDelayProfile,
    SlideParams,
    extract_paths,
    redilate,
    slide_correlate,
    sliding_factor,
    sync_reference,
    sync_time_zero,
    undilate,
)
from .pcb import StackupParams, differential_impedance, microstrip_impedance, solve_width
from .peripherals import (
    DEFAULT_POWER_TABLE,
    BalunModel,
    DiffAmpModel,
    PowerTable,
    balun_split,
    clock_buffer,
    diff_merge_filter_amplify,
    power_budget,
)
from .pn import (
    LfsrConfig,
    PnSequence,
    default_taps,
    generate_pn,
    periodic_autocorrelation,
    run_length_histogram,
)
from .waveform import SampledSignal, Spectrum, first_null, null_to_null_bandwidth, power_spectrum, synthesize

__version__ = "0.1.0"
