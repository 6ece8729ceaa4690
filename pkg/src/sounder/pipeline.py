"""End-to-end sounding run: transmit, propagate, correlate, extract paths.

Randomness: each stage draws from its own stream, seeded from
``numpy.random.SeedSequence([rng_seed, crc32(stage_name)])``.  Adding a new
stage therefore never changes the streams of existing ones.
"""
from __future__ import annotations

import json
import os
import zlib
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .channel import MultipathChannel, apply
from .config import ExperimentConfig
from .correlator import (
    PathEstimate,
    PowerDelayProfile,
    extract_paths,
    paths_to_json,
    slide_correlate,
    sliding_factor,
    sync_reference,
    sync_time_zero,
    undilate,
)
from .errors import ConfigError, SounderError
from .pn import generate_pn
from .waveform import first_null, null_to_null_bandwidth, power_spectrum, synthesize

OUTPUT_DIR_ENV = "SOUNDER_OUTPUT_DIR"


def derive_seed(rng_seed: int, stage: str) -> int:
    """64-bit seed for ``stage`` derived from the config-level ``rng_seed``."""
    seq = np.random.SeedSequence([rng_seed, zlib.crc32(stage.encode())])
    lo, hi = seq.generate_state(2, dtype=np.uint32)
    return int(hi) << 32 | int(lo)


@dataclass(frozen=True)
class SoundingResult:
    dilated: PowerDelayProfile
    pdp: PowerDelayProfile
    paths: List[PathEstimate]
    summary: Dict
    files: tuple = ()


@contextmanager
def _stage(key: str):
    """Re-raise module errors with the config key they stem from."""
    try:
        yield
    except ConfigError:
        raise
    except SounderError as exc:
        raise ConfigError(key, str(exc)) from exc


def run_sounding(cfg: ExperimentConfig, out_dir=None) -> SoundingResult:
    """Replay one sounding; artifacts are written only when ``out_dir`` is given."""
    lfsr = cfg.lfsr()
    seq = generate_pn(lfsr)
    params = cfg.slide_params()
    alpha, m = cfg.rates.alpha_hz, cfg.sim.oversampling

    with _stage("sim"):
        tx = synthesize(seq, alpha, m, cfg.tx_periods())

    with _stage("channel"):
        paths_in = cfg.channel.path_list()
        seed = derive_seed(cfg.sim.rng_seed, "channel")
        if cfg.channel.snr_db is not None:
            channel = MultipathChannel.from_snr(paths_in, cfg.channel.snr_db, tx, seed)
        else:
            channel = MultipathChannel(paths_in, cfg.channel.noise_density or 0.0, seed)
        rx = apply(channel, tx).window(cfg.warmup_periods() * seq.length * m)

    with _stage("correlator"):
        dilated = slide_correlate(rx, params)
        sync = sync_reference(params, params.slide_period, rx.sample_rate, t0=rx.t0)
        t_zero = sync_time_zero(sync, params)
        pdp = undilate(dilated, t_zero)
        paths = extract_paths(pdp, cfg.correlator.threshold_db, cfg.correlator.smooth_chips)

    spectrum = power_spectrum(synthesize(seq, alpha, m, 1))
    summary = {
        "schema": "sounder.summary/1",
        "name": cfg.name,
        "degree": lfsr.degree,
        "taps": hex(lfsr.taps),
        "pn_length": lfsr.length,
        "alpha_hz": alpha,
        "beta_hz": cfg.rates.beta_hz,
        "gamma": sliding_factor(alpha, cfg.rates.beta_hz),
        "slide_period_s": params.slide_period,
        "lpf_bandwidth_hz": params.lpf_bandwidth,
        "resolution_s": 1.0 / alpha,
        "resolution_ns": 1e9 / alpha,
        "max_unambiguous_delay_s": lfsr.length / alpha,
        "first_null_hz": first_null(spectrum),
        "null_to_null_bandwidth_hz": null_to_null_bandwidth(spectrum),
        "sample_rate_hz": rx.sample_rate,
        "tx_periods": cfg.tx_periods(),
        "noise_density": channel.noise_density,
        "t_zero_s": t_zero,
        "paths": [{"delay_ns": p.delay * 1e9, "power_db": p.power_db} for p in paths],
    }
    files = ()
    if out_dir is not None:
        files = write_artifacts(cfg, Path(out_dir), dilated, pdp, paths, summary)
    return SoundingResult(dilated, pdp, paths, summary, files)


def write_artifacts(cfg, out: Path, dilated, pdp, paths, summary) -> tuple:
    out.mkdir(parents=True, exist_ok=True)
    # One row per 1/points_per_chip of a chip on either axis.
    step = max(1, int(round(pdp.chip_width / pdp.spacing / cfg.outputs.points_per_chip)))
    written = []
    if "csv" in cfg.outputs.formats:
        for name, profile in (("pdp.csv", pdp), ("pdp_dilated.csv", dilated)):
            (out / name).write_text(profile.to_csv(step))
            written.append(out / name)
    if "json" in cfg.outputs.formats:
        (out / "paths.json").write_text(paths_to_json(paths))
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        written += [out / "paths.json", out / "summary.json"]
    return tuple(written)


def resolve_output_dir(cfg: ExperimentConfig, override: Optional[str] = None) -> Path:
    """``override`` > ``$SOUNDER_OUTPUT_DIR``/<name> > ``outputs.dir`` from the config."""
    if override:
        return Path(override)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env) / cfg.name
    return Path(cfg.outputs.dir)
