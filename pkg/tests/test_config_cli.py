import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from sounder.cli import main
from sounder.config import dump_config, load_config, parse_config
from sounder.correlator import sliding_factor
from sounder.errors import ConfigError
from sounder.pipeline import derive_seed, run_sounding

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = sorted((ROOT / "configs").glob("*.cfg"))

MINIMAL = """
[experiment]
schema = 1
name = tiny

[pn]
degree = 5

[rates]
alpha_hz = 1e9
beta_hz = 0.98e9

[channel]
taps =
    0.0 1.0 0.0
    4.0 0.0 0.5
"""


def test_bundled_configs_present():
    names = {p.stem for p in CONFIGS}
    assert {"table1", "identity", "two_path_1ns"} <= names


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_round_trip(path):
    cfg = load_config(path)
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert dump_config(again) == dump_config(cfg)


def test_minimal_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.sim.oversampling == 8
    assert list(cfg.channel.path_list()) == [(0.0, 1 + 0j), (4e-9, 0.5j)]
    assert cfg.slide_params().lpf_bandwidth == pytest.approx(2e6)


@pytest.mark.parametrize(
    "edit, key",
    [
        (("beta_hz = 0.98e9", "beta_hz = 1.2e9"), "rates.beta_hz"),
        (("degree = 5", "degree = 13"), "pn.degree"),
        (("degree = 5", "degree = 5\ntaps = 0x21"), "pn.taps"),
        (("degree = 5", "degree = 5\nseed = 0"), "pn.seed"),
        (("degree = 5", "degree = 5\nflavour = mint"), "pn.flavour"),
        (("[channel]", "[bogus]\nx = 1\n\n[channel]"), "bogus"),
        (("    4.0 0.0 0.5", "    4.0 zero 0.5"), "channel.taps"),
        (("schema = 1", "schema = 2"), "experiment.schema"),
    ],
)
def test_errors_name_the_key(edit, key):
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL.replace(*edit))
    assert key in info.value.key


def test_lpf_above_difference_is_rejected():
    text = MINIMAL.replace("[channel]", "[correlator]\nlpf_bandwidth_hz = 30e6\n\n[channel]")
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == "correlator.lpf_bandwidth_hz"


def test_derive_seed_is_stable_and_stage_specific():
    assert derive_seed(7, "channel") == derive_seed(7, "channel")
    assert derive_seed(7, "channel") != derive_seed(7, "replica")
    assert derive_seed(7, "channel") != derive_seed(8, "channel")
    assert 0 <= derive_seed(7, "channel") < 2**64


def test_summary_fields(tmp_path):
    cfg = load_config(ROOT / "configs" / "table1.cfg")
    result = run_sounding(cfg, tmp_path)
    s = result.summary
    assert s["gamma"] == sliding_factor(cfg.rates.alpha_hz, cfg.rates.beta_hz)
    assert s["resolution_ns"] == pytest.approx(1.0)
    assert s["null_to_null_bandwidth_hz"] == pytest.approx(2e9, rel=1e-3)
    assert s["pn_length"] == 2047
    on_disk = json.loads((tmp_path / "summary.json").read_text())
    assert on_disk["schema"] == "sounder.summary/1"
    assert {p.name for p in result.files} == {"pdp.csv", "pdp_dilated.csv", "paths.json", "summary.json"}


def test_table1_recovers_channel():
    cfg = load_config(ROOT / "configs" / "table1.cfg")
    paths = run_sounding(cfg).paths
    want = [0.0, 12e-9, 35e-9]
    assert len(paths) == 3
    for got, delay in zip(paths, want):
        assert abs(got.delay - delay) <= 1e-9


# CLI


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_pn(capsys):
    code, out, _ = run(capsys, "pn", "--degree", "5")
    assert code == 0
    assert out.strip() == "0000100101100111110001101110101"
    code, out, _ = run(capsys, "pn", "--degree", "5", "--csv")
    assert out.splitlines()[0] == "chip" and len(out.splitlines()) == 32


def test_cli_pn_errors_are_json(capsys):
    code, _, err = run(capsys, "pn", "--degree", "6", "--taps", "0x20")
    assert code == 1
    record = json.loads(err.strip())
    assert record["error"] == "NonMaximalTapsError"
    assert record["key"] == "--taps"
    assert "period 6" in record["message"]


def test_cli_spectrum(capsys, tmp_path):
    code, out, _ = run(capsys, "spectrum", "--degree", "7", "--csv", str(tmp_path / "s.csv"))
    assert code == 0
    lines = dict(line.split() for line in out.splitlines())
    assert float(lines["first_null_hz"]) == pytest.approx(1e9, rel=1e-3)
    assert float(lines["null_to_null_bandwidth_hz"]) == pytest.approx(2e9, rel=1e-3)
    assert (tmp_path / "s.csv").read_text().startswith("freq_hz,power_db")


def test_cli_pcb(capsys):
    code, out, _ = run(capsys, "pcb", "--h", "9.13", "--w", "15.75", "--t", "1.4", "--er", "4.2")
    assert code == 0
    assert abs(float(out) - 50.01) <= 0.1
    code, out, _ = run(
        capsys, "pcb", "--h", "9.13", "--w", "15.75", "--t", "1.4", "--er", "4.2", "--d", "25", "--json"
    )
    record = json.loads(out)
    assert record["zdiff_ohm"] == pytest.approx(96.56, abs=0.2)
    code, out, _ = run(capsys, "pcb", "--h", "9.13", "--t", "1.4", "--er", "4.2", "--solve-width", "50.01")
    assert float(out) == pytest.approx(15.75, abs=0.05)


def test_cli_pcb_mm_units(capsys):
    mm = 25.4 / 1000
    code, out, _ = run(
        capsys, "pcb", "--units", "mm", "--h", str(9.13 * mm), "--w", str(15.75 * mm),
        "--t", str(1.4 * mm), "--er", "4.2",
    )
    assert abs(float(out) - 50.01) <= 0.1


def test_cli_pcb_error_names_flag(capsys):
    code, _, err = run(capsys, "pcb", "--h", "9.13", "--w", "15.75", "--t", "1.4", "--er", "0.5")
    assert code == 1
    assert json.loads(err)["key"] == "--er"
    code, _, err = run(capsys, "pcb", "--h", "9.13", "--t", "1.4", "--er", "4.2", "--solve-width", "200")
    assert json.loads(err)["key"] == "--solve-width"


def test_cli_power(capsys):
    code, out, _ = run(capsys, "power", "--active", "clock_buffer")
    assert code == 0
    assert "3.3 V rail: 44 mA" in out.splitlines()
    assert "-2.5 V rail: 1 mA" in out.splitlines()
    code, out, _ = run(capsys, "power", "--active", "diff_converter", "--json")
    record = json.loads(out)
    assert record["rail_currents_a"]["+2.5V"] == pytest.approx(5e-3)
    code, _, err = run(capsys, "power", "--active", "warp_core")
    assert code == 1 and json.loads(err)["key"] == "--active"


def test_cli_usage_errors_exit_2(capsys):
    for argv in (["frobnicate"], ["pn"], ["pn", "--degree", "5", "--bogus"]):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 2
    capsys.readouterr()


def test_cli_help_lists_flags(capsys):
    with pytest.raises(SystemExit) as info:
        main(["pcb", "--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--h", "--w", "--t", "--er", "--d", "--solve-width", "--units", "--json"):
        assert flag in out


def test_cli_sound_env_override(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SOUNDER_OUTPUT_DIR", str(tmp_path))
    code, out, _ = run(capsys, "sound", str(ROOT / "configs" / "identity.cfg"))
    assert code == 0
    report = json.loads(out)
    assert Path(report["output_dir"]) == tmp_path / "identity"
    assert (tmp_path / "identity" / "paths.json").exists()


def test_cli_sound_bad_config(capsys, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text(MINIMAL.replace("beta_hz = 0.98e9", "beta_hz = 2e9"))
    code, _, err = run(capsys, "sound", str(bad), "--out", str(tmp_path / "o"))
    assert code == 1
    assert json.loads(err)["key"] == "rates.beta_hz"


def test_cli_sound_parallel_matches_serial(capsys, tmp_path, monkeypatch):
    configs = [str(ROOT / "configs" / "identity.cfg"), str(ROOT / "configs" / "two_path_1ns.cfg")]
    monkeypatch.setenv("SOUNDER_OUTPUT_DIR", str(tmp_path / "serial"))
    _, serial, _ = run(capsys, "sound", *configs)
    monkeypatch.setenv("SOUNDER_OUTPUT_DIR", str(tmp_path / "parallel"))
    _, parallel, _ = run(capsys, "sound", "--jobs", "2", *configs)
    strip = lambda text: [{k: v for k, v in json.loads(l).items() if k != "output_dir"} for l in text.splitlines()]
    assert strip(serial) == strip(parallel)
    for name in ("identity", "two_path_1ns"):
        for f in ("pdp.csv", "paths.json", "summary.json"):
            assert (tmp_path / "serial" / name / f).read_bytes() == (tmp_path / "parallel" / name / f).read_bytes()


def test_console_script_module_entry(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "sounder", "pn", "--degree", "5"],
        capture_output=True, text=True, env={**os.environ},
    )
    assert proc.returncode == 0
    assert len(proc.stdout.strip()) == 31
    proc = subprocess.run([sys.executable, "-m", "sounder", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2
