"""``sounder`` command-line entry point.

Exit codes: 0 success, 1 runtime error (one JSON line on stderr), 2 usage
error (argparse).
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import load_config, parse_power_table
from .correlator import paths_to_json
from .errors import ConfigError, SounderError
from .pcb import (
    StackupParams,
    differential_impedance,
    microstrip_impedance,
    mm_to_mils,
    solve_width,
)
from .peripherals import DEFAULT_POWER_TABLE, power_budget
from .pipeline import resolve_output_dir, run_sounding
from .pn import LfsrConfig, generate_pn
from .waveform import first_null, null_to_null_bandwidth, power_spectrum, synthesize


def _int(text: str) -> int:
    return int(text, 0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sounder", description="Sliding-correlator channel sounder simulator and board toolkit."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pn = sub.add_parser("pn", help="print one period of an m-sequence")
    pn.add_argument("--degree", type=int, required=True, help="register length N (5..12)")
    pn.add_argument("--taps", type=_int, default=None, help="tap mask, e.g. 0x14; default built-in")
    pn.add_argument("--seed", type=_int, default=1, help="nonzero initial state (default 1)")
    pn.add_argument("--csv", action="store_true", help="emit bipolar values as CSV instead of bits")

    spec = sub.add_parser("spectrum", help="periodogram of an NRZ PN waveform")
    spec.add_argument("--degree", type=int, default=11, help="register length N (default 11)")
    spec.add_argument("--chip-rate", type=float, default=1e9, help="chip rate in Hz (default 1e9)")
    spec.add_argument("--oversampling", type=int, default=8, help="samples per chip (default 8)")
    spec.add_argument("--periods", type=int, default=1, help="PN periods analysed (default 1)")
    spec.add_argument("--csv", metavar="PATH", help="write freq_hz,power_db to PATH")

    sound = sub.add_parser("sound", help="run end-to-end sounding experiments")
    sound.add_argument("configs", nargs="+", metavar="CONFIG", help="experiment config file(s)")
    sound.add_argument("--out", help="output directory (single config only); overrides "
                       "$SOUNDER_OUTPUT_DIR and outputs.dir")
    sound.add_argument("--jobs", type=int, default=1, help="run configs in parallel processes")

    pcb = sub.add_parser("pcb", help="microstrip / differential impedance")
    pcb.add_argument("--h", type=float, required=True, help="trace-to-ground separation")
    pcb.add_argument("--w", type=float, help="trace width")
    pcb.add_argument("--t", type=float, required=True, help="copper thickness")
    pcb.add_argument("--er", type=float, required=True, help="dielectric constant")
    pcb.add_argument("--d", type=float, help="differential pair edge separation")
    pcb.add_argument("--solve-width", type=float, metavar="Z0",
                     help="solve the width for this target impedance instead")
    pcb.add_argument("--units", choices=("mil", "mm"), default="mil",
                     help="length units of the inputs (default mil); results are in mils")
    pcb.add_argument("--json", action="store_true", help="print a JSON record")

    power = sub.add_parser("power", help="EVB power budget")
    power.add_argument("--active", nargs="*", default=[], metavar="UNIT",
                       help="active sub-units; known: " + ", ".join(sorted(DEFAULT_POWER_TABLE.units)))
    power.add_argument("--table", metavar="PATH", help="power-table override file")
    power.add_argument("--json", action="store_true", help="print a JSON record")
    return parser


def _cmd_pn(args) -> None:
    seq = generate_pn(LfsrConfig(args.degree, args.taps, args.seed))
    sys.stdout.write(seq.to_csv() if args.csv else seq.to_bitstring() + "\n")


def _cmd_spectrum(args) -> None:
    seq = generate_pn(LfsrConfig(args.degree))
    spec = power_spectrum(synthesize(seq, args.chip_rate, args.oversampling, args.periods))
    if args.csv:
        Path(args.csv).write_text(spec.to_csv())
    print(f"first_null_hz {first_null(spec):.6e}")
    print(f"null_to_null_bandwidth_hz {null_to_null_bandwidth(spec):.6e}")


def _sound_one(path: str, out: str = None) -> dict:
    cfg = load_config(path)
    target = resolve_output_dir(cfg, out)
    result = run_sounding(cfg, target)
    return {"config": path, "output_dir": str(target), "gamma": result.summary["gamma"],
            "paths": json.loads(paths_to_json(result.paths))["paths"]}


def _cmd_sound(args) -> None:
    if args.out and len(args.configs) > 1:
        raise ConfigError("--out", "only valid with a single config")
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_sound_one, args.configs))
    else:
        reports = [_sound_one(path, args.out) for path in args.configs]
    for report in reports:
        print(json.dumps(report, sort_keys=True))


def _cmd_pcb(args) -> None:
    scale = mm_to_mils if args.units == "mm" else float
    h, t = scale(args.h), scale(args.t)
    if args.solve_width is not None:
        w = solve_width(args.solve_width, h, t, args.er)
        record = {"w_mils": w, "target_z0_ohm": args.solve_width}
        print(json.dumps(record, sort_keys=True) if args.json else f"{w:.2f}")
        return
    if args.w is None:
        raise ConfigError("--w", "required unless --solve-width is given")
    d = scale(args.d) if args.d is not None else None
    p = StackupParams(h=h, w=scale(args.w), t=t, er=args.er, d=d)
    record = {"z0_ohm": microstrip_impedance(p)}
    if d is not None:
        record["zdiff_ohm"] = differential_impedance(p)
    if args.json:
        print(json.dumps(record, sort_keys=True))
    else:
        print(f"{record['z0_ohm']:.2f}")
        if d is not None:
            print(f"{record['zdiff_ohm']:.2f}")


def _cmd_power(args) -> None:
    table = DEFAULT_POWER_TABLE
    if args.table:
        table = parse_power_table(Path(args.table).read_text())
    report = power_budget(table, args.active)
    if args.json:
        print(json.dumps(report.to_dict(), sort_keys=True))
        return
    for rail, amps in report.rail_currents.items():
        print(f"{rail.lstrip('+').rstrip('V')} V rail: {amps * 1e3:g} mA")
    print(f"{table.input_voltage:g} V input: {report.input_current * 1e3:g} mA "
          f"(measured board peak {report.measured_total * 1e3:g} mA)")


# Flag blamed for a module error when the command does not say otherwise.
ERROR_FLAGS = {
    "InvalidDegreeError": "--degree",
    "InvalidTapsError": "--taps",
    "NonMaximalTapsError": "--taps",
    "InvalidInputError": "--seed",
    "AliasingRiskError": "--oversampling",
    "NonphysicalGeometryError": "--w",
    "MissingParameterError": "--d",
    "UnachievableTargetError": "--solve-width",
    "UnknownUnitError": "--active",
}
PCB_INPUT_FLAGS = ("h", "w", "t", "er", "d")

COMMANDS = {
    "pn": _cmd_pn,
    "spectrum": _cmd_spectrum,
    "sound": _cmd_sound,
    "pcb": _cmd_pcb,
    "power": _cmd_power,
}


def _blame(command: str, exc: SounderError) -> str:
    name = type(exc).__name__
    if command == "pcb" and name == "InvalidInputError":
        word = str(exc).split()[0]
        return f"--{word}" if word in PCB_INPUT_FLAGS else "--h"
    if command == "spectrum" and name == "InvalidInputError":
        return "--chip-rate"
    return ERROR_FLAGS.get(name, f"<{command}>")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except SounderError as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, ConfigError):
            record["key"] = exc.key
        else:
            record["key"] = _blame(args.command, exc)
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
