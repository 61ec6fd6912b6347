"""Command-line interface.

Subcommands: design (filter-bank synthesis and sweep export), budget
(chain noise budget), simulate (synthetic flight generation), process
(flight-data reduction). Data goes to files, logs to stderr; verbosity
via the SPECBANK_LOG environment variable. Exit codes: 0 success, 1
config or input errors, 2 design non-convergence, 3 processing yielded
zero cycles on every channel.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from ._io import atomic_write_csv, atomic_write_text
from .config import (
    SCHEMA_VERSION,
    load_band_config,
    load_calibration,
    load_chain_config,
    load_pipeline_config,
    load_scenario_config,
)
from .errors import (
    BandEdgeError,
    ConfigError,
    SpecbankError,
    SynthesisError,
    TimestreamError,
)
from .filterbank import (
    BankLayout,
    assemble_bank,
    optimize_spacings,
    passband_metrics,
    synthesize_channel,
)
from .waveguide import guided_wavelength
from .pipeline import calibrate, deglitch, demodulate, load_timestream, quality_report
from .radiometry import BUDGET_SOURCES, noise_budget
from .synth import generate, write_timestream
from .touchstone import write_touchstone

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NONCONVERGENCE = 2
EXIT_NO_CYCLES = 3


def _write_json(obj: dict, path: Path) -> None:
    stamped = {"specbank_version": __version__, "schema_version": SCHEMA_VERSION}
    stamped.update(obj)
    atomic_write_text(json.dumps(stamped, indent=2, sort_keys=True) + "\n", path)


def cmd_design(args) -> int:
    cfg = load_band_config(args.band, lenient=args.lenient)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    # Highest frequency taps first along the guide.
    ordered = sorted(cfg.channels, key=lambda c: -c[0])
    designs = []
    statuses = []
    failed = False
    for f0, hpbw in ordered:
        try:
            design = synthesize_channel(f0, hpbw, cfg.guide)
            designs.append(design)
            statuses.append({"f0_ghz": f0 / 1e9, "hpbw_ghz": hpbw / 1e9,
                             "converged": True})
        except SynthesisError as exc:
            failed = True
            log.error("channel at %.4f GHz failed to converge: %s", f0 / 1e9, exc)
            statuses.append({"f0_ghz": f0 / 1e9, "hpbw_ghz": hpbw / 1e9,
                             "converged": False, "error": str(exc)})

    layout = None
    bank = None
    metrics = []
    if designs:
        if args.optimize:
            layout = optimize_spacings(designs, cfg.spacing_multipliers)
        else:
            band_center = float(np.mean([d.achieved_f0 for d in designs]))
            lam = guided_wavelength(cfg.guide, band_center)
            layout = BankLayout(channels=tuple(designs),
                                spacings=tuple(lam for _ in designs),
                                main_guide=cfg.guide,
                                spacing_multipliers=tuple(1.0 for _ in designs))
        bank = assemble_bank(layout, cfg.grid)
        for i in range(len(designs)):
            try:
                m = passband_metrics(bank, i)
                metrics.append({"f_peak_ghz": m.f_peak_hz / 1e9,
                                "hpbw_ghz": m.hpbw_hz / 1e9,
                                "peak_efficiency": m.peak_efficiency})
            except BandEdgeError as exc:
                log.warning("tap %d metrics unavailable: %s", i, exc)
                metrics.append(None)

    design_doc = {
        "band": cfg.name,
        "guide": {
            "name": cfg.guide.name,
            "width_a_m": cfg.guide.width_a,
            "height_b_m": cfg.guide.height_b,
            "conductivity_s_per_m": cfg.guide.conductivity,
        },
        "channel_status": statuses,
        "channels": [
            {
                "f0_target_hz": d.f0_target,
                "hpbw_target_hz": d.hpbw_target,
                "narrow_width_m": d.narrow_guide.width_a,
                "narrow_length_m": d.narrow_length,
                "cavity_length_m": d.cavity_length,
                "achieved_f0_hz": d.achieved_f0,
                "achieved_hpbw_hz": d.achieved_hpbw,
            }
            for d in designs
        ],
        "spacings_m": list(layout.spacings) if layout else [],
        "spacing_multipliers": list(layout.spacing_multipliers) if layout else [],
        "optimized": bool(args.optimize),
        "bank_metrics": metrics,
    }
    _write_json(design_doc, out / "design.json")

    if bank is not None:
        sweep = {"frequency_ghz": cfg.grid.ghz}
        for i in range(len(designs)):
            power = np.abs(bank.entries[:, 1 + i, 0]) ** 2
            sweep[f"tap_{i:02d}_db"] = 10.0 * np.log10(np.maximum(power, 1e-300))
        thru = np.abs(bank.entries[:, len(designs) + 1, 0]) ** 2
        sweep["thru_db"] = 10.0 * np.log10(np.maximum(thru, 1e-300))
        atomic_write_csv(pd.DataFrame(sweep), out / "sweep.csv")
        write_touchstone(bank, out / f"bank.s{bank.n_ports}p")

    return EXIT_NONCONVERGENCE if failed else EXIT_OK


def cmd_budget(args) -> int:
    chain, t_scene = load_chain_config(args.chain, lenient=args.lenient)
    budget = noise_budget(chain, t_scene)

    width = max(len(s) for s in BUDGET_SOURCES)
    print(f"noise budget for band {chain.band!r} "
          f"(T_scene = {t_scene:g} K, T_sys = {budget.t_sys_k:.1f} K)")
    for source in BUDGET_SOURCES:
        marker = "  <- dominant" if source == budget.dominant else ""
        print(f"  {source:<{width}}  {budget.contributions[source]:12.3f} mK*sqrt(s){marker}")
    print(f"  {'total':<{width}}  {budget.total_mk_rts:12.3f} mK*sqrt(s)")

    if args.out:
        rows = [{"source": s, "net_mk_rts": budget.contributions[s]}
                for s in BUDGET_SOURCES]
        rows.append({"source": "total", "net_mk_rts": budget.total_mk_rts})
        atomic_write_csv(pd.DataFrame(rows), Path(args.out))
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = load_scenario_config(args.scenario, lenient=args.lenient)
    ts, sidecar = generate(scenario)
    data_path, truth_path = write_timestream(ts, sidecar, args.out)
    log.info("wrote %s and %s", data_path, truth_path)
    return EXIT_OK


def cmd_process(args) -> int:
    cfg = load_pipeline_config(args.config, lenient=args.lenient)
    cal = load_calibration(args.cal, lenient=args.lenient)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ts = load_timestream(args.input,
                         chopper_threshold=cfg.chopper_threshold,
                         scene_when_high=cfg.scene_when_high,
                         sample_rate_hz=cfg.sample_rate_hz)
    ts, glitch_report = deglitch(ts, k=cfg.k_mad, buffer=cfg.buffer_samples,
                                 abs_floor=cfg.abs_floor_v)
    demod = demodulate(ts, min_phase_samples=cfg.min_phase_samples,
                       max_masked_fraction=cfg.max_masked_fraction)
    calibrated = calibrate(demod, cal)
    report = quality_report(calibrated, demod, ts)

    cycles = {"unix_time_s": calibrated.times}
    for name in ts.channel_names:
        if name in calibrated.temps_k:
            cycles[f"{name}_tb_k"] = calibrated.temps_k[name]
    atomic_write_csv(pd.DataFrame(cycles), out / "cycles.csv")

    glitch_rows = {
        "start_index": [iv[0] for iv in glitch_report.intervals],
        "stop_index": [iv[1] for iv in glitch_report.intervals],
        "start_unix_time_s": [float(ts.times[iv[0]]) for iv in glitch_report.intervals],
        "stop_unix_time_s": [float(ts.times[iv[1] - 1]) for iv in glitch_report.intervals],
        "peak_deviation_sigma": list(glitch_report.peak_deviation),
    }
    atomic_write_csv(pd.DataFrame(glitch_rows), out / "glitches.csv")

    report_doc = {
        "report": report,
        "deglitch": {
            "n_intervals": len(glitch_report.intervals),
            "fraction_flagged": glitch_report.fraction_flagged,
            "threshold_sigma": glitch_report.threshold_sigma,
            "robust_sigma_v": glitch_report.robust_sigma_v,
            "fallback_used": glitch_report.fallback_used,
        },
        "skipped_channels": list(calibrated.skipped_channels),
    }
    _write_json(report_doc, out / "report.json")

    any_cycles = any(v.size > 0 for v in calibrated.temps_k.values())
    if not any_cycles:
        log.error("every channel yielded zero cycles")
        return EXIT_NO_CYCLES
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specbank",
        description="Waveguide filter-bank design and chopped-radiometer data reduction",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="synthesize a filter bank and export sweeps")
    p.add_argument("--band", required=True, help="band config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--optimize", action="store_true",
                   help="optimize inter-filter spacings")
    p.add_argument("--lenient", action="store_true",
                   help="warn instead of failing on unknown config keys")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("budget", help="print a chain noise budget")
    p.add_argument("--chain", required=True, help="chain config JSON")
    p.add_argument("--out", help="optional CSV output path")
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("simulate", help="generate a synthetic flight timestream")
    p.add_argument("--scenario", required=True, help="scenario config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("process", help="reduce a flight timestream to temperatures")
    p.add_argument("--input", required=True, help="timestream CSV")
    p.add_argument("--cal", required=True, help="calibration table JSON")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_process)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("SPECBANK_LOG", "WARNING").upper()
    logging.basicConfig(stream=sys.stderr,
                        level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TimestreamError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SpecbankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
