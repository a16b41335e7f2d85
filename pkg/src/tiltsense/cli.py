"""Command-line entry points.

Verbs: simulate, detect, estimate, sweep, export, validate-config.
Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

CONFIG_EXIT = 2
RUNTIME_EXIT = 3


def _add_config_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="path to a JSON scenario config")
    p.add_argument("--preset", help="bundled preset name (see validate-config --list)")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--delta-theta", type=float, dest="delta_theta",
                   help="override the injected tilt offset (degrees)")
    p.add_argument("--waveform", choices=("ofdm", "lfm"),
                   help="override the sensing waveform")
    p.add_argument("--set", action="append", default=[], metavar="KEY.PATH=VALUE",
                   help="override any config key by dotted path (repeatable)")


def _resolve_config(args):
    from .config import ConfigError, load_config, load_preset

    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.delta_theta is not None:
        overrides.append(f"fault.offset_deg={args.delta_theta}")
    if getattr(args, "waveform", None):
        overrides.append(f"waveform={args.waveform}")
        cfg_probe = None
        try:
            cfg_probe = (load_config(args.config) if args.config
                         else load_preset(args.preset) if args.preset else None)
        except ConfigError:
            cfg_probe = None
        if cfg_probe is not None and cfg_probe.waveform != args.waveform:
            n_dl = int(cfg_probe.get("slot.n_dl")) + (
                1 if args.waveform == "ofdm" else -1
            )
            overrides.append(f"slot.n_dl={n_dl}")
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        return load_config(args.config, overrides)
    if args.preset:
        return load_preset(args.preset, overrides)
    raise ConfigError("a --config file or --preset name is required")


def _print_run_summary(artifacts):
    for d in artifacts.detections:
        mark = "ATF DETECTED" if d.decision else "ok"
        print(f"scan pair ({d.scan_index - 1},{d.scan_index}): "
              f"flagged {d.flagged_bins}/{d.valid_bins} "
              f"({d.flagged_fraction:.4f}) -> {mark}")
    head = artifacts.headline_estimates()
    for method, value in head.items():
        shown = "n/a" if value is None else f"{value:.3f} deg"
        print(f"{method} estimate at scan {artifacts.fail_scan}: {shown}")
    for note in artifacts.estimation_notes:
        print(f"note: {note}")


def cmd_validate(args):
    from .config import available_presets

    if args.list:
        for name in available_presets():
            print(name)
        return 0
    cfg = _resolve_config(args)
    plan = cfg.slot_plan()
    print(f"config ok ({cfg.source})")
    print(f"  waveform={cfg.waveform} mu={plan.numerology.mu} "
          f"slots={plan.n_dl}+{plan.sensing_tx_symbols}+{plan.n_sense_rx}+{plan.n_ul}")
    print(f"  sample_rate={cfg.sample_rate_hz:.6g} Hz "
          f"scans={cfg.get('scan.count')} fault at scan {cfg.get('fault.at_scan')} "
          f"offset={cfg.get('fault.offset_deg')} deg")
    print(f"  scene: {len(cfg.scene().static)} static, {len(cfg.scene().moving)} moving")
    print(f"  sha256={cfg.config_hash()}")
    return 0


def cmd_simulate(args):
    from .runner import export_run, run_scenario

    cfg = _resolve_config(args)
    artifacts = run_scenario(cfg)
    _print_run_summary(artifacts)
    if args.out:
        export_run(artifacts, args.out, fmt=args.format,
                   include_raw=not args.no_raw)
        print(f"artifacts written to {args.out}")
    return 0


def _load_stack(run_dir):
    from .runner import read_run

    manifest, chms = read_run(run_dir)
    stack = np.array([chm.grid.mean(axis=0) for chm in chms])
    return manifest, chms, stack


def cmd_detect(args):
    from .estimators import MwrChangeDetector

    manifest, _, stack = _load_stack(args.run)
    det_cfg = manifest["config"]["detector"]
    tau = args.tau if args.tau is not None else manifest.get("tau_reg")
    detector = MwrChangeDetector(
        threshold=args.gamma if args.gamma is not None else det_cfg["threshold"],
        min_fraction=(args.min_fraction if args.min_fraction is not None
                      else det_cfg["min_fraction"]),
        tau_reg=tau,
    ).fit(stack)
    any_hit = False
    for r in detector.results_:
        mark = "ATF DETECTED" if r.decision else "ok"
        any_hit = any_hit or r.decision
        print(f"scan pair ({r.scan_index - 1},{r.scan_index}): "
              f"flagged {r.flagged_bins}/{r.valid_bins} "
              f"({r.flagged_fraction:.4f}) -> {mark}")
    print("decision: failure detected" if any_hit else "decision: no failure")
    return 0


def cmd_estimate(args):
    from .estimators import PatternMatchTilt, TransientModelTilt

    manifest, _, stack = _load_stack(args.run)
    cfg = manifest["config"]
    fail = args.fail_scan or manifest["fail_scan"]
    fs = cfg["sampling"]["sample_rate_hz"]
    if fs is None:
        fs = 1024.0 * (2 ** cfg["numerology"]["mu"]) * 15e3
    common = dict(
        sample_rate_hz=fs,
        bs_height_m=cfg["bs"]["position"][2],
        hpbw_elevation_deg=cfg["antenna"]["hpbw_elevation_deg"],
        gain_max_db=cfg["antenna"]["gain_max_db"],
        side_lobe_db=cfg["antenna"]["side_lobe_db"],
        front_back_db=cfg["antenna"]["front_back_db"],
        nominal_downtilt_deg=cfg["bs"]["downtilt_deg"],
        window=cfg["scan"]["rma_window"],
        fail_scan=fail,
        peak_prominence_db=cfg["peaks"]["prominence_db"],
        peak_min_separation_bins=cfg["peaks"]["min_separation_bins"],
        peak_max_count=cfg["peaks"]["max_peaks"],
    )
    results = {}
    if args.method in ("both", "pattern"):
        est = PatternMatchTilt(
            lookup_step_deg=cfg["estimator"]["lookup_step_deg"],
            trim_fraction=cfg["estimator"]["trim_fraction"], **common,
        ).fit(stack)
        results["pattern_match"] = est.offset_deg_
    if args.method in ("both", "transient"):
        est = TransientModelTilt(
            grid_max_deg=cfg["estimator"]["grid_max_deg"],
            grid_step_deg=cfg["estimator"]["grid_step_deg"],
            two_way=cfg["estimator"]["two_way_ratio"],
            resolution_deg=cfg["estimator"]["resolution_deg"], **common,
        ).fit(stack)
        results["transient_model"] = est.offset_deg_
    for method, value in results.items():
        print(f"{method} estimate at scan {fail}: {value:.3f} deg")
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)
    return 0


def _parse_deltas(spec: str):
    if ":" in spec:
        parts = [float(v) for v in spec.split(":")]
        if len(parts) != 3:
            raise ValueError("range spec is start:stop:step")
        start, stop, step = parts
        n = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 9) for i in range(n)]
    return [float(v) for v in spec.split(",") if v.strip()]


def cmd_sweep(args):
    from .runner import sweep_tilt, write_sweep_csv

    cfg = _resolve_config(args)
    deltas = _parse_deltas(args.delta_thetas)
    waveforms = (["ofdm", "lfm"] if args.waveforms == "both"
                 else [args.waveforms])
    rows, traces = sweep_tilt(cfg, deltas, waveforms=waveforms,
                              n_seeds=args.seeds)
    for row in rows:
        print(f"delta={row['delta_theta_deg']:.2f} {row['waveform']} "
              f"{row['method']}: est={row['mean_estimate_deg']:.3f} "
              f"abs_err={row['abs_error_deg']:.3f} pct={row['pct_error']:.1f}%")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_sweep_csv(rows, os.path.join(args.out, "sweep.csv"))
        if traces:
            write_sweep_csv(traces, os.path.join(args.out, "sweep_traces.csv"))
        print(f"sweep tables written to {args.out}")
    return 0


def cmd_export(args):
    from .runner import export_run, read_run, run_scenario
    from .config import ScenarioConfig

    if args.run:
        manifest, chms = read_run(args.run)
        cfg = ScenarioConfig(manifest["config"], source=f"run:{args.run}")
        from .pipeline import azimuth_average
        from .runner import RunArtifacts

        stack = np.array([azimuth_average(c).power for c in chms])
        artifacts = RunArtifacts(
            config=cfg, seed=manifest["seed"], raw_chms=[], smoothed_chms=chms,
            profiles=stack, detections=[], pattern_reports={},
            transient_reports={}, estimation_notes=[],
            tau_reg=manifest.get("tau_reg", float("nan")),
            noise_floor=manifest.get("noise_floor_w", float("nan")),
        )
    else:
        cfg = _resolve_config(args)
        artifacts = run_scenario(cfg)
    export_run(artifacts, args.to, fmt=args.format, include_raw=False)
    print(f"CHM matrices exported to {args.to}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tiltsense",
        description="ISAC clutter-heat-map simulation and antenna-tilt diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-config", help="check a config or preset")
    _add_config_args(p)
    p.add_argument("--list", action="store_true", help="list bundled presets")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run one scenario end to end")
    _add_config_args(p)
    p.add_argument("--out", help="directory for run artifacts")
    p.add_argument("--format", choices=("csv", "npz"), default="csv")
    p.add_argument("--no-raw", action="store_true",
                   help="skip exporting unsmoothed heat maps")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="run failure detection on an exported run")
    p.add_argument("--run", required=True, help="run directory with a manifest")
    p.add_argument("--gamma", type=float, help="detection threshold override")
    p.add_argument("--min-fraction", type=float, dest="min_fraction")
    p.add_argument("--tau", type=float, help="MWR regularizer override")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("estimate", help="estimate the tilt offset from an exported run")
    p.add_argument("--run", required=True)
    p.add_argument("--method", choices=("both", "pattern", "transient"),
                   default="both")
    p.add_argument("--fail-scan", type=int, dest="fail_scan")
    p.add_argument("--json-out", dest="json_out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="run a tilt-offset sweep")
    _add_config_args(p)
    p.add_argument("--delta-thetas", default="0.5:6:0.5",
                   help="comma list or start:stop:step (degrees)")
    p.add_argument("--waveforms", choices=("ofdm", "lfm", "both"), default="both")
    p.add_argument("--seeds", type=int, default=1,
                   help="seed replicates per sweep cell")
    p.add_argument("--out", help="directory for sweep tables")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export", help="export CHM matrices (rerun or re-export)")
    _add_config_args(p)
    p.add_argument("--run", help="existing run directory to re-export")
    p.add_argument("--to", required=True, help="destination directory")
    p.add_argument("--format", choices=("csv", "npz"), default="csv")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    from .config import ConfigError

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG_EXIT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
