"""End-to-end experiment drivers: scan loops, detection/estimation, export.

A run executes the configured number of scans, smooths the heat maps,
evaluates the failure detector on every consecutive scan pair, and applies
both tilt estimators from the failure scan onward. Artifacts are written as
delimited text (one matrix per scan) plus JSON records, finalized by a
manifest so that interrupted exports are recognizable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import __version__
from .analysis import (
    DetectionResult,
    EstimationReport,
    EstimationUnavailable,
    PatternLookup,
    PeakParams,
    detect_atf,
    estimate_tilt_pattern_match,
    estimate_tilt_transient,
    mwr_profile,
)
from .config import ScenarioConfig
from .pipeline import ClutterHeatMap, RmaState, azimuth_average, rma_update
from .seeding import SWEEP_STREAM, derive_seed

MANIFEST_NAME = "manifest.json"


@dataclass
class RunArtifacts:
    """Everything one scenario run produces."""

    config: ScenarioConfig
    seed: int
    raw_chms: list[ClutterHeatMap]
    smoothed_chms: list[ClutterHeatMap]
    profiles: np.ndarray  # azimuth-averaged smoothed, scans x range
    detections: list[DetectionResult]
    pattern_reports: dict[int, EstimationReport]
    transient_reports: dict[int, EstimationReport]
    estimation_notes: list[str]
    tau_reg: float
    noise_floor: float

    @property
    def fail_scan(self) -> int:
        return int(self.config.get("fault.at_scan"))

    def headline_estimates(self) -> dict[str, float | None]:
        k = self.fail_scan
        pat = self.pattern_reports.get(k)
        tra = self.transient_reports.get(k)
        return {
            "pattern_match": None if pat is None else pat.delta_theta_deg,
            "transient_model": None if tra is None else tra.delta_theta_deg,
        }


def run_scenario(cfg: ScenarioConfig, seed: int | None = None,
                 keep_raw: bool = True) -> RunArtifacts:
    """Execute all scans and the detection/estimation chain for one config."""
    scanner = cfg.scanner(seed)
    tilt = cfg.tilt_state()
    n_scans = int(cfg.get("scan.count"))
    window = int(cfg.get("scan.rma_window"))
    fail_scan = int(cfg.get("fault.at_scan"))

    state = RmaState(None, window)
    raw, smoothed, profiles = [], [], []
    for k in range(1, n_scans + 1):
        x = scanner.scan_sector(tilt, k)
        state = rma_update(state, x.grid)
        y = ClutterHeatMap(state.smoothed.copy(), x.azimuth_axis_deg,
                           x.range_axis_m, k)
        if keep_raw:
            raw.append(x)
        smoothed.append(y)
        profiles.append(azimuth_average(y).power)
    stack = np.array(profiles)

    floor = scanner.noise_floor()
    tau_cfg = cfg.get("detector.tau_reg")
    tau = float(tau_cfg) if tau_cfg is not None else (
        10.0 * floor if floor > 0.0 else 1e-30
    )
    gamma = float(cfg.get("detector.threshold"))
    min_fraction = float(cfg.get("detector.min_fraction"))
    detections = [
        detect_atf(mwr_profile(stack[k - 1], stack[k - 2], tau), gamma,
                   min_fraction, scan_index=k, tau_reg=tau)
        for k in range(2, n_scans + 1)
    ]

    peaks = PeakParams(
        prominence_db=float(cfg.get("peaks.prominence_db")),
        min_separation_bins=int(cfg.get("peaks.min_separation_bins")),
        max_peaks=int(cfg.get("peaks.max_peaks")),
        dynamic_range_db=float(cfg.get("peaks.dynamic_range_db")),
    )
    lookup = PatternLookup.from_pattern(
        cfg.pattern(), step_deg=float(cfg.get("estimator.lookup_step_deg")),
        nominal_downtilt_deg=float(cfg.get("bs.downtilt_deg")),
    )
    bs_height = cfg.base_station().height_m
    boresight_zenith = 90.0 + float(cfg.get("bs.downtilt_deg"))

    pattern_reports: dict[int, EstimationReport] = {}
    transient_reports: dict[int, EstimationReport] = {}
    notes: list[str] = []
    for k in range(fail_scan, n_scans + 1):
        if k >= 3 and window >= 3:
            try:
                pattern_reports[k] = estimate_tilt_pattern_match(
                    stack[k - 1], stack[k - 2], stack[k - 3], window, lookup,
                    bs_height_m=bs_height, range_axis_m=scanner.range_axis_m,
                    scan_index=k, peak_params=peaks,
                    trim_fraction=float(cfg.get("estimator.trim_fraction")),
                )
            except EstimationUnavailable as exc:
                notes.append(f"pattern_match@{k}: {exc}")
        else:
            notes.append(f"pattern_match@{k}: needs three scans and window >= 3")
        if fail_scan >= 2:
            try:
                transient_reports[k] = estimate_tilt_transient(
                    stack, scanner.range_axis_m, window, fail_scan, cfg.pattern(),
                    bs_height_m=bs_height, eval_scan=k,
                    boresight_zenith_deg=boresight_zenith, peak_params=peaks,
                    grid_max_deg=float(cfg.get("estimator.grid_max_deg")),
                    grid_step_deg=float(cfg.get("estimator.grid_step_deg")),
                    two_way=bool(cfg.get("estimator.two_way_ratio")),
                    resolution_deg=float(cfg.get("estimator.resolution_deg")),
                )
            except EstimationUnavailable as exc:
                notes.append(f"transient_model@{k}: {exc}")

    return RunArtifacts(
        config=cfg,
        seed=cfg.seed if seed is None else int(seed),
        raw_chms=raw,
        smoothed_chms=smoothed,
        profiles=stack,
        detections=detections,
        pattern_reports=pattern_reports,
        transient_reports=transient_reports,
        estimation_notes=notes,
        tau_reg=tau,
        noise_floor=floor,
    )


# ----------------------------------------------------------------------
# Export / import
# ----------------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def write_chm_csv(path, grid, azimuth_axis, range_axis):
    """Delimited matrix: header row of range labels, azimuth-labeled rows.

    Values are printed with full round-trip precision, so a re-import
    reproduces the matrix exactly.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("azimuth_deg," + ",".join(_fmt(r) for r in range_axis) + "\n")
        for az, row in zip(azimuth_axis, grid):
            fh.write(_fmt(az) + "," + ",".join(_fmt(v) for v in row) + "\n")


def read_chm_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        range_axis = np.array([float(v) for v in header[1:]])
        azimuth, rows = [], []
        for line in fh:
            cells = line.rstrip("\n").split(",")
            azimuth.append(float(cells[0]))
            rows.append([float(v) for v in cells[1:]])
    return np.array(rows), np.array(azimuth), range_axis


def _detection_record(d: DetectionResult) -> dict:
    return {
        "scan_index": d.scan_index,
        "flagged_bins": d.flagged_bins,
        "valid_bins": d.valid_bins,
        "flagged_fraction": d.flagged_fraction,
        "decision": bool(d.decision),
        "threshold": d.threshold,
        "tau_reg": d.tau_reg,
        "min_fraction": d.min_fraction,
    }


def _estimation_record(r: EstimationReport) -> dict:
    return {
        "method": r.method,
        "scan_index": r.scan_index,
        "delta_theta_deg": r.delta_theta_deg,
        "raw_delta_theta_deg": r.raw_delta_theta_deg,
        "peak_indices": [int(i) for i in r.peak_indices],
        "peak_estimates_deg": [float(v) for v in r.peak_estimates_deg],
    }


def export_run(artifacts: RunArtifacts, out_dir, fmt: str = "csv",
               include_raw: bool = True) -> str:
    """Write all artifacts; the manifest lands last (atomic finalize)."""
    if fmt not in ("csv", "npz"):
        raise ValueError(f"unknown export format {fmt!r}")
    os.makedirs(out_dir, exist_ok=True)
    cfg = artifacts.config
    groups = {"chm": artifacts.smoothed_chms}
    if include_raw and artifacts.raw_chms:
        groups["chm_raw"] = artifacts.raw_chms
    for sub, chms in groups.items():
        sub_dir = os.path.join(out_dir, sub)
        os.makedirs(sub_dir, exist_ok=True)
        for chm in chms:
            stem = os.path.join(sub_dir, f"scan_{chm.scan_index:03d}")
            if fmt == "csv":
                write_chm_csv(stem + ".csv", chm.grid, chm.azimuth_axis_deg,
                              chm.range_axis_m)
            else:
                np.savez_compressed(stem + ".npz", grid=chm.grid,
                                    azimuth_deg=chm.azimuth_axis_deg,
                                    range_m=chm.range_axis_m,
                                    scan_index=chm.scan_index)

    axis = artifacts.smoothed_chms[0].range_axis_m
    with open(os.path.join(out_dir, "profiles.csv"), "w", encoding="utf-8") as fh:
        scans = ",".join(f"scan_{k + 1}" for k in range(len(artifacts.profiles)))
        fh.write(f"range_m,{scans}\n")
        for i, r in enumerate(axis):
            vals = ",".join(_fmt(p[i]) for p in artifacts.profiles)
            fh.write(f"{_fmt(r)},{vals}\n")

    with open(os.path.join(out_dir, "mwr.csv"), "w", encoding="utf-8") as fh:
        pairs = ",".join(f"pair_{d.scan_index - 1}_{d.scan_index}"
                         for d in artifacts.detections)
        fh.write(f"range_m,{pairs}\n")
        for i, r in enumerate(axis):
            vals = ",".join(
                "" if not np.isfinite(d.eta[i]) else _fmt(d.eta[i])
                for d in artifacts.detections
            )
            fh.write(f"{_fmt(r)},{vals}\n")

    records = {
        "detections": [_detection_record(d) for d in artifacts.detections],
        "estimates": {
            "pattern_match": [_estimation_record(r)
                              for r in artifacts.pattern_reports.values()],
            "transient_model": [_estimation_record(r)
                                for r in artifacts.transient_reports.values()],
            "headline": artifacts.headline_estimates(),
            "notes": artifacts.estimation_notes,
        },
    }
    for name, payload in records.items():
        with open(os.path.join(out_dir, f"{name}.json"), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)

    plan = cfg.slot_plan()
    manifest = {
        "format": fmt,
        "package_version": __version__,
        "config": cfg.data,
        "config_sha256": cfg.config_hash(),
        "seed": artifacts.seed,
        "waveform": cfg.waveform,
        "scan_count": len(artifacts.smoothed_chms),
        "fail_scan": artifacts.fail_scan,
        "axes": {
            "n_azimuth_bins": int(artifacts.smoothed_chms[0].grid.shape[0]),
            "n_range_bins": int(artifacts.smoothed_chms[0].grid.shape[1]),
            "range_bin_m": float(axis[1] - axis[0]) if len(axis) > 1 else 0.0,
            "azimuth_bin_deg": 1.0,
            "units": "linear power",
        },
        "timing": {
            "symbol_duration_s": plan.numerology.symbol_duration_s,
            "slot_duration_s": plan.slot_duration_s,
            "frame_duration_s": plan.slot_duration_s * plan.n_slots_per_frame,
            "scan_duration_s": plan.slot_duration_s * plan.n_slots_per_frame
            * int(cfg.get("sector.azimuth_bins")),
            "moving_target_clock": "positions advance per whole slot",
        },
        "noise_floor_w": artifacts.noise_floor,
        "tau_reg": artifacts.tau_reg,
    }
    tmp = os.path.join(out_dir, MANIFEST_NAME + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    os.replace(tmp, os.path.join(out_dir, MANIFEST_NAME))
    return out_dir


def read_run(run_dir):
    """Load the manifest and smoothed CHM stack from an exported run."""
    manifest_path = os.path.join(run_dir, MANIFEST_NAME)
    if not os.path.isfile(manifest_path):
        raise FileNotFoundError(f"{run_dir} has no manifest (incomplete export?)")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    chm_dir = os.path.join(run_dir, "chm")
    chms = []
    for name in sorted(os.listdir(chm_dir)):
        path = os.path.join(chm_dir, name)
        if name.endswith(".csv"):
            grid, az, rng = read_chm_csv(path)
            scan_index = int(name[len("scan_"):-len(".csv")])
        elif name.endswith(".npz"):
            data = np.load(path)
            grid, az, rng = data["grid"], data["azimuth_deg"], data["range_m"]
            scan_index = int(data["scan_index"])
        else:
            continue
        chms.append(ClutterHeatMap(grid, az, rng, scan_index))
    chms.sort(key=lambda c: c.scan_index)
    return manifest, chms


# ----------------------------------------------------------------------
# Tilt sweep
# ----------------------------------------------------------------------

def sweep_tilt(cfg: ScenarioConfig, deltas, waveforms=None, n_seeds: int = 1):
    """One run per (tilt offset, waveform, seed replicate); error table rows.

    Every cell derives an isolated seed from the master seed, the offset,
    and the waveform, so rows are independent of sweep order. Cell failures
    are recorded and the sweep continues.
    """
    if not len(list(deltas)):
        raise ValueError("sweep needs at least one tilt offset")
    waveforms = list(waveforms or [cfg.waveform])
    rows, traces = [], []
    for delta in deltas:
        for wf in waveforms:
            updates = {"waveform": wf, "fault__offset_deg": float(delta)}
            if wf != cfg.waveform:
                # the LFM slot spends one extra symbol on the chirp
                updates["slot__n_dl"] = int(cfg.get("slot.n_dl")) + (
                    1 if wf == "ofdm" else -1
                )
            wf_cfg = cfg.replace(**updates)
            estimates = {"pattern_match": [], "transient_model": []}
            failures = []
            for rep in range(n_seeds):
                cell_seed = derive_seed(
                    cfg.seed, SWEEP_STREAM, int(round(float(delta) * 1000)),
                    0 if wf == "ofdm" else 1, rep,
                ).generate_state(1)[0]
                try:
                    art = run_scenario(wf_cfg, seed=int(cell_seed), keep_raw=False)
                except Exception as exc:  # cell isolation: record and continue
                    failures.append(f"rep {rep}: {exc}")
                    continue
                head = art.headline_estimates()
                for method, value in head.items():
                    if value is not None:
                        estimates[method].append(value)
                for method, reports in (("pattern_match", art.pattern_reports),
                                        ("transient_model", art.transient_reports)):
                    for k, rep_k in sorted(reports.items()):
                        traces.append({
                            "delta_theta_deg": float(delta), "waveform": wf,
                            "method": method, "replicate": rep, "scan": k,
                            "estimate_deg": rep_k.delta_theta_deg,
                        })
            for method, values in estimates.items():
                if values:
                    arr = np.array(values)
                    abs_err = float(np.mean(np.abs(arr - float(delta))))
                    pct = abs_err / abs(float(delta)) * 100.0 if delta else float("nan")
                    rows.append({
                        "delta_theta_deg": float(delta), "waveform": wf,
                        "method": method, "mean_estimate_deg": float(arr.mean()),
                        "abs_error_deg": abs_err, "pct_error": pct,
                        "n_seeds": len(values), "failures": "; ".join(failures),
                    })
                else:
                    rows.append({
                        "delta_theta_deg": float(delta), "waveform": wf,
                        "method": method, "mean_estimate_deg": float("nan"),
                        "abs_error_deg": float("nan"), "pct_error": float("nan"),
                        "n_seeds": 0, "failures": "; ".join(failures) or "no estimate",
                    })
    return rows, traces


def write_sweep_csv(rows, path, fieldnames=None):
    if not rows:
        raise ValueError("no sweep rows to write")
    fieldnames = fieldnames or list(rows[0].keys())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(fieldnames) + "\n")
        for row in rows:
            fh.write(",".join(str(row.get(f, "")) for f in fieldnames) + "\n")
