"""Tilt-failure detection and offset estimation from clutter-heat-map stacks.

Detection monitors magnitude-weighted ratios (MWR) of azimuth-averaged
range profiles across consecutive scans. Two estimators recover the tilt
offset once a failure is flagged:

* pattern matching: undo the smoothing filter algebraically, read the
  per-peak gain drop between the recovered instantaneous profiles, and look
  the drop up against the antenna pattern;
* transient fitting: model the smoothing filter's step response to the
  tilt-induced power drop and fit the observed post-failure ratio to it by
  grid search with local refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scene import PatternConfig, elevation_gain_db


class EstimationUnavailable(RuntimeError):
    """No usable peaks (or scans): the estimate cannot be formed."""


# ----------------------------------------------------------------------
# Detection
# ----------------------------------------------------------------------

def mwr_profile(p_k: np.ndarray, p_km1: np.ndarray, tau_reg: float) -> np.ndarray:
    """Magnitude-weighted ratio deviation between consecutive range profiles.

    eta = max(|p_k|, |p_km1|) / (max(...) + tau) * (p_k / p_km1 - 1)

    Defined only where both profiles are strictly positive; other bins are
    returned as NaN. ``tau_reg`` damps bins whose magnitude is comparable
    to (or below) the regularizer, typically set near the noise floor.
    """
    if tau_reg <= 0.0:
        raise ValueError("regularizer must be positive")
    p_k = np.asarray(p_k, float)
    p_km1 = np.asarray(p_km1, float)
    if p_k.shape != p_km1.shape:
        raise ValueError("profiles must have the same length")
    valid = (np.abs(p_k) > 0.0) & (np.abs(p_km1) > 0.0)
    eta = np.full(p_k.shape, np.nan)
    mag = np.maximum(np.abs(p_k[valid]), np.abs(p_km1[valid]))
    eta[valid] = mag / (mag + tau_reg) * (p_k[valid] / p_km1[valid] - 1.0)
    return eta


@dataclass(frozen=True)
class DetectionResult:
    """Outcome of the MWR threshold test for one consecutive scan pair."""

    scan_index: int
    eta: np.ndarray
    flagged_bins: int
    valid_bins: int
    flagged_fraction: float
    decision: bool
    threshold: float
    tau_reg: float
    min_fraction: float


def detect_atf(eta: np.ndarray, gamma_det: float, min_fraction: float = 0.05,
               scan_index: int = 0, tau_reg: float = float("nan")) -> DetectionResult:
    """Flag a failure when |eta| exceeds the threshold on enough range bins."""
    if gamma_det <= 0.0:
        raise ValueError("detection threshold must be positive")
    eta = np.asarray(eta, float)
    valid = np.isfinite(eta)
    n_valid = int(valid.sum())
    flagged = int((np.abs(eta[valid]) > gamma_det).sum())
    fraction = flagged / n_valid if n_valid else 0.0
    return DetectionResult(
        scan_index=scan_index,
        eta=eta,
        flagged_bins=flagged,
        valid_bins=n_valid,
        flagged_fraction=fraction,
        decision=fraction >= min_fraction,
        threshold=gamma_det,
        tau_reg=tau_reg,
        min_fraction=min_fraction,
    )


# ----------------------------------------------------------------------
# Smoothing-filter inversion and peak selection
# ----------------------------------------------------------------------

def invert_rma(y_k: np.ndarray, y_km1: np.ndarray, alpha: float) -> np.ndarray:
    """Recover the instantaneous input from two smoothed outputs.

    x_k = (y_k - alpha * y_{k-1}) / (1 - alpha); exact algebraic inverse of
    the recursive moving average. Noise can drive entries negative; they
    are passed through for the consumer to guard.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    y_k = np.asarray(y_k, float)
    y_km1 = np.asarray(y_km1, float)
    if y_k.shape != y_km1.shape:
        raise ValueError("smoothed inputs must share a shape")
    return (y_k - alpha * y_km1) / (1.0 - alpha)


@dataclass(frozen=True)
class PeakParams:
    """Peak-picker tuning: prominence over the median, spacing, and count cap.

    ``dynamic_range_db`` additionally rejects maxima that far below the
    strongest peak; it keeps pulse-compression sidelobes of strong clutter
    out of the peak set when the profile median sits very low.
    """

    prominence_db: float = 10.0
    min_separation_bins: int = 5
    max_peaks: int = 16
    dynamic_range_db: float = 20.0


def select_peaks(profile: np.ndarray, params: PeakParams = PeakParams()) -> np.ndarray:
    """Dominant local maxima of a power profile, as sorted bin indices.

    Keeps strict local maxima at least ``prominence_db`` above the profile
    median and within ``dynamic_range_db`` of the strongest bin, greedily
    strongest-first with ``min_separation_bins`` spacing, capped at
    ``max_peaks``. Equal-power ties keep the lower index. May return an
    empty set.
    """
    p = np.asarray(profile, float)
    if p.ndim != 1 or len(p) == 0:
        raise ValueError("profile must be a non-empty vector")
    if len(p) < 3:
        return np.array([], dtype=int)
    interior = np.arange(1, len(p) - 1)
    is_max = (p[interior] > p[interior - 1]) & (p[interior] >= p[interior + 1])
    candidates = interior[is_max]
    median = float(np.median(p))
    floor = max(median, 0.0) * 10.0 ** (params.prominence_db / 10.0)
    floor = max(floor, float(p.max()) * 10.0 ** (-params.dynamic_range_db / 10.0))
    candidates = candidates[p[candidates] > floor]
    if len(candidates) == 0:
        return np.array([], dtype=int)
    # strongest first; ties resolved toward the lower index
    order = np.lexsort((candidates, -p[candidates]))
    kept: list[int] = []
    for idx in candidates[order]:
        if all(abs(idx - k) >= params.min_separation_bins for k in kept):
            kept.append(int(idx))
            if len(kept) >= params.max_peaks:
                break
    return np.array(sorted(kept), dtype=int)


# ----------------------------------------------------------------------
# Geometry and pattern lookup shared by both estimators
# ----------------------------------------------------------------------

def estimator_elevation_deg(range_m, bs_height_m: float):
    """Zenith elevation the estimators assume for a range bin.

    theta = 180 deg - arctan(r / h_BS): the ground at range r as seen from
    the antenna. Scatterer heights are unknown to the estimators, so this
    ground-level geometry is used for every peak.
    """
    return 180.0 - np.degrees(np.arctan(np.asarray(range_m, float) / bs_height_m))


@dataclass(frozen=True)
class PatternLookup:
    """One-way elevation-cut gain tabulated over offsets from boresight."""

    offsets_deg: np.ndarray
    gains_db: np.ndarray
    gain_max_db: float
    step_deg: float
    boresight_zenith_deg: float = 90.0

    @classmethod
    def from_pattern(cls, pattern: PatternConfig, step_deg: float = 0.01,
                     max_offset_deg: float = 30.0,
                     nominal_downtilt_deg: float = 0.0) -> "PatternLookup":
        if not 0.0 < step_deg <= 0.01:
            raise ValueError("lookup step must be positive and at most 0.01 deg")
        offsets = np.arange(0.0, max_offset_deg + step_deg / 2.0, step_deg)
        gains = elevation_gain_db(offsets, pattern)
        return cls(offsets, np.asarray(gains, float), pattern.gain_max_db,
                   step_deg, 90.0 + nominal_downtilt_deg)

    def gain_at_offset(self, offset_deg) -> np.ndarray:
        idx = np.clip(
            np.round(np.abs(np.asarray(offset_deg, float)) / self.step_deg).astype(int),
            0, len(self.offsets_deg) - 1,
        )
        return self.gains_db[idx]

    def gain_at_zenith(self, zenith_deg) -> np.ndarray:
        return self.gain_at_offset(np.asarray(zenith_deg, float) - self.boresight_zenith_deg)

    @property
    def clip_onset_deg(self) -> float:
        """First offset at which the tabulated gain stops decreasing."""
        drops = np.nonzero(np.diff(self.gains_db) >= 0.0)[0]
        if len(drops) == 0:
            return float(self.offsets_deg[-1])
        return float(self.offsets_deg[drops[0]])


# ----------------------------------------------------------------------
# Method I: instantaneous pattern matching
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EstimationReport:
    """Tilt-offset estimate with per-peak diagnostics."""

    method: str
    delta_theta_deg: float
    peak_indices: np.ndarray
    peak_estimates_deg: np.ndarray
    scan_index: int
    raw_delta_theta_deg: float = float("nan")
    grid_deg: np.ndarray | None = None
    cost_curve: np.ndarray | None = None
    extras: dict = field(default_factory=dict)


def _as_profile(y) -> np.ndarray:
    """Accept a range profile or a CHM grid (azimuth-averaged)."""
    arr = np.asarray(y, float)
    if arr.ndim == 2:
        return arr.mean(axis=0)
    if arr.ndim == 1:
        return arr
    raise ValueError("expected a 1-D profile or a 2-D azimuth x range grid")


def estimate_tilt_pattern_match(y_k, y_km1, y_km2, window: int,
                                lookup: PatternLookup, *, bs_height_m: float,
                                range_axis_m: np.ndarray, scan_index: int = 3,
                                peak_params: PeakParams = PeakParams(),
                                trim_fraction: float = 0.0) -> EstimationReport:
    """Tilt offset from the gain drop between recovered instantaneous profiles.

    Inverts the smoothing filter on the two latest scan pairs, converts the
    per-peak power change to a one-way gain reduction (half the dB change,
    undoing the two-way propagation), and finds for each peak the shift that
    makes the pattern reproduce the reduced gain. The reported offset is the
    mean of the per-peak candidates.

    Needs three consecutive smoothed profiles, hence scan_index >= 3.
    """
    if scan_index < 3:
        raise ValueError("pattern matching needs a scan index of at least 3")
    if window < 3:
        raise ValueError("smoothing window must be at least 3 scans")
    alpha = (window - 1) / window
    p_k, p_km1, p_km2 = (_as_profile(y) for y in (y_k, y_km1, y_km2))
    x_km1 = invert_rma(p_km1, p_km2, alpha)
    x_k = invert_rma(p_k, p_km1, alpha)

    peaks = select_peaks(x_km1, peak_params)
    usable = peaks[(x_k[peaks] > 0.0) & (x_km1[peaks] > 0.0)]
    if len(usable) == 0:
        raise EstimationUnavailable("no usable peaks in the pre-failure profile")

    delta_g_db = np.abs(10.0 * np.log10(x_k[usable]) -
                        10.0 * np.log10(x_km1[usable])) / 2.0
    theta = estimator_elevation_deg(np.asarray(range_axis_m)[usable], bs_height_m)

    # candidate shifts limited to the monotone main-lobe branch
    grid = np.arange(0.0, lookup.clip_onset_deg, lookup.step_deg)
    estimates = np.empty(len(usable))
    for i, (theta_i, dg) in enumerate(zip(theta, delta_g_db)):
        target = lookup.gain_max_db - dg
        gains = lookup.gain_at_zenith(theta_i - grid)
        estimates[i] = grid[int(np.argmin(np.abs(gains - target)))]

    if 0.0 < trim_fraction < 0.5 and len(estimates) > 2:
        k = int(math.floor(len(estimates) * trim_fraction))
        central = np.sort(estimates)[k: len(estimates) - k] if k else estimates
        delta_hat = float(np.mean(central))
    else:
        delta_hat = float(np.mean(estimates))

    return EstimationReport(
        method="pattern_match",
        delta_theta_deg=delta_hat,
        peak_indices=usable,
        peak_estimates_deg=estimates,
        scan_index=scan_index,
        raw_delta_theta_deg=delta_hat,
        extras={"delta_g_db": delta_g_db, "window": window},
    )


# ----------------------------------------------------------------------
# Method II: transient-model optimization
# ----------------------------------------------------------------------

def power_ratio_db(delta_deg, theta_deg, pattern: PatternConfig, *,
                   boresight_zenith_deg: float = 90.0, two_way: bool = True):
    """Tilt-induced power-ratio (dB) at the given zenith elevations.

    One pattern evaluation before and one after shifting by ``delta``; the
    two-way form doubles the one-way dB change to match how echo power
    actually responds to a gain shift.
    """
    theta = np.asarray(theta_deg, float)
    g_ref = elevation_gain_db(theta - boresight_zenith_deg, pattern)
    g_tilt = elevation_gain_db(theta - delta_deg - boresight_zenith_deg, pattern)
    factor = 2.0 if two_way else 1.0
    return factor * (np.asarray(g_tilt, float) - np.asarray(g_ref, float))


def predicted_ratio(delta_deg, range_m, *, bs_height_m: float,
                    pattern: PatternConfig, alpha: float, k_elapsed: int = 1,
                    boresight_zenith_deg: float = 90.0, two_way: bool = True):
    """Smoothed-output power ratio predicted for a candidate tilt.

    rho is the instantaneous post/pre power ratio at the bin's elevation;
    the smoothing filter's step response leaves R = rho + (1 - rho) *
    alpha^k after k post-failure updates.
    """
    if k_elapsed < 1:
        raise ValueError("k_elapsed counts post-failure scans, so it is >= 1")
    theta = estimator_elevation_deg(range_m, bs_height_m)
    rho = 10.0 ** (power_ratio_db(delta_deg, theta, pattern,
                                  boresight_zenith_deg=boresight_zenith_deg,
                                  two_way=two_way) / 10.0)
    return rho + (1.0 - rho) * alpha**k_elapsed


def transient_cost(delta_deg: float, observed_ratio_db: np.ndarray,
                   theta_deg: np.ndarray, pattern: PatternConfig, alpha: float,
                   k_elapsed: int = 1, *, boresight_zenith_deg: float = 90.0,
                   two_way: bool = True) -> float:
    """Sum of squared dB errors between observed and predicted ratios."""
    rho = 10.0 ** (power_ratio_db(delta_deg, theta_deg, pattern,
                                  boresight_zenith_deg=boresight_zenith_deg,
                                  two_way=two_way) / 10.0)
    pred = rho + (1.0 - rho) * alpha**k_elapsed
    res = np.asarray(observed_ratio_db, float) - 10.0 * np.log10(pred)
    return float(np.sum(res**2))


def _parabolic_refine(grid: np.ndarray, costs: np.ndarray) -> float:
    """Vertex of the parabola through the best grid point and its neighbors."""
    b = int(np.argmin(costs))
    if b == 0 or b == len(grid) - 1:
        return float(grid[b])
    j_m, j_0, j_p = costs[b - 1], costs[b], costs[b + 1]
    denom = j_m - 2.0 * j_0 + j_p
    if denom <= 0.0:
        return float(grid[b])
    step = grid[1] - grid[0]
    offset = 0.5 * (j_m - j_p) / denom
    return float(grid[b] + np.clip(offset, -1.0, 1.0) * step)


def estimate_tilt_transient(profile_stack, range_axis_m, window: int,
                            fail_scan: int, pattern: PatternConfig, *,
                            bs_height_m: float, eval_scan: int | None = None,
                            boresight_zenith_deg: float = 90.0,
                            peak_params: PeakParams = PeakParams(),
                            grid_max_deg: float = 10.0,
                            grid_step_deg: float = 0.1,
                            two_way: bool = True,
                            resolution_deg: float = 0.01) -> EstimationReport:
    """Tilt offset by fitting the smoothing filter's transient response.

    ``profile_stack`` holds one azimuth-averaged smoothed profile per scan
    (rows are 1-based scans 1..N). The pre-failure rows form the baseline;
    the observed log-ratio at the baseline's peaks is matched against the
    transient model by a coarse grid search plus parabolic refinement.

    The reported offset is snapped to ``resolution_deg`` so that results
    are reproducible across runs that only differ by an overall power
    scale; the unsnapped value stays in the report.
    """
    stack = np.asarray(profile_stack, float)
    if stack.ndim != 2:
        raise ValueError("profile stack must be scans x range bins")
    n_scans = stack.shape[0]
    if fail_scan < 2 or fail_scan > n_scans:
        raise ValueError("fail scan must leave at least one pre-failure scan")
    k = fail_scan if eval_scan is None else eval_scan
    if not fail_scan <= k <= n_scans:
        raise ValueError("evaluation scan must be at or after the failure scan")
    alpha = (window - 1) / window
    k_elapsed = k - fail_scan + 1

    p_ref = stack[: fail_scan - 1].mean(axis=0)
    peaks = select_peaks(p_ref, peak_params)
    usable = peaks[(p_ref[peaks] > 0.0) & (stack[k - 1, peaks] > 0.0)]
    if len(usable) == 0:
        raise EstimationUnavailable("no usable peaks in the baseline profile")

    l_obs = 10.0 * np.log10(stack[k - 1, usable] / p_ref[usable])
    theta = estimator_elevation_deg(np.asarray(range_axis_m)[usable], bs_height_m)

    grid = np.arange(0.0, grid_max_deg + grid_step_deg / 2.0, grid_step_deg)
    costs = np.array([
        transient_cost(d, l_obs, theta, pattern, alpha, k_elapsed,
                       boresight_zenith_deg=boresight_zenith_deg, two_way=two_way)
        for d in grid
    ])
    raw = _parabolic_refine(grid, costs)
    if resolution_deg and resolution_deg > 0.0:
        snapped = round(raw / resolution_deg) * resolution_deg
    else:
        snapped = raw

    return EstimationReport(
        method="transient_model",
        delta_theta_deg=float(snapped),
        peak_indices=usable,
        peak_estimates_deg=np.full(len(usable), float(snapped)),
        scan_index=k,
        raw_delta_theta_deg=float(raw),
        grid_deg=grid,
        cost_curve=costs,
        extras={"observed_ratio_db": l_obs, "k_elapsed": k_elapsed,
                "window": window, "two_way": two_way},
    )
