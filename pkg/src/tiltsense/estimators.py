"""Scikit-learn style wrappers around detection and tilt estimation.

All three estimators consume a stack of azimuth-averaged, smoothed range
profiles: ``X`` of shape (n_scans, n_range), or (n_scans, n_azimuth,
n_range) heat-map stacks which are azimuth-averaged on entry. Scans are
ordered oldest first, and range bin i spans c*i/(2*fs) meters, so the
sample rate fixes the geometry.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_in_range, check_positive, check_profile_stack
from .analysis import (
    DetectionResult,
    PatternLookup,
    PeakParams,
    detect_atf,
    estimate_tilt_pattern_match,
    estimate_tilt_transient,
    mwr_profile,
)
from .pipeline import range_axis
from .scene import PatternConfig


class MwrChangeDetector(BaseEstimator):
    """Flags scan pairs whose range profiles diverge beyond a ratio threshold.

    Parameters
    ----------
    threshold : float
        Per-bin magnitude-weighted-ratio threshold.
    min_fraction : float
        Fraction of valid bins that must exceed the threshold to declare a
        failure.
    tau_reg : float or None
        Ratio regularizer; when None, 10x the median of the first profile's
        positive bins is used as a floor proxy.
    """

    def __init__(self, threshold: float = 0.01, min_fraction: float = 0.05,
                 tau_reg: float | None = None):
        self.threshold = threshold
        self.min_fraction = min_fraction
        self.tau_reg = tau_reg

    def _resolve_tau(self, stack: np.ndarray) -> float:
        if self.tau_reg is not None:
            return check_positive(self.tau_reg, "tau_reg")
        positive = stack[0][stack[0] > 0.0]
        if len(positive) == 0:
            return 1e-30
        return 10.0 * float(np.median(positive))

    def fit(self, X, y=None):
        check_positive(self.threshold, "threshold")
        check_in_range(self.min_fraction, 0.0, 1.0, "min_fraction")
        stack = check_profile_stack(X, min_scans=2)
        tau = self._resolve_tau(stack)
        results = []
        for k in range(1, stack.shape[0]):
            eta = mwr_profile(stack[k], stack[k - 1], tau)
            results.append(detect_atf(eta, self.threshold, self.min_fraction,
                                      scan_index=k + 1, tau_reg=tau))
        self.tau_ = tau
        self.results_: list[DetectionResult] = results
        self.eta_ = np.stack([r.eta for r in results])
        self.decisions_ = np.array([r.decision for r in results])
        return self

    def predict(self, X) -> np.ndarray:
        """Decision per consecutive scan pair (length n_scans - 1)."""
        return MwrChangeDetector(**self.get_params()).fit(X).decisions_


class _TiltEstimatorBase(BaseEstimator):
    """Shared antenna/geometry parameters for the tilt estimators."""

    def __init__(self, sample_rate_hz=61.44e6, bs_height_m=60.0,
                 hpbw_elevation_deg=6.0, gain_max_db=21.0, side_lobe_db=30.0,
                 front_back_db=30.0, nominal_downtilt_deg=0.0, window=3,
                 fail_scan=None, peak_prominence_db=10.0,
                 peak_min_separation_bins=5, peak_max_count=16):
        self.sample_rate_hz = sample_rate_hz
        self.bs_height_m = bs_height_m
        self.hpbw_elevation_deg = hpbw_elevation_deg
        self.gain_max_db = gain_max_db
        self.side_lobe_db = side_lobe_db
        self.front_back_db = front_back_db
        self.nominal_downtilt_deg = nominal_downtilt_deg
        self.window = window
        self.fail_scan = fail_scan
        self.peak_prominence_db = peak_prominence_db
        self.peak_min_separation_bins = peak_min_separation_bins
        self.peak_max_count = peak_max_count

    def _pattern(self) -> PatternConfig:
        return PatternConfig(
            hpbw_elevation_deg=self.hpbw_elevation_deg,
            hpbw_azimuth_deg=self.hpbw_elevation_deg,
            gain_max_db=self.gain_max_db,
            side_lobe_db=self.side_lobe_db,
            front_back_db=self.front_back_db,
        )

    def _peak_params(self) -> PeakParams:
        return PeakParams(self.peak_prominence_db, self.peak_min_separation_bins,
                          self.peak_max_count)

    def _checked(self, X, min_scans):
        check_positive(self.sample_rate_hz, "sample_rate_hz")
        check_positive(self.bs_height_m, "bs_height_m")
        stack = check_profile_stack(X, min_scans=min_scans)
        fail = stack.shape[0] if self.fail_scan is None else int(self.fail_scan)
        check_in_range(fail, 2, stack.shape[0], "fail_scan")
        return stack, fail, range_axis(stack.shape[1], self.sample_rate_hz)


class PatternMatchTilt(_TiltEstimatorBase):
    """Tilt-offset estimator via smoothing inversion and pattern lookup.

    ``fit`` consumes the profile stack up to the failure scan (``fail_scan``,
    1-based; defaults to the last row) and exposes the estimate as
    ``offset_deg_`` with per-peak candidates in ``report_``.
    """

    def __init__(self, sample_rate_hz=61.44e6, bs_height_m=60.0,
                 hpbw_elevation_deg=6.0, gain_max_db=21.0, side_lobe_db=30.0,
                 front_back_db=30.0, nominal_downtilt_deg=0.0, window=3,
                 fail_scan=None, peak_prominence_db=10.0,
                 peak_min_separation_bins=5, peak_max_count=16,
                 lookup_step_deg=0.01, trim_fraction=0.0):
        super().__init__(sample_rate_hz, bs_height_m, hpbw_elevation_deg,
                         gain_max_db, side_lobe_db, front_back_db,
                         nominal_downtilt_deg, window, fail_scan,
                         peak_prominence_db, peak_min_separation_bins,
                         peak_max_count)
        self.lookup_step_deg = lookup_step_deg
        self.trim_fraction = trim_fraction

    def fit(self, X, y=None):
        stack, fail, axis = self._checked(X, min_scans=3)
        if fail < 3:
            raise ValueError("pattern matching needs fail_scan >= 3")
        lookup = PatternLookup.from_pattern(
            self._pattern(), step_deg=self.lookup_step_deg,
            nominal_downtilt_deg=self.nominal_downtilt_deg,
        )
        report = estimate_tilt_pattern_match(
            stack[fail - 1], stack[fail - 2], stack[fail - 3], self.window,
            lookup, bs_height_m=self.bs_height_m, range_axis_m=axis,
            scan_index=fail, peak_params=self._peak_params(),
            trim_fraction=self.trim_fraction,
        )
        self.report_ = report
        self.offset_deg_ = report.delta_theta_deg
        self.peak_indices_ = report.peak_indices
        return self

    def predict(self, X) -> float:
        return type(self)(**self.get_params()).fit(X).offset_deg_


class TransientModelTilt(_TiltEstimatorBase):
    """Tilt-offset estimator fitting the smoothing filter's step response."""

    def __init__(self, sample_rate_hz=61.44e6, bs_height_m=60.0,
                 hpbw_elevation_deg=6.0, gain_max_db=21.0, side_lobe_db=30.0,
                 front_back_db=30.0, nominal_downtilt_deg=0.0, window=3,
                 fail_scan=None, peak_prominence_db=10.0,
                 peak_min_separation_bins=5, peak_max_count=16,
                 eval_scan=None, grid_max_deg=10.0, grid_step_deg=0.1,
                 two_way=True, resolution_deg=0.01):
        super().__init__(sample_rate_hz, bs_height_m, hpbw_elevation_deg,
                         gain_max_db, side_lobe_db, front_back_db,
                         nominal_downtilt_deg, window, fail_scan,
                         peak_prominence_db, peak_min_separation_bins,
                         peak_max_count)
        self.eval_scan = eval_scan
        self.grid_max_deg = grid_max_deg
        self.grid_step_deg = grid_step_deg
        self.two_way = two_way
        self.resolution_deg = resolution_deg

    def fit(self, X, y=None):
        stack, fail, axis = self._checked(X, min_scans=2)
        report = estimate_tilt_transient(
            stack, axis, self.window, fail, self._pattern(),
            bs_height_m=self.bs_height_m, eval_scan=self.eval_scan,
            boresight_zenith_deg=90.0 + self.nominal_downtilt_deg,
            peak_params=self._peak_params(), grid_max_deg=self.grid_max_deg,
            grid_step_deg=self.grid_step_deg, two_way=self.two_way,
            resolution_deg=self.resolution_deg,
        )
        self.report_ = report
        self.offset_deg_ = report.delta_theta_deg
        self.peak_indices_ = report.peak_indices
        self.cost_curve_ = report.cost_curve
        return self

    def predict(self, X) -> float:
        return type(self)(**self.get_params()).fit(X).offset_deg_
