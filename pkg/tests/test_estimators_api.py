import numpy as np
import pytest
from sklearn.base import clone

from tiltsense.estimators import MwrChangeDetector, PatternMatchTilt, TransientModelTilt

from test_analysis import forward_model_stack, synthetic_stack_for_pattern_match


class TestSklearnSurface:
    @pytest.mark.parametrize("est", [
        MwrChangeDetector(),
        PatternMatchTilt(sample_rate_hz=50e6),
        TransientModelTilt(sample_rate_hz=50e6),
    ])
    def test_get_set_params_round_trip(self, est):
        params = est.get_params()
        rebuilt = type(est)(**params)
        assert rebuilt.get_params() == params
        est.set_params(**params)
        assert est.get_params() == params

    def test_clone(self):
        est = TransientModelTilt(sample_rate_hz=50e6, grid_step_deg=0.2)
        twin = clone(est)
        assert twin.get_params()["grid_step_deg"] == 0.2

    def test_param_override_via_set_params(self):
        det = MwrChangeDetector()
        det.set_params(threshold=0.05)
        assert det.get_params()["threshold"] == 0.05


class TestMwrChangeDetector:
    def test_fit_exposes_results(self):
        stack = np.ones((4, 32))
        stack[3] *= 3.0
        det = MwrChangeDetector(tau_reg=1e-3).fit(stack)
        assert det.eta_.shape == (3, 32)
        assert list(det.decisions_) == [False, False, True]
        assert det.results_[-1].scan_index == 4

    def test_predict_matches_fit(self):
        stack = np.ones((3, 16))
        stack[2] *= 1.5
        det = MwrChangeDetector(tau_reg=1e-3)
        assert np.array_equal(det.predict(stack), det.fit(stack).decisions_)

    def test_heat_map_stack_accepted(self):
        stack = np.ones((3, 5, 16))
        stack[2] *= 2.0
        det = MwrChangeDetector(tau_reg=1e-3).fit(stack)
        assert det.eta_.shape == (2, 16)

    def test_rejects_single_scan(self):
        with pytest.raises(ValueError):
            MwrChangeDetector().fit(np.ones((1, 16)))

    def test_rejects_non_finite(self):
        stack = np.ones((3, 8))
        stack[1, 2] = np.nan
        with pytest.raises(ValueError):
            MwrChangeDetector().fit(stack)

    def test_auto_tau_from_profile_median(self):
        stack = np.full((2, 64), 2.0)
        det = MwrChangeDetector().fit(stack)
        assert det.tau_ == pytest.approx(20.0)


class TestTiltEstimatorsApi:
    def test_pattern_match_fit(self):
        stack, _, _, _ = synthetic_stack_for_pattern_match(2.5)
        est = PatternMatchTilt(sample_rate_hz=50e6, bs_height_m=60.0).fit(stack)
        assert est.offset_deg_ == pytest.approx(2.5, abs=0.05)
        assert est.report_.method == "pattern_match"
        assert len(est.peak_indices_) >= 1

    def test_transient_fit(self):
        stack, _ = forward_model_stack(1.5, [5000.0, 8000.0])
        est = TransientModelTilt(sample_rate_hz=50e6, bs_height_m=60.0).fit(stack)
        assert est.offset_deg_ == pytest.approx(1.5, abs=0.05)
        assert est.cost_curve_ is not None

    def test_predict_returns_offset(self):
        stack, _ = forward_model_stack(1.0, [6000.0])
        est = TransientModelTilt(sample_rate_hz=50e6)
        assert est.predict(stack) == pytest.approx(1.0, abs=0.05)

    def test_fail_scan_selects_rows(self):
        stack, _, _, _ = synthetic_stack_for_pattern_match(3.0)
        padded = np.vstack([stack, stack[2:] * 0 + stack[2]])
        est = PatternMatchTilt(sample_rate_hz=50e6, fail_scan=3).fit(padded)
        assert est.offset_deg_ == pytest.approx(3.0, abs=0.05)

    def test_pattern_match_needs_three_scans(self):
        with pytest.raises(ValueError):
            PatternMatchTilt(sample_rate_hz=50e6).fit(np.ones((2, 64)))

    def test_invalid_sample_rate_rejected(self):
        stack, _ = forward_model_stack(1.0, [6000.0])
        with pytest.raises(ValueError):
            TransientModelTilt(sample_rate_hz=-1.0).fit(stack)

    def test_fail_scan_out_of_range(self):
        stack, _ = forward_model_stack(1.0, [6000.0])
        with pytest.raises(ValueError):
            TransientModelTilt(sample_rate_hz=50e6, fail_scan=9).fit(stack)
