import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tiltsense.scene import (
    BaseStation,
    MovingTarget,
    PatternConfig,
    StaticScatterer,
    TiltState,
    antenna_gain_db,
    carrier_wavelength,
    cylinder_rcs,
    effective_elevation,
    elevation_angle,
    radial_velocity,
)

PATTERN = PatternConfig()


class TestElevationAngle:
    def test_range_equal_to_height_difference(self):
        assert elevation_angle(25.0, 60.0, 35.0) == pytest.approx(135.0)

    def test_equal_heights_gives_horizon(self):
        assert elevation_angle(1234.5, 50.0, 50.0) == pytest.approx(90.0)

    def test_reference_scatterer(self):
        # 5003.4 m range, 60 m BS, 41 m scatterer
        assert elevation_angle(5003.4, 60.0, 41.0) == pytest.approx(90.2176, abs=1e-3)

    def test_rejects_non_positive_range(self):
        with pytest.raises(ValueError):
            elevation_angle(0.0, 60.0)
        with pytest.raises(ValueError):
            elevation_angle(-10.0, 60.0)

    @given(st.floats(1.0, 5e4), st.floats(1.0, 5e4))
    def test_strictly_decreasing_when_bs_higher(self, r1, r2):
        if r1 == r2:
            return
        lo, hi = sorted((r1, r2))
        assert elevation_angle(lo, 60.0, 10.0) > elevation_angle(hi, 60.0, 10.0)

    @given(st.floats(1.0, 5e4), st.floats(1.0, 5e4))
    def test_strictly_increasing_when_bs_lower(self, r1, r2):
        if r1 == r2:
            return
        lo, hi = sorted((r1, r2))
        assert elevation_angle(lo, 10.0, 60.0) < elevation_angle(hi, 10.0, 60.0)

    def test_above_90_iff_bs_higher(self):
        assert elevation_angle(100.0, 60.0, 10.0) > 90.0
        assert elevation_angle(100.0, 10.0, 60.0) < 90.0


class TestEffectiveElevation:
    def test_offset_applied_once_active(self):
        tilt = TiltState(0.0, 4.0, 5)
        assert effective_elevation(90.5, tilt, 5) == pytest.approx(86.5)

    def test_no_failure(self):
        tilt = TiltState(2.0, 0.0, 1)
        assert effective_elevation(91.0, tilt, 3) == pytest.approx(89.0)

    def test_before_activation_only_nominal(self):
        tilt = TiltState(2.0, 4.0, 5)
        assert effective_elevation(91.0, tilt, 4) == pytest.approx(89.0)
        assert effective_elevation(91.0, tilt, 5) == pytest.approx(85.0)

    def test_negative_offset_rejected(self):
        with pytest.raises(ValueError):
            TiltState(0.0, -1.0, 5)


class TestAntennaGain:
    def test_boresight_gain(self):
        assert antenna_gain_db(0.0, 0.0, PATTERN) == pytest.approx(21.0)

    def test_half_power_beamwidth(self):
        half = PATTERN.hpbw_elevation_deg / 2.0
        assert antenna_gain_db(half, 0.0, PATTERN) == pytest.approx(21.0 - 3.0)
        assert antenna_gain_db(0.0, half, PATTERN) == pytest.approx(21.0 - 3.0)

    def test_side_lobe_clipping(self):
        # 12 * (30/6)^2 = 300 dB clips at the 30 dB side-lobe level
        assert antenna_gain_db(30.0, 0.0, PATTERN) == pytest.approx(-9.0)

    @given(st.floats(-180, 180), st.floats(-180, 180))
    def test_even_in_each_offset(self, theta, phi):
        g = antenna_gain_db(theta, phi, PATTERN)
        assert antenna_gain_db(-theta, phi, PATTERN) == pytest.approx(g)
        assert antenna_gain_db(theta, -phi, PATTERN) == pytest.approx(g)

    @given(st.floats(-180, 180))
    def test_single_cut_attenuation_bounds(self, angle):
        g_el = antenna_gain_db(angle, 0.0, PATTERN)
        g_az = antenna_gain_db(0.0, angle, PATTERN)
        assert PATTERN.gain_max_db - g_el <= PATTERN.side_lobe_db + 1e-9
        assert PATTERN.gain_max_db - g_az <= PATTERN.front_back_db + 1e-9

    def test_maximum_only_at_boresight(self):
        angles = np.linspace(-90, 90, 721)
        gains = antenna_gain_db(angles, 0.0, PATTERN)
        assert gains.max() == pytest.approx(21.0)
        assert np.count_nonzero(gains == 21.0) == 1


class TestCylinderRcs:
    WAVELENGTH = carrier_wavelength(3.7e9)

    def test_reference_value(self):
        sigma = cylinder_rcs(15.0, 10.0, self.WAVELENGTH)
        assert sigma == pytest.approx(5.816e4, rel=0.01)

    def test_height_squared_scaling(self):
        base = cylinder_rcs(15.0, 10.0, self.WAVELENGTH)
        assert cylinder_rcs(15.0, 20.0, self.WAVELENGTH) == pytest.approx(4 * base)

    def test_diameter_linear_scaling(self):
        base = cylinder_rcs(15.0, 10.0, self.WAVELENGTH)
        assert cylinder_rcs(30.0, 10.0, self.WAVELENGTH) == pytest.approx(2 * base)

    @given(st.floats(0.1, 100), st.floats(0.1, 100), st.floats(1e-3, 1.0),
           st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10))
    def test_homogeneity(self, d, h, lam, a, b, c):
        lhs = cylinder_rcs(a * d, b * h, c * lam)
        rhs = cylinder_rcs(d, h, lam) * a * b**2 / c
        assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            cylinder_rcs(0.0, 10.0, 0.08)


class TestRadialVelocity:
    def test_perpendicular_velocity_is_zero(self):
        v_r = radial_velocity((100.0, 0.0, 0.0), (0.0, 7.0, 0.0), (0.0, 0.0, 0.0))
        assert v_r == pytest.approx(0.0, abs=1e-12)

    def test_parallel_receding(self):
        v_r = radial_velocity((100.0, 0.0, 0.0), (12.0, 0.0, 0.0), (0.0, 0.0, 0.0))
        assert v_r == pytest.approx(12.0)

    def test_against_vector_algebra_oracle(self):
        # target 10 of the reference scene with its published velocity
        pos = np.array([7095.3 * math.cos(math.radians(47.3)),
                        7095.3 * math.sin(math.radians(47.3)), 0.0])
        vel = np.array([10.32, 6.14, 0.0])
        bs = np.array([0.0, 0.0, 60.0])
        los = pos - bs
        expected = float((vel @ los) / math.sqrt(float(los @ los)))
        assert radial_velocity(pos, vel, bs) == pytest.approx(expected, rel=1e-12)

    def test_zero_range_rejected(self):
        with pytest.raises(ValueError):
            radial_velocity((0.0, 0.0, 60.0), (1.0, 0.0, 0.0), (0.0, 0.0, 60.0))


class TestDomainTypes:
    def test_bs_height_positive(self):
        with pytest.raises(ValueError):
            BaseStation((0.0, 0.0, 0.0))

    def test_boresight_wrapped_range(self):
        with pytest.raises(ValueError):
            BaseStation((0.0, 0.0, 60.0), boresight_azimuth_deg=400.0)

    def test_scatterer_validation(self):
        with pytest.raises(ValueError):
            StaticScatterer(-5.0, 45.0, 10.0, 10.0)
        with pytest.raises(ValueError):
            StaticScatterer(5.0, 45.0, 0.0, 10.0)

    def test_moving_target_advance(self):
        tgt = MovingTarget((10.0, 0.0, 0.0), (1.0, -2.0, 0.0))
        assert np.allclose(tgt.position_at(2.0), [12.0, -4.0, 0.0])

    def test_hpbw_bounds(self):
        with pytest.raises(ValueError):
            PatternConfig(hpbw_elevation_deg=0.0)
