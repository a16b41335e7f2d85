import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tiltsense.config import ScenarioConfig
from tiltsense.scene import BaseStation, MovingTarget, PatternConfig, Scene, StaticScatterer

settings.register_profile(
    "ci",
    derandomize=True,
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")

# Reference scenario scatterers: (range m, azimuth deg, diameter m, height m)
TABLE2_STATIC = [
    (5003.4, 28.1, 32.0, 41.0),
    (5847.8, 39.9, 28.0, 32.0),
    (4594.1, 54.4, 15.0, 10.0),
    (6869.7, 58.7, 44.0, 50.0),
    (5891.4, 64.3, 20.0, 18.0),
    (7801.7, 31.2, 32.0, 38.0),
    (10460.2, 56.2, 40.0, 51.0),
    (7101.2, 38.1, 35.0, 27.0),
    (9443.6, 30.5, 36.0, 42.0),
]
TABLE2_MOVING = [
    (7095.3, 47.3, (10.32, 6.14, 0.0)),
    (10509.2, 65.7, (-11.43, -3.68, 0.0)),
]


def polar_position(range_m, azimuth_deg, height_m=0.0):
    az = np.radians(azimuth_deg)
    return (range_m * np.cos(az), range_m * np.sin(az), height_m)


@pytest.fixture
def base_station():
    return BaseStation((0.0, 0.0, 60.0), 45.0, 0.0, PatternConfig())


@pytest.fixture
def table2_scene(base_station):
    statics = tuple(StaticScatterer(*row) for row in TABLE2_STATIC)
    movers = tuple(
        MovingTarget(polar_position(r, az), vel, 1.0) for r, az, vel in TABLE2_MOVING
    )
    return Scene(base_station, statics, movers)


def micro_config(**top_level):
    """Tiny but complete scenario for plumbing tests (sub-second runs)."""
    data = {
        "waveform": "ofdm",
        "seed": 7,
        "numerology": {"mu": 6},
        "slot": {"n_dl": 6, "n_sense_rx": 5, "n_ul": 3, "slots_per_frame": 8},
        "sampling": {"sample_rate_hz": 50e6},
        "sector": {"width_deg": 9.0, "azimuth_bins": 9},
        "scan": {"count": 6, "rma_window": 3},
        "fault": {"offset_deg": 3.0, "at_scan": 4},
        "scene": {
            "static": [
                {"range_m": 400.0, "azimuth_deg": 45.0, "diameter_m": 5.0,
                 "height_m": 3.0},
                {"range_m": 620.0, "azimuth_deg": 42.0, "diameter_m": 4.0,
                 "height_m": 2.0},
            ],
            "moving": [],
        },
    }
    data.update(top_level)
    return ScenarioConfig(data, source="micro")


@pytest.fixture
def micro_cfg():
    return micro_config()
