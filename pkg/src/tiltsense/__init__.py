"""Deterministic ISAC clutter-heat-map simulation and antenna-tilt diagnostics."""

__version__ = "0.1.0"

from .config import ConfigError, ScenarioConfig, load_config, load_preset
from .runner import RunArtifacts, export_run, read_run, run_scenario, sweep_tilt
from .analysis import (
    DetectionResult,
    EstimationReport,
    EstimationUnavailable,
    PatternLookup,
    PeakParams,
    detect_atf,
    estimate_tilt_pattern_match,
    estimate_tilt_transient,
    invert_rma,
    mwr_profile,
    predicted_ratio,
    select_peaks,
    transient_cost,
)
from .echo import (
    EchoContribution,
    LinkBudget,
    SensingReference,
    noise_power,
    path_amplitude,
    synthesize_echo,
)
from .estimators import MwrChangeDetector, PatternMatchTilt, TransientModelTilt
from .pipeline import (
    ClutterHeatMap,
    RangeProfile,
    RmaState,
    SectorScanner,
    azimuth_average,
    matched_filter,
    max_range,
    rma_update,
)
from .scene import (
    BaseStation,
    MovingTarget,
    PatternConfig,
    Scene,
    StaticScatterer,
    TiltState,
    antenna_gain_db,
    cylinder_rcs,
    effective_elevation,
    elevation_angle,
    radial_velocity,
)
from .waveform import (
    BasebandSegment,
    Numerology,
    SlotPartitionError,
    SlotPlan,
    WaveformKind,
    build_slot_plan,
    gen_lfm_symbol,
    gen_ofdm_symbol,
    qpsk_payload,
)
