"""Scene geometry, antenna radiation pattern, and scatterer reflectivity.

Everything needed to map a point in the scene to an angle, a gain, and a
radar cross-section: base-station geometry, the parametric sector-antenna
pattern, cylindrical-scatterer RCS, and line-of-sight kinematics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import SPEED_OF_LIGHT


@dataclass(frozen=True)
class PatternConfig:
    """Parametric sector antenna element pattern.

    Single-cut attenuation follows 12*(angle/HPBW)^2, clipped at the
    side-lobe level (elevation cut) or the front-back ratio (azimuth cut);
    the cuts combine through the standard min-sum composition.

    Attributes
    ----------
    hpbw_elevation_deg : float
        Elevation half-power beamwidth (degrees).
    hpbw_azimuth_deg : float
        Azimuth half-power beamwidth (degrees).
    gain_max_db : float
        Boresight gain (dB).
    side_lobe_db : float
        Elevation side-lobe attenuation limit (dB).
    front_back_db : float
        Azimuth front-back attenuation limit (dB).
    elements_horizontal, elements_vertical : int
        Array element counts. Metadata only; the beam is modeled by the
        half-power beamwidths, not an explicit array factor.
    """

    hpbw_elevation_deg: float = 6.0
    hpbw_azimuth_deg: float = 6.0
    gain_max_db: float = 21.0
    side_lobe_db: float = 30.0
    front_back_db: float = 30.0
    elements_horizontal: int = 16
    elements_vertical: int = 12

    def __post_init__(self):
        for name in ("hpbw_elevation_deg", "hpbw_azimuth_deg"):
            v = getattr(self, name)
            if not 0.0 < v < 180.0:
                raise ValueError(f"{name} must be in (0, 180) degrees, got {v}")
        for name in ("gain_max_db", "side_lobe_db", "front_back_db"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def elevation_clip_onset_deg(self) -> float:
        """Offset at which the elevation cut saturates at the side-lobe level."""
        return self.hpbw_elevation_deg * math.sqrt(self.side_lobe_db / 12.0)


@dataclass(frozen=True)
class BaseStation:
    """Base-station placement and antenna configuration.

    ``position`` is (x, y, z) in meters with z the antenna height above
    ground. ``boresight_azimuth_deg`` points the sector center;
    ``nominal_downtilt_deg`` is the mechanical downtilt under normal
    operation (boresight elevation 90 + downtilt, measured from zenith).
    """

    position: tuple[float, float, float] = (0.0, 0.0, 60.0)
    boresight_azimuth_deg: float = 45.0
    nominal_downtilt_deg: float = 0.0
    pattern: PatternConfig = field(default_factory=PatternConfig)

    def __post_init__(self):
        if self.position[2] <= 0.0:
            raise ValueError("BS antenna height must be positive")
        if not 0.0 <= self.boresight_azimuth_deg < 360.0:
            raise ValueError("boresight azimuth must lie in [0, 360)")

    @property
    def height_m(self) -> float:
        return self.position[2]


@dataclass(frozen=True)
class StaticScatterer:
    """Cylindrical static scatterer in BS-relative polar coordinates."""

    range_m: float
    azimuth_deg: float
    diameter_m: float
    height_m: float

    def __post_init__(self):
        if self.range_m <= 0.0:
            raise ValueError("scatterer range must be positive")
        if self.diameter_m <= 0.0:
            raise ValueError("scatterer diameter must be positive")
        if self.height_m < 0.0:
            raise ValueError("scatterer height must be non-negative")

    def position(self, bs: BaseStation) -> np.ndarray:
        """Ground position (x, y, z=height) from the BS-relative polar spec."""
        az = math.radians(self.azimuth_deg)
        return np.array(
            [
                bs.position[0] + self.range_m * math.cos(az),
                bs.position[1] + self.range_m * math.sin(az),
                self.height_m,
            ]
        )


@dataclass(frozen=True)
class MovingTarget:
    """Point target with constant velocity and fixed RCS."""

    initial_position: tuple[float, float, float]
    velocity: tuple[float, float, float]
    rcs_m2: float = 1.0

    def __post_init__(self):
        if self.rcs_m2 <= 0.0:
            raise ValueError("target RCS must be positive")

    def position_at(self, elapsed_s: float) -> np.ndarray:
        return np.asarray(self.initial_position, float) + elapsed_s * np.asarray(
            self.velocity, float
        )


@dataclass(frozen=True)
class TiltState:
    """Nominal downtilt plus an injected offset that activates at a given scan.

    ``offset_deg`` is the unknown extra mechanical downtilt; it takes effect
    for every scan index >= ``active_from_scan`` (scans are 1-based).
    """

    nominal_deg: float = 0.0
    offset_deg: float = 0.0
    active_from_scan: int = 1

    def __post_init__(self):
        if self.offset_deg < 0.0:
            raise ValueError("tilt offset must be non-negative")
        if self.active_from_scan < 1:
            raise ValueError("activation scan index must be >= 1")

    def total_downtilt_deg(self, scan_index: int) -> float:
        if scan_index >= self.active_from_scan:
            return self.nominal_deg + self.offset_deg
        return self.nominal_deg


@dataclass(frozen=True)
class Scene:
    """A base station plus the static and moving scatterers it senses."""

    bs: BaseStation
    static: tuple[StaticScatterer, ...] = ()
    moving: tuple[MovingTarget, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "static", tuple(self.static))
        object.__setattr__(self, "moving", tuple(self.moving))


def elevation_angle(range_m, bs_height_m, scatterer_height_m=0.0):
    """Geometric elevation angle of a scene point, measured from the zenith.

    theta_g(r) = 90 deg + arctan((h_BS - h_s) / r)

    Angles above 90 deg look below the horizontal (BS above the scatterer).
    Accepts scalars or arrays; ranges must be strictly positive.
    """
    r = np.asarray(range_m, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("range must be positive")
    theta = 90.0 + np.degrees(np.arctan((bs_height_m - scatterer_height_m) / r))
    if theta.ndim == 0:
        return float(theta)
    return theta


def effective_elevation(theta_g_deg, tilt: TiltState, scan_index: int):
    """Elevation relative to the tilted antenna frame for a given scan.

    Subtracts the nominal downtilt, plus the failure offset once the scan
    index reaches the activation scan.
    """
    return theta_g_deg - tilt.total_downtilt_deg(scan_index)


def antenna_gain_db(theta_off_deg, phi_off_deg, pattern: PatternConfig):
    """One-way element gain (dB) at the given offsets from boresight.

    Vertical cut:   A_V = -min(12 (theta/theta_HP)^2, SLL)
    Horizontal cut: A_H = -min(12 (phi/phi_HP)^2, FBR)
    Combined:       G = G_max - min(-(A_V + A_H), FBR)

    Works elementwise on array inputs.
    """
    theta = np.asarray(theta_off_deg, dtype=float)
    phi = np.asarray(phi_off_deg, dtype=float)
    a_v = -np.minimum(
        12.0 * (theta / pattern.hpbw_elevation_deg) ** 2, pattern.side_lobe_db
    )
    a_h = -np.minimum(
        12.0 * (phi / pattern.hpbw_azimuth_deg) ** 2, pattern.front_back_db
    )
    gain = pattern.gain_max_db - np.minimum(-(a_v + a_h), pattern.front_back_db)
    if gain.ndim == 0:
        return float(gain)
    return gain


def elevation_gain_db(theta_off_deg, pattern: PatternConfig):
    """Elevation-cut gain (dB): the azimuth offset held at boresight."""
    return antenna_gain_db(theta_off_deg, 0.0, pattern)


def cylinder_rcs(diameter_m, height_m, wavelength_m):
    """Broadside far-field RCS of a conducting cylinder (m^2).

    sigma = 2 pi a h^2 / lambda, with a the cylinder radius.
    """
    if diameter_m <= 0.0 or height_m <= 0.0 or wavelength_m <= 0.0:
        raise ValueError("cylinder RCS inputs must be positive")
    return 2.0 * math.pi * (diameter_m / 2.0) * height_m**2 / wavelength_m


def carrier_wavelength(carrier_hz: float) -> float:
    if carrier_hz <= 0.0:
        raise ValueError("carrier frequency must be positive")
    return SPEED_OF_LIGHT / carrier_hz


def radial_velocity(target_position, target_velocity, bs_position):
    """Signed radial speed of a target along the BS line of sight (m/s).

    Projection of the velocity on the BS->target unit vector; positive
    means the target recedes from the BS.
    """
    p = np.asarray(target_position, dtype=float)
    v = np.asarray(target_velocity, dtype=float)
    b = np.asarray(bs_position, dtype=float)
    los = p - b
    dist = np.linalg.norm(los)
    if dist == 0.0:
        raise ValueError("target coincides with the base station")
    return float(np.dot(v, los / dist))
