"""Superposed radar echo synthesis for one steering direction and one slot.

Each scatterer contributes a delayed, gain-weighted, Doppler-shifted copy of
the reference sensing waveform; complex white Gaussian noise is added on top.
Fractional delays are evaluated analytically (subcarrier phase rotation for
OFDM, direct chirp evaluation for LFM), so sub-sample range offsets survive
into the matched-filter output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import BOLTZMANN, SPEED_OF_LIGHT
from .scene import (
    Scene,
    TiltState,
    antenna_gain_db,
    carrier_wavelength,
    cylinder_rcs,
    effective_elevation,
    elevation_angle,
    radial_velocity,
)
from .waveform import (
    BasebandSegment,
    Numerology,
    SlotPlan,
    WaveformKind,
    lfm_delayed_samples,
    sample_count,
    subcarrier_synthesis,
)


@dataclass(frozen=True)
class LinkBudget:
    """Transmit power, carrier, path loss, and receiver noise parameters."""

    transmit_power_w: float = 1000.0
    carrier_hz: float = 3.7e9
    path_loss_exponent: float = 1.785
    noise_figure_db: float = 5.0
    system_temperature_k: float = 290.0
    bandwidth_hz: float = 50e6
    two_way_path_loss: bool = True  # distance exponent 2*lambda when True

    def __post_init__(self):
        for name in ("transmit_power_w", "carrier_hz", "path_loss_exponent",
                     "system_temperature_k", "bandwidth_hz"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class SensingReference:
    """The transmitted sensing waveform plus what is needed to delay it exactly."""

    kind: WaveformKind
    numerology: Numerology
    segment: BasebandSegment
    payload: np.ndarray | None = None  # OFDM subcarrier symbols
    bandwidth_hz: float | None = None  # LFM sweep bandwidth

    @property
    def sample_rate_hz(self) -> float:
        return self.segment.sample_rate_hz

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.segment.samples) ** 2))

    def delayed_window(self, t0_s: float, n_samples: int) -> np.ndarray:
        """Waveform samples at times t0 + n/fs, n = 0..n_samples-1 (t0 in [0, T))."""
        if self.kind is WaveformKind.OFDM:
            return subcarrier_synthesis(
                self.payload, self.numerology.scs_hz, self.sample_rate_hz,
                n_samples, t0_s=t0_s,
            )
        t = t0_s + np.arange(n_samples) / self.sample_rate_hz
        return lfm_delayed_samples(
            self.bandwidth_hz, self.numerology.symbol_duration_s, t
        )


@dataclass(frozen=True)
class EchoContribution:
    """One scatterer's channel coefficient, delay, gain, and Doppler."""

    scatterer_id: str
    beta: complex  # path amplitude including RCS, path loss, carrier phase
    gain_db: float  # one-way antenna gain toward the scatterer
    delay_s: float
    doppler_hz: float

    def __post_init__(self):
        if self.delay_s < 0.0:
            raise ValueError("delay must be non-negative")
        if not (math.isfinite(self.beta.real) and math.isfinite(self.beta.imag)):
            raise ValueError("beta must be finite")

    @property
    def weight(self) -> complex:
        # Eq-level amplitude: beta * G^2 with G the one-way amplitude gain,
        # i.e. a two-way linear power-gain factor on the field amplitude.
        return self.beta * 10.0 ** (self.gain_db / 10.0)


def noise_power(lb: LinkBudget) -> float:
    """Receiver noise power N0 = k * T_sys * BW * F (F the linear noise factor)."""
    return BOLTZMANN * lb.system_temperature_k * lb.bandwidth_hz * (
        10.0 ** (lb.noise_figure_db / 10.0)
    )


def path_amplitude(range_m: float, rcs_m2: float, lb: LinkBudget) -> float:
    """Monostatic path amplitude |beta| for a scatterer at the given range.

    |beta|^2 = P_t * sigma * (c / (4 pi f_c))^2 / (4 pi) * r^(-2*lambda)

    The distance exponent doubles the configured path-loss exponent for the
    two-way trip (single-trip exponent when ``two_way_path_loss`` is off).
    Only ratios of these amplitudes matter downstream; the absolute constant
    sets the SNR.
    """
    if range_m <= 0.0:
        raise ValueError("range must be positive")
    exponent = 2.0 * lb.path_loss_exponent if lb.two_way_path_loss else lb.path_loss_exponent
    scale = (SPEED_OF_LIGHT / (4.0 * math.pi * lb.carrier_hz)) ** 2 / (4.0 * math.pi)
    power = lb.transmit_power_w * rcs_m2 * scale * range_m ** (-exponent)
    return math.sqrt(power)


def doppler_shift(radial_speed_mps: float, carrier_hz: float) -> float:
    """Monostatic Doppler, magnitude 2 v f_c / c; receding targets shift down."""
    return -2.0 * radial_speed_mps * carrier_hz / SPEED_OF_LIGHT


def wrap_angle_deg(angle):
    """Wrap to [-180, 180)."""
    return (np.asarray(angle, float) + 180.0) % 360.0 - 180.0


def static_contributions(scene: Scene, steering_deg: float, tilt: TiltState,
                         scan_index: int, lb: LinkBudget) -> list[EchoContribution]:
    """Per-static-scatterer echo terms for one steering direction and scan."""
    wavelength = carrier_wavelength(lb.carrier_hz)
    out = []
    for i, s in enumerate(scene.static):
        theta_g = elevation_angle(s.range_m, scene.bs.height_m, s.height_m)
        theta_eff = effective_elevation(theta_g, tilt, scan_index)
        gain = antenna_gain_db(
            theta_eff - 90.0, wrap_angle_deg(s.azimuth_deg - steering_deg),
            scene.bs.pattern,
        )
        rcs = cylinder_rcs(s.diameter_m, s.height_m, wavelength) if s.height_m > 0 else 0.0
        if rcs == 0.0:
            continue
        delay = 2.0 * s.range_m / SPEED_OF_LIGHT
        beta = path_amplitude(s.range_m, rcs, lb) * np.exp(
            -2j * np.pi * lb.carrier_hz * delay
        )
        out.append(EchoContribution(f"static-{i + 1}", complex(beta), float(gain),
                                    delay, 0.0))
    return out


def moving_contributions(scene: Scene, steering_deg: float, tilt: TiltState,
                         scan_index: int, lb: LinkBudget,
                         elapsed_s: float) -> list[EchoContribution]:
    """Per-moving-target echo terms with positions advanced to ``elapsed_s``."""
    bs_pos = np.asarray(scene.bs.position, float)
    out = []
    for i, tgt in enumerate(scene.moving):
        pos = tgt.position_at(elapsed_s)
        slant = float(np.linalg.norm(pos - bs_pos))
        if slant == 0.0:
            raise ValueError("moving target coincides with the base station")
        ground = float(np.hypot(pos[0] - bs_pos[0], pos[1] - bs_pos[1]))
        if ground == 0.0:
            continue
        theta_g = elevation_angle(ground, scene.bs.height_m, pos[2])
        theta_eff = effective_elevation(theta_g, tilt, scan_index)
        azimuth = math.degrees(math.atan2(pos[1] - bs_pos[1], pos[0] - bs_pos[0]))
        gain = antenna_gain_db(
            theta_eff - 90.0, wrap_angle_deg(azimuth - steering_deg),
            scene.bs.pattern,
        )
        v_r = radial_velocity(pos, tgt.velocity, bs_pos)
        delay = 2.0 * slant / SPEED_OF_LIGHT
        beta = path_amplitude(slant, tgt.rcs_m2, lb) * np.exp(
            -2j * np.pi * lb.carrier_hz * delay
        )
        out.append(EchoContribution(f"moving-{i + 1}", complex(beta), float(gain),
                                    delay, doppler_shift(v_r, lb.carrier_hz)))
    return out


def render_contributions(contribs, ref: SensingReference, n_out: int) -> np.ndarray:
    """Superpose delayed/weighted/Doppler-shifted reference copies.

    Output sample n sits at t = n/fs measured from the reference-symbol
    start. Contributions whose delay pushes them fully past the window are
    dropped; partial overlaps keep their in-window portion. OFDM windows for
    all contributions are synthesized in one batched chirp-z pass.
    """
    fs = ref.sample_rate_hz
    n_sym = len(ref.segment)
    out = np.zeros(n_out, dtype=complex)
    placed = []
    for c in contribs:
        n0 = int(math.ceil(c.delay_s * fs - 1e-9))
        if n0 >= n_out:
            continue
        n_take = min(n_sym, n_out - n0)
        placed.append((c, n0, n_take, n0 / fs - c.delay_s))
    if not placed:
        return out

    if ref.kind is WaveformKind.OFDM:
        k = np.arange(len(ref.payload))
        t0s = np.array([p[3] for p in placed])
        columns = ref.payload[:, None] * np.exp(
            2j * np.pi * np.outer(k * ref.numerology.scs_hz, t0s)
        )
        n_max = max(p[2] for p in placed)
        windows = subcarrier_synthesis(
            columns, ref.numerology.scs_hz, fs, n_max
        )
    else:
        windows = None

    for i, (c, n0, n_take, t0) in enumerate(placed):
        if windows is not None:
            window = windows[:n_take, i]
        else:
            window = ref.delayed_window(t0, n_take)
        if c.doppler_hz != 0.0:
            t_abs = (n0 + np.arange(n_take)) / fs
            window = window * np.exp(2j * np.pi * c.doppler_hz * t_abs)
        out[n0:n0 + n_take] += c.weight * window
    return out


def complex_awgn(rng: np.random.Generator, n: int, power_w: float) -> np.ndarray:
    """Circularly symmetric Gaussian samples with E|n|^2 = power_w."""
    scale = math.sqrt(power_w / 2.0)
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def synthesize_echo(scene: Scene, steering_deg: float, tilt: TiltState,
                    scan_index: int, ref: SensingReference, plan: SlotPlan,
                    lb: LinkBudget, rng_seed, *, slot_clock: int = 0,
                    noise_power_w: float | None = None) -> BasebandSegment:
    """Received echo over the reception window of one slot.

    The window spans the ``n_sense_rx`` symbol durations that follow the
    reference symbol; delays are measured from the reference-symbol start.
    ``slot_clock`` is the absolute slot index since the run began and drives
    the moving targets' wall-clock positions. Pass ``noise_power_w=0`` for a
    noise-free echo; ``None`` derives the noise power from the link budget.
    """
    if abs(ref.segment.duration_s - plan.numerology.symbol_duration_s) > 1e-12:
        raise ValueError("reference duration must equal one symbol duration")
    fs = ref.sample_rate_hz
    n_out = sample_count(plan.reception_duration_s, fs)
    elapsed = slot_clock * plan.slot_duration_s
    contribs = static_contributions(scene, steering_deg, tilt, scan_index, lb)
    contribs += moving_contributions(scene, steering_deg, tilt, scan_index, lb, elapsed)
    out = render_contributions(contribs, ref, n_out)
    n0 = noise_power(lb) if noise_power_w is None else noise_power_w
    if n0 > 0.0:
        out = out + complex_awgn(np.random.default_rng(rng_seed), n_out, n0)
    return BasebandSegment(out, fs, plan.reception_duration_s)
