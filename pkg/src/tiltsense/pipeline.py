"""Matched filtering, sector scanning, and clutter-heat-map assembly.

A scan sweeps the azimuth sector one 1-degree bin at a time; each bin
transmits a frame of slots, every slot's echo is pulse-compressed against
the sensing reference, and the per-slot |r|^2 outputs are averaged into a
range profile. Stacking the rows gives the instantaneous clutter heat map,
which a recursive moving-average filter smooths across scans.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import fft, ifft, next_fast_len

from .constants import SPEED_OF_LIGHT
from .echo import (
    LinkBudget,
    SensingReference,
    complex_awgn,
    moving_contributions,
    noise_power,
    render_contributions,
    static_contributions,
)
from .scene import Scene, TiltState
from .seeding import NOISE_STREAM, PAYLOAD_STREAM, derive_rng
from .waveform import (
    BasebandSegment,
    SlotPlan,
    WaveformKind,
    default_subcarrier_count,
    gen_lfm_symbol,
    gen_ofdm_symbol,
    qpsk_payload,
    sample_count,
)


@dataclass(frozen=True)
class RangeProfile:
    """Echo power versus range for one azimuth (or azimuth-averaged)."""

    power: np.ndarray
    range_axis_m: np.ndarray

    def __post_init__(self):
        if self.power.shape != self.range_axis_m.shape:
            raise ValueError("power and range axis lengths differ")

    def peak_bin(self) -> int:
        return int(np.argmax(self.power))


@dataclass(frozen=True)
class ClutterHeatMap:
    """Azimuth x range grid of averaged echo power for one scan."""

    grid: np.ndarray  # (n_azimuth, n_range), non-negative
    azimuth_axis_deg: np.ndarray
    range_axis_m: np.ndarray
    scan_index: int

    def __post_init__(self):
        n_az, n_r = self.grid.shape
        if len(self.azimuth_axis_deg) != n_az or len(self.range_axis_m) != n_r:
            raise ValueError("CHM axes do not match the grid shape")


@dataclass(frozen=True)
class RmaState:
    """Recursive moving average y_k = alpha y_{k-1} + (1-alpha) x_k."""

    smoothed: np.ndarray | None
    window: int
    updates: int = 0

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("RMA window must be >= 1")

    @property
    def alpha(self) -> float:
        return (self.window - 1) / self.window


def rma_alpha(window: int) -> float:
    if window < 1:
        raise ValueError("RMA window must be >= 1")
    return (window - 1) / window


def rma_update(state: RmaState, x: np.ndarray) -> RmaState:
    """One filter step; the first update adopts the input as-is."""
    x = np.asarray(x, dtype=float)
    if state.smoothed is None:
        return RmaState(x.copy(), state.window, 1)
    if state.smoothed.shape != x.shape:
        raise ValueError(
            f"RMA input shape {x.shape} does not match state {state.smoothed.shape}"
        )
    a = state.alpha
    return RmaState(a * state.smoothed + (1.0 - a) * x, state.window,
                    state.updates + 1)


def max_range(numerology, n_sense_rx: int) -> float:
    """Unambiguous sensing range: R_max = c * N_SR * T_sym / 2."""
    if n_sense_rx < 1:
        raise ValueError("need at least one reception symbol")
    return SPEED_OF_LIGHT * n_sense_rx * numerology.symbol_duration_s / 2.0


def range_axis(n_bins: int, sample_rate_hz: float) -> np.ndarray:
    """Range per lag bin: c * i / (2 fs)."""
    return SPEED_OF_LIGHT * np.arange(n_bins) / (2.0 * sample_rate_hz)


def azimuth_axis(boresight_deg: float, sector_width_deg: float,
                 n_bins: int) -> np.ndarray:
    """Bin-center azimuths covering [boresight - width/2, boresight + width/2)."""
    step = sector_width_deg / n_bins
    start = boresight_deg - sector_width_deg / 2.0
    return start + (np.arange(n_bins) + 0.5) * step


def matched_filter(ref: BasebandSegment, rx: BasebandSegment,
                   method: str = "fft") -> np.ndarray:
    """Cross-correlation r(i) = sum_n ref[n] * conj(rx[n + i]) at integer lags.

    Returns one complex value per lag i = 0..len(rx)-1; lags where the
    reference runs past the end of the receive window keep their partial
    sums. The FFT path matches the direct summation to float precision.
    """
    if ref.sample_rate_hz != rx.sample_rate_hz:
        raise ValueError("reference and receive sample rates differ")
    a = np.asarray(ref.samples, complex)
    b = np.asarray(rx.samples, complex)
    if len(b) < len(a):
        raise ValueError("receive window shorter than the reference")
    if method == "direct":
        n_lags = len(b)
        padded = np.concatenate([b, np.zeros(len(a), complex)])
        return np.array(
            [np.dot(a, np.conj(padded[i:i + len(a)])) for i in range(n_lags)]
        )
    if method != "fft":
        raise ValueError(f"unknown matched-filter method {method!r}")
    return _correlate_fft(fft(a, _corr_nfft(len(a), len(b))), len(a), b)


def _corr_nfft(n_ref: int, n_rx: int) -> int:
    return next_fast_len(n_ref + n_rx - 1)


def _correlate_fft(ref_fft: np.ndarray, n_ref: int, rx: np.ndarray) -> np.ndarray:
    """FFT correlation against a precomputed reference spectrum."""
    n_rx = len(rx)
    nfft = len(ref_fft)
    spec = fft(np.conj(rx)[::-1], nfft)
    full = ifft(ref_fft * spec)[: n_ref + n_rx - 1]
    return full[n_rx - 1::-1]


class SectorScanner:
    """Produces instantaneous clutter heat maps for a configured sensing setup.

    Holds everything that stays fixed across scans: the scene, slot plan,
    link budget, sensing reference, sector geometry, and the master seed.
    Noise realizations are drawn from per-(scan, azimuth, slot) derived
    seeds, so results do not depend on evaluation order.
    """

    def __init__(self, scene: Scene, plan: SlotPlan, lb: LinkBudget, *,
                 sample_rate_hz: float, bandwidth_hz: float,
                 sector_width_deg: float, n_azimuth_bins: int,
                 master_seed: int = 0, noise_enabled: bool = True,
                 per_slot_payload: bool = False):
        self.scene = scene
        self.plan = plan
        self.lb = lb
        self.sample_rate_hz = float(sample_rate_hz)
        self.bandwidth_hz = float(bandwidth_hz)
        self.master_seed = int(master_seed)
        self.per_slot_payload = bool(per_slot_payload)
        self.n_azimuth_bins = int(n_azimuth_bins)
        self.azimuth_axis_deg = azimuth_axis(
            scene.bs.boresight_azimuth_deg, sector_width_deg, n_azimuth_bins
        )
        self.n_range_bins = sample_count(plan.reception_duration_s, sample_rate_hz)
        self.range_axis_m = range_axis(self.n_range_bins, sample_rate_hz)
        self.noise_power_w = noise_power(lb) if noise_enabled else 0.0
        if plan.kind is WaveformKind.OFDM:
            self.n_subcarriers = default_subcarrier_count(bandwidth_hz, plan.numerology)
        else:
            self.n_subcarriers = 0
        self._fixed_ref = None if per_slot_payload else self._make_reference(
            derive_rng(self.master_seed, PAYLOAD_STREAM)
        )
        self._ref_fft_cache: dict[int, np.ndarray] = {}

    # ------------------------------------------------------------------
    def _make_reference(self, rng) -> SensingReference:
        num = self.plan.numerology
        if self.plan.kind is WaveformKind.OFDM:
            payload = qpsk_payload(rng, self.n_subcarriers)
            seg = gen_ofdm_symbol(payload, num, self.sample_rate_hz)
            return SensingReference(WaveformKind.OFDM, num, seg, payload=payload)
        seg = gen_lfm_symbol(self.bandwidth_hz, num, self.sample_rate_hz)
        return SensingReference(WaveformKind.LFM, num, seg,
                                bandwidth_hz=self.bandwidth_hz)

    def reference(self, scan_index: int = 1, az_index: int = 0,
                  slot_index: int = 0) -> SensingReference:
        """Sensing reference for one slot (shared unless per-slot payloads)."""
        if self._fixed_ref is not None:
            return self._fixed_ref
        rng = derive_rng(self.master_seed, PAYLOAD_STREAM, scan_index, az_index,
                         slot_index)
        return self._make_reference(rng)

    def noise_floor(self) -> float:
        """Expected matched-filter output power at a noise-only bin."""
        return self.noise_power_w * self.reference().energy

    def _ref_spectrum(self, ref: SensingReference) -> np.ndarray:
        key = id(ref)
        spec = self._ref_fft_cache.get(key)
        if spec is None:
            nfft = _corr_nfft(len(ref.segment), self.n_range_bins)
            spec = fft(np.asarray(ref.segment.samples, complex), nfft)
            self._ref_fft_cache = {key: spec}
        return spec

    def slot_clock(self, scan_index: int, az_index: int, slot_index: int) -> int:
        """Absolute slot count since the run began (scan indices are 1-based)."""
        frames = (scan_index - 1) * self.n_azimuth_bins + az_index
        return frames * self.plan.n_slots_per_frame + slot_index

    # ------------------------------------------------------------------
    def azimuth_range_profile(self, tilt: TiltState, scan_index: int,
                              az_index: int) -> RangeProfile:
        """Slot-averaged |r|^2 profile for one steering direction.

        The static-clutter correlation is computed once and reused across
        the frame's slots (it only changes with the payload); per-slot work
        reduces to the moving targets and the noise realization.
        """
        steering = float(self.azimuth_axis_deg[az_index])
        n_slots = self.plan.n_slots_per_frame
        n_r = self.n_range_bins
        moving = self.scene.moving
        accum = np.zeros(n_r)

        ref = None
        r_static = None
        for slot in range(n_slots):
            if ref is None or self.per_slot_payload:
                ref = self.reference(scan_index, az_index, slot)
                ref_fft = self._ref_spectrum(ref)
                statics = static_contributions(
                    self.scene, steering, tilt, scan_index, self.lb
                )
                static_echo = render_contributions(statics, ref, n_r)
                r_static = _correlate_fft(ref_fft, len(ref.segment), static_echo)
            extra = np.zeros(0, complex)
            if moving:
                elapsed = self.slot_clock(scan_index, az_index, slot) * \
                    self.plan.slot_duration_s
                movers = moving_contributions(
                    self.scene, steering, tilt, scan_index, self.lb, elapsed
                )
                extra = render_contributions(movers, ref, n_r)
            if self.noise_power_w > 0.0:
                rng = derive_rng(self.master_seed, NOISE_STREAM, scan_index,
                                 az_index, slot)
                noise = complex_awgn(rng, n_r, self.noise_power_w)
                extra = extra + noise if len(extra) else noise
            if len(extra):
                r = r_static + _correlate_fft(ref_fft, len(ref.segment), extra)
            else:
                r = r_static
            accum += np.abs(r) ** 2
            if not len(extra) and not self.per_slot_payload:
                # deterministic slots: every remaining slot is identical
                accum *= n_slots
                break
        return RangeProfile(accum / n_slots, self.range_axis_m)

    def scan_sector(self, tilt: TiltState, scan_index: int) -> ClutterHeatMap:
        """One full sweep over the sector: one range profile per azimuth bin."""
        grid = np.empty((self.n_azimuth_bins, self.n_range_bins))
        for az in range(self.n_azimuth_bins):
            grid[az] = self.azimuth_range_profile(tilt, scan_index, az).power
        return ClutterHeatMap(grid, self.azimuth_axis_deg.copy(),
                              self.range_axis_m.copy(), scan_index)


def azimuth_average(chm: ClutterHeatMap) -> RangeProfile:
    """Arithmetic mean over azimuth rows, per range bin."""
    return RangeProfile(chm.grid.mean(axis=0), chm.range_axis_m)
