"""Numerology-derived timing, slot partitioning, and sensing-waveform synthesis.

One slot holds 14 symbols. With OFDM-based sensing the last downlink symbol
doubles as the sensing reference; with LFM-based sensing one dedicated symbol
carries the chirp, so the downlink count drops by one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.signal import czt

SYMBOLS_PER_SLOT = 14
BASE_SCS_HZ = 15e3


class WaveformKind(str, Enum):
    OFDM = "ofdm"
    LFM = "lfm"


@dataclass(frozen=True)
class Numerology:
    """5G NR numerology: subcarrier spacing 2^mu * 15 kHz."""

    mu: int = 2

    def __post_init__(self):
        if self.mu not in range(7):
            raise ValueError(f"numerology mu must be in 0..6, got {self.mu}")

    @property
    def scs_hz(self) -> float:
        return (2**self.mu) * BASE_SCS_HZ

    @property
    def symbol_duration_s(self) -> float:
        return 1.0 / self.scs_hz


class SlotPartitionError(ValueError):
    """Raised when a DL/sensing/UL split does not fill the 14-symbol slot."""


@dataclass(frozen=True)
class SlotPlan:
    """Partition of one slot into downlink, sensing-reception, and uplink.

    For the LFM kind, one additional symbol (not counted in ``n_dl``) is
    reserved for the chirp, so n_dl + 1 + n_sense_rx + n_ul must equal 14.
    """

    numerology: Numerology
    kind: WaveformKind
    n_dl: int
    n_sense_rx: int
    n_ul: int
    n_slots_per_frame: int = 1

    def __post_init__(self):
        for name in ("n_dl", "n_sense_rx", "n_ul"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.n_slots_per_frame < 1:
            raise ValueError("n_slots_per_frame must be >= 1")
        total = self.n_dl + self.n_sense_rx + self.n_ul + self.sensing_tx_symbols
        if total != SYMBOLS_PER_SLOT:
            raise SlotPartitionError(
                f"{self.kind.value} slot partition sums to {total} symbols, "
                f"expected {SYMBOLS_PER_SLOT}"
            )

    @property
    def sensing_tx_symbols(self) -> int:
        # OFDM reuses the last DL symbol; LFM spends a dedicated one.
        return 1 if self.kind is WaveformKind.LFM else 0

    @property
    def slot_duration_s(self) -> float:
        return SYMBOLS_PER_SLOT * self.numerology.symbol_duration_s

    @property
    def reception_duration_s(self) -> float:
        return self.n_sense_rx * self.numerology.symbol_duration_s


def build_slot_plan(numerology: Numerology, kind, n_dl: int, n_sense_rx: int,
                    n_ul: int, n_slots_per_frame: int = 1) -> SlotPlan:
    """Validate and build a slot plan; raises SlotPartitionError on a bad split."""
    return SlotPlan(
        numerology=numerology,
        kind=WaveformKind(kind),
        n_dl=n_dl,
        n_sense_rx=n_sense_rx,
        n_ul=n_ul,
        n_slots_per_frame=n_slots_per_frame,
    )


@dataclass(frozen=True)
class BasebandSegment:
    """Complex baseband samples with their sample rate and nominal duration."""

    samples: np.ndarray
    sample_rate_hz: float
    duration_s: float

    def __post_init__(self):
        expected = int(round(self.duration_s * self.sample_rate_hz))
        if len(self.samples) != expected:
            raise ValueError(
                f"segment holds {len(self.samples)} samples, expected "
                f"{expected} for {self.duration_s} s at {self.sample_rate_hz} Hz"
            )
        if not np.all(np.isfinite(self.samples.view(float))):
            raise ValueError("segment samples must be finite")

    def __len__(self):
        return len(self.samples)


def sample_count(duration_s: float, sample_rate_hz: float) -> int:
    return int(round(duration_s * sample_rate_hz))


def subcarrier_synthesis(payloads: np.ndarray, scs_hz: float, sample_rate_hz: float,
                         n_samples: int, t0_s: float = 0.0) -> np.ndarray:
    """Evaluate sum_k d_k exp(j 2 pi k scs (t0 + n/fs)) for n = 0..n_samples-1.

    ``payloads`` may be 1-D (one symbol) or 2-D (subcarriers x columns) to
    synthesize several symbols in one pass. Uses a chirp-z transform, which
    matches the direct summation to near machine precision on any sample
    grid (the grid need not align with the subcarrier spacing).
    """
    d = np.asarray(payloads, dtype=complex)
    squeeze = d.ndim == 1
    if squeeze:
        d = d[:, None]
    if t0_s != 0.0:
        rot = np.exp(2j * np.pi * np.arange(d.shape[0]) * scs_hz * t0_s)
        d = d * rot[:, None]
    w = np.exp(2j * np.pi * scs_hz / sample_rate_hz)
    out = czt(d, m=n_samples, w=w, a=1.0, axis=0)
    return out[:, 0] if squeeze else out


def gen_ofdm_symbol(payload: np.ndarray, numerology: Numerology,
                    sample_rate_hz: float) -> BasebandSegment:
    """One OFDM symbol: s(t) = sum_k d_k exp(j 2 pi k scs t), 0 <= t < T_sym.

    Subcarriers are indexed one-sided from baseband (k = 0..N_SC-1). The
    occupied band N_SC * scs must fit inside the sample rate.
    """
    payload = np.asarray(payload, dtype=complex)
    if payload.ndim != 1 or len(payload) == 0:
        raise ValueError("payload must be a non-empty 1-D complex sequence")
    occupied = len(payload) * numerology.scs_hz
    if occupied > sample_rate_hz * (1.0 + 1e-12):
        raise ValueError(
            f"occupied band {occupied:.3e} Hz exceeds sample rate "
            f"{sample_rate_hz:.3e} Hz"
        )
    n = sample_count(numerology.symbol_duration_s, sample_rate_hz)
    samples = subcarrier_synthesis(payload, numerology.scs_hz, sample_rate_hz, n)
    return BasebandSegment(samples, sample_rate_hz, numerology.symbol_duration_s)


def gen_lfm_symbol(bandwidth_hz: float, numerology: Numerology,
                   sample_rate_hz: float) -> BasebandSegment:
    """One LFM chirp symbol: s(t) = exp(j pi (BW/T) t (t - T)), 0 <= t < T.

    Unit modulus everywhere; the instantaneous frequency sweeps -BW/2 to
    +BW/2 across the symbol.
    """
    if bandwidth_hz <= 0.0:
        raise ValueError("bandwidth must be positive")
    if bandwidth_hz > sample_rate_hz * (1.0 + 1e-12):
        raise ValueError(
            f"bandwidth {bandwidth_hz:.3e} Hz exceeds sample rate "
            f"{sample_rate_hz:.3e} Hz"
        )
    t_sym = numerology.symbol_duration_s
    n = sample_count(t_sym, sample_rate_hz)
    t = np.arange(n) / sample_rate_hz
    samples = np.exp(1j * np.pi * (bandwidth_hz / t_sym) * t * (t - t_sym))
    return BasebandSegment(samples, sample_rate_hz, t_sym)


def lfm_delayed_samples(bandwidth_hz: float, t_sym_s: float,
                        times_s: np.ndarray) -> np.ndarray:
    """Chirp samples at arbitrary (already delay-shifted) times in [0, T]."""
    return np.exp(1j * np.pi * (bandwidth_hz / t_sym_s) * times_s * (times_s - t_sym_s))


_QPSK_POINTS = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / math.sqrt(2.0)


def qpsk_payload(seed, n_subcarriers: int) -> np.ndarray:
    """Reproducible unit-power QPSK symbols drawn uniformly from {±1±j}/sqrt(2)."""
    if n_subcarriers < 1:
        raise ValueError("need at least one subcarrier")
    rng = np.random.default_rng(seed)
    return _QPSK_POINTS[rng.integers(0, 4, size=n_subcarriers)]


def default_subcarrier_count(bandwidth_hz: float, numerology: Numerology) -> int:
    """Number of subcarriers filling the signal bandwidth: floor(BW / scs)."""
    return int(math.floor(bandwidth_hz / numerology.scs_hz))
