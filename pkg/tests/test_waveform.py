import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tiltsense.waveform import (
    Numerology,
    SlotPartitionError,
    WaveformKind,
    build_slot_plan,
    default_subcarrier_count,
    gen_lfm_symbol,
    gen_ofdm_symbol,
    qpsk_payload,
)

MU2 = Numerology(2)


class TestNumerology:
    @pytest.mark.parametrize("mu,scs", [(0, 15e3), (1, 30e3), (2, 60e3),
                                        (3, 120e3), (4, 240e3), (5, 480e3),
                                        (6, 960e3)])
    def test_subcarrier_spacing(self, mu, scs):
        num = Numerology(mu)
        assert num.scs_hz == pytest.approx(scs)
        assert num.symbol_duration_s * num.scs_hz == pytest.approx(1.0)

    def test_mu_out_of_range(self):
        with pytest.raises(ValueError):
            Numerology(7)


class TestSlotPlan:
    def test_reference_ofdm_partition(self):
        plan = build_slot_plan(MU2, "ofdm", 6, 5, 3)
        assert plan.kind is WaveformKind.OFDM
        assert plan.n_dl + plan.n_sense_rx + plan.n_ul == 14

    def test_reference_lfm_partition(self):
        plan = build_slot_plan(MU2, "lfm", 5, 5, 3)
        assert plan.sensing_tx_symbols == 1
        assert plan.n_dl + 1 + plan.n_sense_rx + plan.n_ul == 14

    def test_overfull_ofdm_partition_rejected(self):
        with pytest.raises(SlotPartitionError, match="15"):
            build_slot_plan(MU2, "ofdm", 7, 5, 3)

    @given(st.integers(0, 14), st.integers(0, 14), st.integers(0, 14),
           st.sampled_from(["ofdm", "lfm"]))
    def test_partition_rule_is_exact(self, n_dl, n_sr, n_ul, kind):
        reserved = 1 if kind == "lfm" else 0
        total = n_dl + reserved + n_sr + n_ul
        if total == 14:
            plan = build_slot_plan(MU2, kind, n_dl, n_sr, n_ul)
            assert plan.n_dl + plan.sensing_tx_symbols + plan.n_sense_rx + plan.n_ul == 14
        else:
            with pytest.raises(SlotPartitionError):
                build_slot_plan(MU2, kind, n_dl, n_sr, n_ul)

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            build_slot_plan(MU2, "ofdm", -1, 12, 3)


class TestOfdmSymbol:
    def test_single_dc_subcarrier_is_constant(self):
        seg = gen_ofdm_symbol(np.array([1.0 + 0j]), MU2, 61.44e6)
        assert np.allclose(seg.samples, 1.0)

    def test_duration_mu2(self):
        seg = gen_ofdm_symbol(qpsk_payload(0, 8), MU2, 61.44e6)
        assert seg.duration_s == pytest.approx(1 / 60e3)
        assert len(seg) == 1024

    def test_matches_direct_summation(self):
        # brute-force evaluation of the subcarrier sum, off-grid sample rate
        payload = qpsk_payload(123, 96)
        fs = 50e6
        seg = gen_ofdm_symbol(payload, MU2, fs)
        n = len(seg)
        k = np.arange(len(payload))
        expected = np.empty(n, complex)
        for i in range(n):
            expected[i] = np.sum(payload * np.exp(2j * np.pi * k * 60e3 * i / fs))
        err = np.max(np.abs(seg.samples - expected)) / np.max(np.abs(expected))
        assert err < 1e-9

    def test_dft_recovers_payload_on_aligned_grid(self):
        # fs = 1024 x scs: symbol-length DFT bins coincide with subcarriers
        payload = qpsk_payload(5, 833)
        seg = gen_ofdm_symbol(payload, MU2, 61.44e6)
        spectrum = np.fft.fft(seg.samples) / len(seg)
        assert np.max(np.abs(spectrum[:833] - payload)) < 1e-6

    def test_band_overflow_rejected(self):
        with pytest.raises(ValueError):
            gen_ofdm_symbol(qpsk_payload(0, 900), MU2, 50e6)  # 54 MHz > 50 MHz

    def test_default_subcarrier_count(self):
        assert default_subcarrier_count(50e6, MU2) == 833


class TestLfmSymbol:
    def test_unit_modulus(self):
        seg = gen_lfm_symbol(50e6, MU2, 61.44e6)
        assert np.allclose(np.abs(seg.samples), 1.0, atol=1e-12)

    def test_phase_zero_at_endpoints(self):
        seg = gen_lfm_symbol(50e6, MU2, 61.44e6)
        assert seg.samples[0] == pytest.approx(1.0 + 0j)
        # t = T_sym is one sample past the stored window; evaluate directly
        t_sym = MU2.symbol_duration_s
        endpoint = np.exp(1j * np.pi * (50e6 / t_sym) * t_sym * (t_sym - t_sym))
        assert endpoint == pytest.approx(1.0 + 0j)

    def test_time_reversal_symmetry(self):
        # t(t - T) is symmetric about T/2, so s(T - t) = s(t)
        seg = gen_lfm_symbol(50e6, MU2, 61.44e6)
        s = seg.samples
        assert np.allclose(s[1:], s[:0:-1], atol=1e-9)

    def test_instantaneous_frequency_sweep(self):
        bw, fs = 50e6, 61.44e6
        seg = gen_lfm_symbol(bw, MU2, fs)
        phase = np.unwrap(np.angle(seg.samples))
        inst_freq = np.gradient(phase) * fs / (2 * np.pi)
        assert inst_freq[1] == pytest.approx(-bw / 2, rel=0.01)
        assert inst_freq[-2] == pytest.approx(bw / 2, rel=0.01)

    def test_autocorrelation_mainlobe_width(self):
        # matched-filter oracle on a fine delay grid: -3 dB width vs 1/BW
        bw, fs = 50e6, 61.44e6
        t_sym = MU2.symbol_duration_s
        seg = gen_lfm_symbol(bw, MU2, fs)
        t = np.arange(len(seg)) / fs

        def corr_power(tau):
            shifted = np.where(
                (t + tau >= 0) & (t + tau <= t_sym),
                np.exp(1j * np.pi * (bw / t_sym) * (t + tau) * (t + tau - t_sym)),
                0.0,
            )
            return np.abs(np.sum(seg.samples * np.conj(shifted))) ** 2

        taus = np.linspace(-2 / bw, 2 / bw, 801)
        power = np.array([corr_power(tau) for tau in taus])
        half = power.max() / 2.0
        above = taus[power >= half]
        width = above[-1] - above[0]
        assert width == pytest.approx(1 / bw, rel=0.20)

    def test_bandwidth_overflow_rejected(self):
        with pytest.raises(ValueError):
            gen_lfm_symbol(60e6, MU2, 50e6)


class TestQpskPayload:
    def test_unit_modulus(self):
        symbols = qpsk_payload(42, 833)
        assert np.allclose(np.abs(symbols), 1.0)

    def test_deterministic_per_seed(self):
        assert np.array_equal(qpsk_payload(9, 256), qpsk_payload(9, 256))
        assert not np.array_equal(qpsk_payload(9, 256), qpsk_payload(10, 256))

    def test_symbol_frequencies_near_uniform(self):
        symbols = qpsk_payload(2, 833)
        points, counts = np.unique(symbols, return_counts=True)
        assert len(points) == 4
        assert np.all(np.abs(counts / 833 - 0.25) <= 0.05 * 0.25)

    def test_large_sample_uniformity(self):
        symbols = qpsk_payload(3, 80000)
        _, counts = np.unique(symbols, return_counts=True)
        assert np.all(np.abs(counts / 80000 - 0.25) < 0.25 * 0.02)

    def test_needs_at_least_one(self):
        with pytest.raises(ValueError):
            qpsk_payload(0, 0)
