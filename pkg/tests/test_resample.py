import numpy as np
import pytest

from capkit import _resample_py
from capkit.audio import Waveform
from capkit.errors import ConfigError
from capkit.resample import design_filter, resample


def sine(freq, rate, seconds=1.0, amp=1.0):
    t = np.arange(int(rate * seconds)) / rate
    return Waveform((amp * np.sin(2 * np.pi * freq * t)).astype(np.float32), rate)


def dft_peak(wave: Waveform):
    spec = np.abs(np.fft.rfft(wave.samples.astype(np.float64)))
    freqs = np.fft.rfftfreq(len(wave.samples), 1 / wave.sample_rate)
    peak = int(np.argmax(spec))
    amp = 2 * spec[peak] / len(wave.samples)
    return freqs[peak], amp


class TestResample:
    def test_identity_at_target_rate(self):
        w = sine(440, 16000)
        assert resample(w, 16000) is w

    def test_sine_44100_to_16000(self):
        w = sine(1000, 44100)
        out = resample(w, 16000)
        assert out.sample_rate == 16000
        freq, amp = dft_peak(out)
        assert abs(freq - 1000.0) <= 1.0
        assert abs(amp - 1.0) <= 0.01

    def test_output_length(self):
        w = sine(500, 44100, seconds=1.0)
        out = resample(w, 16000)
        assert abs(len(out.samples) - 16000) <= 1

    def test_round_trip_rms(self):
        w = sine(1000, 44100)
        back = resample(resample(w, 16000), 44100)
        rms_in = np.sqrt(np.mean(w.samples.astype(np.float64) ** 2))
        rms_out = np.sqrt(np.mean(back.samples.astype(np.float64) ** 2))
        assert abs(rms_out / rms_in - 1.0) <= 0.02

    def test_upsampling(self):
        w = sine(1000, 16000)
        out = resample(w, 44100)
        assert len(out.samples) == 44100
        freq, amp = dft_peak(out)
        assert abs(freq - 1000.0) <= 1.0
        assert abs(amp - 1.0) <= 0.01

    def test_high_frequency_content_rejected(self):
        # 10 kHz is above the 8 kHz output Nyquist: it must be attenuated,
        # not aliased back into the band. Edge transients are broadband,
        # so measure the steady-state middle only.
        w = sine(10_000, 44100)
        out = resample(w, 16000).samples.astype(np.float64)[1000:-1000]
        rms = np.sqrt(np.mean(out**2))
        assert rms < 0.707 * 10 ** (-60 / 20)  # >= 60 dB down

    def test_bad_target_rate(self):
        with pytest.raises(ConfigError):
            resample(sine(440, 16000), 0)


class TestKernels:
    def test_native_matches_fallback(self):
        rng = np.random.default_rng(5)
        x = rng.normal(0, 0.3, 44100)
        taps = design_filter(160, 441)
        n_out = 16000
        py = _resample_py.polyphase_apply(taps, 160, 441, x, n_out)
        native_mod = pytest.importorskip("capkit._resample_c")
        native = native_mod.polyphase_apply(taps, 160, 441, x, n_out)
        assert np.allclose(py, native, atol=1e-12)

    def test_filter_dc_gain(self):
        taps = design_filter(160, 441)
        assert taps.sum() == pytest.approx(160.0)

    def test_fallback_short_input(self):
        taps = design_filter(2, 1)
        out = _resample_py.polyphase_apply(taps, 2, 1, np.ones(3), 6)
        assert out.shape == (6,)
        assert np.all(np.isfinite(out))

    def test_fallback_empty_input(self):
        taps = design_filter(2, 1)
        out = _resample_py.polyphase_apply(taps, 2, 1, np.zeros(0), 0)
        assert out.shape == (0,)
