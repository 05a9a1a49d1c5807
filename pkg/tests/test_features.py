import numpy as np
import pytest

from capkit.audio import Waveform
from capkit.errors import ConfigError, DataError
from capkit.features import FeatureParams, LogMelSpectrogram, log_mel, mel_filter_bank
from oracles import naive_log_mel
from signals import make_signals

SILENCE_VALUE = -1.5  # (log10(1e-10) + 4) / 4


@pytest.fixture(scope="module")
def golden(fixtures_dir):
    with np.load(fixtures_dir / "logmel_golden.npz") as data:
        return {name: data[name] for name in data.files}


@pytest.fixture(scope="module")
def signals():
    return make_signals()


class TestGoldenVectors:
    def test_all_signals_match_reference(self, golden, signals):
        assert set(golden) == set(signals)
        for name, signal in signals.items():
            out = log_mel(Waveform(signal, 16000)).values
            err = np.abs(out - golden[name]).max()
            assert err <= 1e-4, f"{name}: max abs err {err}"

    def test_silence_is_constant(self, signals):
        out = log_mel(Waveform(signals["silence_3s"], 16000)).values
        assert np.all(out == out.flat[0])
        assert out.flat[0] == pytest.approx(SILENCE_VALUE)


class TestShapeAndPadding:
    def test_shape_is_input_length_independent(self):
        for seconds in (0.25, 2, 30, 45):
            n = int(16000 * seconds)
            w = Waveform(np.random.default_rng(1).normal(0, 0.1, n).astype(np.float32), 16000)
            out = log_mel(w)
            assert out.values.shape == (80, 3000)

    def test_long_input_truncated_to_chunk(self):
        rng = np.random.default_rng(2)
        long = rng.normal(0, 0.1, 45 * 16000).astype(np.float32)
        full = log_mel(Waveform(long, 16000)).values
        head = log_mel(Waveform(long[: 30 * 16000], 16000)).values
        assert np.array_equal(full, head)

    def test_short_input_trailing_frames_constant(self):
        rng = np.random.default_rng(3)
        short = rng.normal(0, 0.1, 2 * 16000).astype(np.float32)
        out = log_mel(Waveform(short, 16000)).values
        # 2 s of content ends around frame 200; far-past frames see zeros
        tail = out[:, 250:]
        assert np.all(tail == tail.flat[0])
        assert tail.flat[0] == out.min()

    def test_wrong_sample_rate_rejected(self):
        w = Waveform(np.zeros(100, dtype=np.float32), 44100)
        with pytest.raises(DataError, match="16000"):
            log_mel(w)

    def test_empty_waveform_rejected(self):
        w = Waveform(np.zeros(0, dtype=np.float32), 16000)
        with pytest.raises(DataError, match="empty"):
            log_mel(w)


class TestNumericalProperties:
    def test_dynamic_range_cap(self, signals):
        for signal in signals.values():
            out = log_mel(Waveform(signal, 16000)).values
            assert out.max() - out.min() <= 2.0 + 1e-6  # 8 log10 units / 4

    def test_gain_monotonicity_pre_normalization(self):
        rng = np.random.default_rng(4)
        x = rng.normal(0, 0.1, 16000).astype(np.float32)
        params = FeatureParams()
        bank = mel_filter_bank(params)

        def mel_energy(signal):
            from capkit.features import _periodic_hann, pad_or_trim

            samples = pad_or_trim(signal.astype(np.float64), params.chunk_samples)
            padded = np.pad(samples, params.window_length // 2, mode="reflect")
            n_frames = 1 + (len(padded) - params.window_length) // params.hop_length
            frames = np.lib.stride_tricks.sliding_window_view(
                padded, params.window_length
            )[:: params.hop_length][:n_frames]
            power = np.abs(np.fft.rfft(frames * _periodic_hann(params.window_length), axis=1)) ** 2
            return bank.T @ power.T

        e1 = mel_energy(x)
        e2 = mel_energy(2.0 * x)
        assert np.all(e2 >= e1 - 1e-12)

    def test_agrees_with_naive_dft(self):
        rng = np.random.default_rng(5)
        x = rng.normal(0, 0.1, 16000).astype(np.float32)
        mine = log_mel(Waveform(x, 16000)).values
        naive = naive_log_mel(x)
        assert np.abs(mine - naive).max() <= 1e-4

    def test_all_finite(self, signals):
        for signal in signals.values():
            out = log_mel(Waveform(signal, 16000)).values
            assert np.all(np.isfinite(out))


class TestParams:
    def test_defaults(self):
        params = FeatureParams()
        assert params.chunk_samples == 480_000
        assert params.n_frames == 3000

    def test_invalid_params(self):
        with pytest.raises(ConfigError):
            FeatureParams(window_length=100, hop_length=200)
        with pytest.raises(ConfigError):
            FeatureParams(n_mels=0)

    def test_result_carries_params(self):
        w = Waveform(np.zeros(100, dtype=np.float32), 16000)
        out = log_mel(w)
        assert isinstance(out, LogMelSpectrogram)
        assert out.params == FeatureParams()
        assert out.values.dtype == np.float32


def test_mel_filter_bank_shape_and_coverage():
    bank = mel_filter_bank(FeatureParams())
    assert bank.shape == (201, 80)
    assert np.all(bank >= 0)
    assert bank.sum(axis=0).min() > 0  # every filter has mass
