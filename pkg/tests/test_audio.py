import numpy as np
import pytest

from capkit.audio import Waveform, read_wav, to_mono, write_wav
from capkit.errors import DataError
from capkit.tensorio import read_tensor, write_tensor


class TestWaveform:
    def test_valid(self):
        w = Waveform(np.zeros(10, dtype=np.float32), 16000)
        assert len(w) == 10
        assert w.duration == pytest.approx(10 / 16000)

    def test_non_finite_rejected(self):
        with pytest.raises(DataError, match="non-finite"):
            Waveform(np.array([0.0, np.nan], dtype=np.float32), 16000)

    def test_bad_rate_rejected(self):
        with pytest.raises(DataError):
            Waveform(np.zeros(4, dtype=np.float32), 0)

    def test_stereo_rejected(self):
        with pytest.raises(DataError, match="mono"):
            Waveform(np.zeros((4, 2), dtype=np.float32), 16000)


def test_to_mono_averages_channels():
    stereo = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]], dtype=np.float32)
    assert to_mono(stereo).tolist() == [0.5, 0.5, 0.5]


class TestWavIO:
    def test_float32_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        w = Waveform(rng.uniform(-1, 1, 999).astype(np.float32), 44100)
        path = tmp_path / "x.wav"
        write_wav(path, w)
        back = read_wav(path)
        assert back.sample_rate == 44100
        assert np.array_equal(back.samples, w.samples)

    def test_int16_round_trip(self, tmp_path):
        w = Waveform(np.array([0.0, 0.5, -0.5], dtype=np.float32), 16000)
        path = tmp_path / "x.wav"
        write_wav(path, w, fmt="int16")
        back = read_wav(path)
        assert back.sample_rate == 16000
        assert np.allclose(back.samples, w.samples, atol=1 / 32767)

    def test_stereo_file_becomes_mono(self, tmp_path):
        from scipy.io import wavfile

        stereo = np.stack(
            [np.ones(100, dtype=np.float32), np.zeros(100, dtype=np.float32)], axis=1
        )
        path = tmp_path / "stereo.wav"
        wavfile.write(path, 16000, stereo)
        w = read_wav(path)
        assert w.samples.shape == (100,)
        assert np.allclose(w.samples, 0.5)

    def test_garbage_file_rejected(self, tmp_path):
        path = tmp_path / "bad.wav"
        path.write_bytes(b"not a wav file")
        with pytest.raises(DataError):
            read_wav(path)


class TestTensorIO:
    def test_round_trip_2d(self, tmp_path):
        arr = np.random.default_rng(1).normal(size=(80, 30)).astype(np.float32)
        path = tmp_path / "t.capk"
        write_tensor(path, arr)
        back = read_tensor(path)
        assert back.dtype == np.float32
        assert np.array_equal(back, arr)

    def test_header_layout(self, tmp_path):
        arr = np.arange(6, dtype=np.float32).reshape(2, 3)
        path = tmp_path / "t.capk"
        write_tensor(path, arr)
        raw = path.read_bytes()
        assert raw[:4] == b"CAPK"
        assert int.from_bytes(raw[4:8], "little") == 1  # version
        assert int.from_bytes(raw[8:12], "little") == 2  # ndim
        assert int.from_bytes(raw[12:20], "little") == 2
        assert int.from_bytes(raw[20:28], "little") == 3
        assert len(raw) == 28 + 6 * 4

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.capk"
        path.write_bytes(b"XXXX" + b"\x00" * 20)
        with pytest.raises(DataError, match="magic"):
            read_tensor(path)

    def test_truncated_payload_rejected(self, tmp_path):
        arr = np.ones((4, 4), dtype=np.float32)
        path = tmp_path / "t.capk"
        write_tensor(path, arr)
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(DataError, match="truncated"):
            read_tensor(path)
