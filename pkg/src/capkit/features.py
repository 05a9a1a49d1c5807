"""Log-mel spectrogram extraction matching the Whisper feature convention.

Pipeline: pad/trim to a fixed 30 s chunk, centered STFT (periodic Hann,
reflect padding), power spectrum, slaney-scale/slaney-norm mel projection,
log10 with a 1e-10 floor, clamp to (global max - 8), then (x + 4) / 4.
The golden-vector tests pin this against reference dumps at 1e-4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from capkit.audio import Waveform
from capkit.errors import ConfigError, DataError

LOG_FLOOR = 1e-10
DYNAMIC_RANGE_DB10 = 8.0  # clamp width in log10 units


@dataclass(frozen=True)
class FeatureParams:
    sample_rate: int = 16000
    window_length: int = 400
    hop_length: int = 160
    n_mels: int = 80
    chunk_seconds: int = 30

    def __post_init__(self):
        if not self.window_length > self.hop_length > 0:
            raise ConfigError("need window_length > hop_length > 0")
        if self.n_mels <= 0:
            raise ConfigError("n_mels must be positive")
        if self.sample_rate <= 0 or self.chunk_seconds <= 0:
            raise ConfigError("sample_rate and chunk_seconds must be positive")

    @property
    def chunk_samples(self) -> int:
        return self.sample_rate * self.chunk_seconds

    @property
    def n_frames(self) -> int:
        # centered STFT yields chunk/hop + 1 frames; the last is dropped
        return self.chunk_samples // self.hop_length


@dataclass(frozen=True)
class LogMelSpectrogram:
    values: np.ndarray = field(repr=False)  # (n_mels, n_frames) float32
    params: FeatureParams = FeatureParams()


def hertz_to_mel(freq):
    """Slaney mel scale: linear below 1 kHz, logarithmic above."""
    freq = np.asarray(freq, dtype=np.float64)
    min_log_hertz = 1000.0
    min_log_mel = 15.0
    logstep = 27.0 / np.log(6.4)
    mels = 3.0 * freq / 200.0
    return np.where(
        freq >= min_log_hertz,
        min_log_mel + np.log(np.maximum(freq, min_log_hertz) / min_log_hertz) * logstep,
        mels,
    )


def mel_to_hertz(mels):
    mels = np.asarray(mels, dtype=np.float64)
    min_log_mel = 15.0
    logstep = np.log(6.4) / 27.0
    freq = 200.0 * mels / 3.0
    return np.where(
        mels >= min_log_mel,
        1000.0 * np.exp(logstep * (mels - min_log_mel)),
        freq,
    )


def mel_filter_bank(params: FeatureParams) -> np.ndarray:
    """Triangular slaney-normalized filters, shape (n_freq_bins, n_mels)."""
    n_freqs = params.window_length // 2 + 1
    mel_min = hertz_to_mel(0.0)
    mel_max = hertz_to_mel(params.sample_rate / 2.0)
    mel_freqs = np.linspace(mel_min, mel_max, params.n_mels + 2)
    filter_freqs = mel_to_hertz(mel_freqs)
    fft_freqs = np.linspace(0, params.sample_rate // 2, n_freqs)

    filter_diff = np.diff(filter_freqs)
    slopes = filter_freqs[None, :] - fft_freqs[:, None]
    down_slopes = -slopes[:, :-2] / filter_diff[:-1]
    up_slopes = slopes[:, 2:] / filter_diff[1:]
    bank = np.maximum(0.0, np.minimum(down_slopes, up_slopes))

    enorm = 2.0 / (filter_freqs[2:] - filter_freqs[:-2])
    return bank * enorm[None, :]


def _periodic_hann(length: int) -> np.ndarray:
    return np.hanning(length + 1)[:-1]


def pad_or_trim(samples: np.ndarray, chunk_samples: int) -> np.ndarray:
    if len(samples) >= chunk_samples:
        return samples[:chunk_samples]
    return np.pad(samples, (0, chunk_samples - len(samples)))


def log_mel(wave: Waveform, params: FeatureParams = FeatureParams()) -> LogMelSpectrogram:
    """Whisper-convention log-mel features; output shape is fixed by the
    chunk length regardless of input duration."""
    if wave.sample_rate != params.sample_rate:
        raise DataError(
            f"expected {params.sample_rate} Hz input, got {wave.sample_rate} Hz; "
            "resample first"
        )
    if len(wave.samples) == 0:
        raise DataError("empty waveform")

    samples = pad_or_trim(wave.samples.astype(np.float64), params.chunk_samples)
    half = params.window_length // 2
    padded = np.pad(samples, half, mode="reflect")

    n_frames = 1 + (len(padded) - params.window_length) // params.hop_length
    frames = np.lib.stride_tricks.sliding_window_view(padded, params.window_length)[
        :: params.hop_length
    ][:n_frames]
    window = _periodic_hann(params.window_length)
    spectrum = np.fft.rfft(frames * window, n=params.window_length, axis=1)
    # complex64 matches the reference extractor's working precision
    power = np.abs(spectrum.astype(np.complex64), dtype=np.float64) ** 2

    mel = mel_filter_bank(params).T @ power.T
    log_spec = np.log10(np.maximum(mel, LOG_FLOOR))
    log_spec = log_spec[:, :-1]  # drop the final, rightmost frame
    log_spec = np.maximum(log_spec, log_spec.max() - DYNAMIC_RANGE_DB10)
    log_spec = (log_spec + 4.0) / 4.0
    return LogMelSpectrogram(log_spec.astype(np.float32), params)
