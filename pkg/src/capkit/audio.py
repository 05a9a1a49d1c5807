"""Mono float waveforms and RIFF/WAVE file IO.

WAVE support covers 16-bit integer and 32-bit float PCM via
scipy.io.wavfile; multi-channel input is averaged down to mono.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile

from capkit.errors import DataError


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray = field(repr=False)
    sample_rate: int = 16000

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float32)
        if samples.ndim != 1:
            raise DataError(f"waveform must be mono 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise DataError("waveform contains non-finite samples")
        if self.sample_rate <= 0:
            raise DataError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


def to_mono(samples: np.ndarray) -> np.ndarray:
    """Average channels down to mono; 1-D input passes through."""
    samples = np.asarray(samples)
    if samples.ndim == 1:
        return samples
    if samples.ndim == 2:
        return samples.mean(axis=1)
    raise DataError(f"unsupported channel layout: shape {samples.shape}")


def read_wav(path) -> Waveform:
    """Read a RIFF/WAVE file (16-bit int or 32-bit float PCM) as mono."""
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise DataError(f"cannot read WAVE file {path}: {exc}") from None
    if data.dtype == np.int16:
        samples = data.astype(np.float32) / 32768.0
    elif data.dtype == np.float32:
        samples = data
    elif data.dtype == np.float64:
        samples = data.astype(np.float32)
    else:
        raise DataError(
            f"{path}: unsupported sample format {data.dtype}; "
            "expected 16-bit int or 32-bit float PCM"
        )
    return Waveform(to_mono(samples).astype(np.float32), int(rate))


def write_wav(path, wave: Waveform, fmt: str = "float32") -> None:
    if fmt == "float32":
        wavfile.write(path, wave.sample_rate, wave.samples.astype(np.float32))
    elif fmt == "int16":
        clipped = np.clip(wave.samples, -1.0, 1.0)
        wavfile.write(path, wave.sample_rate, (clipped * 32767.0).astype(np.int16))
    else:
        raise DataError(f"unsupported WAVE format: {fmt}")
