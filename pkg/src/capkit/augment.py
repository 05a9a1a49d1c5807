"""Waveform augmentations applied during finetuning: Gaussian noise,
circular temporal shift, and gain with clipping.

Every operation takes an explicit numpy Generator so callers control
determinism; the pipeline derives one from the config seed. Callers that
parallelize split seeds per item (seed = base ^ item index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from capkit.audio import Waveform
from capkit.errors import ConfigError


@dataclass(frozen=True)
class AugmentConfig:
    p_each: float = 0.3
    noise_std_range: tuple[float, float] = (0.001, 0.015)
    shift_fraction_range: tuple[float, float] = (-0.5, 0.5)
    gain_db_range: tuple[float, float] = (-12.0, 12.0)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_each <= 1.0:
            raise ConfigError(f"p_each must be in [0, 1], got {self.p_each}")
        for label, rng in (
            ("noise_std_range", self.noise_std_range),
            ("shift_fraction_range", self.shift_fraction_range),
            ("gain_db_range", self.gain_db_range),
        ):
            if len(rng) != 2 or rng[0] > rng[1]:
                raise ConfigError(f"{label} must be an ordered [min, max] pair")


def gaussian_noise(wave: Waveform, std: float, rng: np.random.Generator) -> Waveform:
    """Add zero-mean Gaussian noise with the given linear-amplitude std.

    No clipping here; gain (applied last in the pipeline) clips.
    """
    if std < 0:
        raise ConfigError(f"noise std must be >= 0, got {std}")
    if std == 0:
        return wave
    noise = rng.normal(0.0, std, size=wave.samples.shape)
    out = (wave.samples.astype(np.float64) + noise).astype(np.float32)
    return Waveform(out, wave.sample_rate)


def temporal_shift(wave: Waveform, shift: int) -> Waveform:
    """Circularly rotate the sample buffer by `shift` positions.

    A shift of the full length rolls all the way over and is the identity.
    """
    n = len(wave.samples)
    if abs(shift) > n:
        raise ConfigError(f"shift {shift} out of range for length {n}")
    if n == 0 or shift % n == 0:
        return wave
    return Waveform(np.roll(wave.samples, shift), wave.sample_rate)


def gain(wave: Waveform, gain_db: float) -> Waveform:
    """Scale by 10^(gain_db/20) and clip to [-1, 1]."""
    if not np.isfinite(gain_db):
        raise ConfigError(f"gain_db must be finite, got {gain_db}")
    factor = 10.0 ** (gain_db / 20.0)
    out = np.clip(wave.samples.astype(np.float64) * factor, -1.0, 1.0)
    return Waveform(out.astype(np.float32), wave.sample_rate)


def augment_pipeline(
    wave: Waveform, config: AugmentConfig, rng: np.random.Generator | None = None
) -> Waveform:
    """Apply noise, shift and gain, each gated by an independent
    Bernoulli(p_each) draw, with parameters drawn uniformly from the
    configured ranges.

    RNG consumption order is fixed (gate then parameters, in the order
    noise, shift, gain) so a given (wave, config, seed) always produces
    the same output.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    out = wave
    if rng.random() < config.p_each:
        std = rng.uniform(*config.noise_std_range)
        out = gaussian_noise(out, std, rng)
    if rng.random() < config.p_each:
        fraction = rng.uniform(*config.shift_fraction_range)
        out = temporal_shift(out, int(round(fraction * len(out.samples))))
    if rng.random() < config.p_each:
        db = rng.uniform(*config.gain_db_range)
        out = gain(out, db)
    return out
