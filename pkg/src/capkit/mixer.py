"""Deterministic weighted interleaving of the three training datasets.

Stream randomness comes from numpy's Philox generator (counter-based, so
streams are reproducible across platforms): key [seed, 0] drives the
dataset choice, keys [seed, 1 + d] drive each dataset's shuffles. Within a
dataset items are drawn without replacement from a seeded permutation and
the epoch counter bumps when the permutation is exhausted and redrawn.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from capkit.errors import ConfigError

DATASET_ORDER = ("audioset", "audiocaps", "clotho")
CLOTHO_CAPTIONS_PER_CLIP = 5


@dataclass(frozen=True)
class MixtureSpec:
    ratio: tuple[int, int, int]  # audioset : audiocaps : clotho
    seed: int = 0
    clotho_expansion: int = CLOTHO_CAPTIONS_PER_CLIP

    def __post_init__(self):
        if len(self.ratio) != 3 or any(r < 0 for r in self.ratio):
            raise ConfigError(f"ratio must be three non-negative integers: {self.ratio}")
        if not any(self.ratio):
            raise ConfigError("ratio must not be all zero")
        if self.clotho_expansion < 1:
            raise ConfigError(f"clotho_expansion must be >= 1: {self.clotho_expansion}")
        object.__setattr__(self, "ratio", tuple(int(r) for r in self.ratio))

    @property
    def probabilities(self) -> tuple[float, float, float]:
        total = sum(self.ratio)
        return tuple(r / total for r in self.ratio)


@dataclass(frozen=True)
class StreamItem:
    dataset: str
    index: int
    epoch: int


def expand_clotho(records) -> list[tuple]:
    """Flatten (clip, captions) records into one item per caption.

    Clotho clips carry five captions; a clip with a different count is
    expanded to its actual count and reported via a warning.
    """
    items: list[tuple] = []
    for clip_id, captions in records:
        if len(captions) != CLOTHO_CAPTIONS_PER_CLIP:
            warnings.warn(
                f"clip {clip_id!r} has {len(captions)} captions, "
                f"expected {CLOTHO_CAPTIONS_PER_CLIP}",
                stacklevel=2,
            )
        items.extend((clip_id, caption) for caption in captions)
    return items


def _effective_sizes(sizes, spec: MixtureSpec) -> tuple[int, int, int]:
    if len(sizes) != 3:
        raise ConfigError(f"sizes must be a triple, got {sizes!r}")
    eff = [int(sizes[0]), int(sizes[1]), int(sizes[2]) * spec.clotho_expansion]
    for name, ratio, size in zip(DATASET_ORDER, spec.ratio, eff):
        if ratio > 0 and size <= 0:
            raise ConfigError(f"dataset {name} has nonzero ratio but no items")
    return tuple(eff)


def sample_stream(sizes, spec: MixtureSpec) -> Iterator[StreamItem]:
    """Infinite deterministic stream of StreamItem.

    `sizes` are raw item counts (audioset, audiocaps, clotho clips); the
    clotho count is multiplied by spec.clotho_expansion, and emitted clotho
    indices range over the expanded flat list (clip i, caption j maps to
    index i * expansion + j).
    """
    eff = _effective_sizes(sizes, spec)
    probs = np.array(spec.probabilities)
    cumprobs = np.cumsum(probs)
    choice_rng = np.random.Generator(np.random.Philox(key=[spec.seed, 0]))
    shuffle_rngs = [
        np.random.Generator(np.random.Philox(key=[spec.seed, 1 + d])) for d in range(3)
    ]

    perms = [None, None, None]
    cursors = [0, 0, 0]
    epochs = [-1, -1, -1]

    def _next_index(d: int) -> tuple[int, int]:
        if perms[d] is None or cursors[d] >= eff[d]:
            perms[d] = shuffle_rngs[d].permutation(eff[d])
            cursors[d] = 0
            epochs[d] += 1
        idx = int(perms[d][cursors[d]])
        cursors[d] += 1
        return idx, epochs[d]

    while True:
        u = choice_rng.random()
        d = int(np.searchsorted(cumprobs, u, side="right"))
        d = min(d, 2)
        index, epoch = _next_index(d)
        yield StreamItem(DATASET_ORDER[d], index, epoch)


def epoch_alignment(sizes, ratio) -> tuple[float | None, float | None, float | None]:
    """Expected number of mixed-stream draws per full pass over each
    dataset: steps_d = size_d * sum(ratio) / ratio_d (None for ratio 0)."""
    if len(sizes) != 3 or len(ratio) != 3:
        raise ConfigError("sizes and ratio must be triples")
    total = sum(ratio)
    if total == 0:
        raise ConfigError("ratio must not be all zero")
    steps = []
    for size, r in zip(sizes, ratio):
        if r == 0:
            steps.append(None)
        else:
            steps.append(size * total / r)
    return tuple(steps)
