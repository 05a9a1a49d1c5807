"""Balanced, leakage-free subset selection over multi-label clips.

Selection is greedy: classes are visited scarcest-first (fewest available
candidates per unit of target), each class draws clips until its target
is met or its pool runs out, and a drawn clip counts toward every class
it carries. Clips without any deprioritized label (speech/music) are
drawn before the rest; ties inside a tier are broken by a seeded shuffle.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from capkit.errors import ConfigError, DataError
from capkit.ontology import Ontology

SPLITS = ("train", "valid", "test")


class SplitConflictError(DataError):
    """The same clip is demanded in two different splits."""


@dataclass(frozen=True)
class ClipRecord:
    clip_id: str
    start_s: float
    end_s: float
    split: str
    label_ids: tuple[str, ...]
    available: bool = True

    def __post_init__(self):
        if not 0 <= self.start_s < self.end_s:
            raise DataError(
                f"clip {self.clip_id}: need 0 <= start < end, "
                f"got [{self.start_s}, {self.end_s}]"
            )
        if self.split not in SPLITS:
            raise DataError(f"clip {self.clip_id}: unknown split {self.split!r}")
        if not self.label_ids:
            raise DataError(f"clip {self.clip_id}: label_ids must be non-empty")
        object.__setattr__(self, "label_ids", tuple(self.label_ids))


@dataclass(frozen=True)
class TargetTable:
    targets: dict[str, int]
    music_related: frozenset[str] = frozenset()

    def __post_init__(self):
        if any(t < 0 for t in self.targets.values()):
            raise ConfigError("targets must be >= 0")


@dataclass(frozen=True)
class SubsetSelection:
    chosen: tuple[ClipRecord, ...]
    per_class_counts: dict[str, int]
    shortfalls: dict[str, int]
    seed: int


MUSIC_TARGET = 80
DEFAULT_TARGET_RANGE = (500, 600)


def build_targets(
    ontology: Ontology, music_root_ids, default_target: int
) -> TargetTable:
    """Target 80 for every non-abstract class in the music subtree(s),
    default_target (validated to [500, 600]) for the rest."""
    lo, hi = DEFAULT_TARGET_RANGE
    if not lo <= default_target <= hi:
        raise ConfigError(
            f"default_target must be in [{lo}, {hi}], got {default_target}"
        )
    music_closure = ontology.descendants(music_root_ids, include_roots=True)
    targets: dict[str, int] = {}
    music_related: set[str] = set()
    for nid, node in ontology.nodes.items():
        if node.is_abstract:
            continue
        if nid in music_closure:
            targets[nid] = MUSIC_TARGET
            music_related.add(nid)
        else:
            targets[nid] = default_target
    return TargetTable(targets, frozenset(music_related))


def validate_clips(clips, ontology: Ontology) -> None:
    for clip in clips:
        for label in clip.label_ids:
            if label not in ontology:
                raise DataError(f"clip {clip.clip_id}: unknown label {label}")


def select_subset(
    clips,
    targets: TargetTable,
    audiocaps_index: dict[str, str],
    seed: int,
    deprioritized=frozenset(),
) -> SubsetSelection:
    """Greedy randomized selection under the three subset conditions:
    only available clips, splits forced to match the overlap index, and
    per-class counts driven toward the target table."""
    by_id: dict[str, ClipRecord] = {}
    for clip in clips:
        prev = by_id.get(clip.clip_id)
        if prev is not None:
            if prev.split != clip.split:
                raise SplitConflictError(
                    f"clip {clip.clip_id} appears with splits "
                    f"{prev.split!r} and {clip.split!r}"
                )
            raise DataError(f"duplicate clip_id in input: {clip.clip_id}")
        by_id[clip.clip_id] = clip

    deprioritized = frozenset(deprioritized)
    rng = np.random.default_rng(seed)

    pools: dict[str, list[str]] = {c: [] for c in targets.targets}
    for clip in by_id.values():
        if not clip.available:
            continue
        for label in clip.label_ids:
            if label in pools:
                pools[label].append(clip.clip_id)

    # scarcest first: fewest candidates per unit target; ties by class id
    def scarcity(class_id: str) -> tuple:
        target = targets.targets[class_id]
        if target == 0:
            return (float("inf"), class_id)
        return (len(pools[class_id]) / target, class_id)

    order = sorted((c for c in targets.targets if targets.targets[c] > 0), key=scarcity)

    counts: dict[str, int] = dict.fromkeys(targets.targets, 0)
    chosen: list[ClipRecord] = []
    chosen_ids: set[str] = set()

    def choose(clip: ClipRecord) -> None:
        split = audiocaps_index.get(clip.clip_id, clip.split)
        if split != clip.split:
            clip = dataclasses.replace(clip, split=split)
        chosen.append(clip)
        chosen_ids.add(clip.clip_id)
        for label in clip.label_ids:
            counts[label] = counts.get(label, 0) + 1

    for class_id in order:
        target = targets.targets[class_id]
        if counts[class_id] >= target:
            continue
        remaining = [cid for cid in pools[class_id] if cid not in chosen_ids]
        preferred = [
            cid
            for cid in remaining
            if not deprioritized.intersection(by_id[cid].label_ids)
        ]
        rest = [
            cid for cid in remaining if deprioritized.intersection(by_id[cid].label_ids)
        ]
        rng.shuffle(preferred)
        rng.shuffle(rest)
        for cid in preferred + rest:
            if counts[class_id] >= target:
                break
            choose(by_id[cid])

    shortfalls = {
        c: t - counts[c] for c, t in targets.targets.items() if counts[c] < t
    }
    return SubsetSelection(tuple(chosen), counts, shortfalls, seed)


def leakage_report(selection: SubsetSelection, audiocaps_index: dict[str, str]) -> list[str]:
    """Clip ids whose chosen split disagrees with the overlap index;
    empty iff the no-leakage condition holds."""
    return [
        clip.clip_id
        for clip in selection.chosen
        if clip.clip_id in audiocaps_index
        and audiocaps_index[clip.clip_id] != clip.split
    ]


# ---------------------------------------------------------------------------
# JSONL wire format

def clip_to_json(clip: ClipRecord) -> dict:
    return {
        "clip_id": clip.clip_id,
        "start_s": clip.start_s,
        "end_s": clip.end_s,
        "split": clip.split,
        "label_ids": list(clip.label_ids),
        "available": clip.available,
    }


def clip_from_json(obj: dict) -> ClipRecord:
    try:
        return ClipRecord(
            clip_id=obj["clip_id"],
            start_s=float(obj["start_s"]),
            end_s=float(obj["end_s"]),
            split=obj["split"],
            label_ids=tuple(obj["label_ids"]),
            available=bool(obj.get("available", True)),
        )
    except KeyError as exc:
        raise DataError(f"clip record missing key {exc}") from None


def read_clips_jsonl(path) -> list[ClipRecord]:
    clips = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            clips.append(clip_from_json(obj))
    return clips


def read_split_index(path) -> dict[str, str]:
    """clip_id -> split map from JSONL records carrying both keys."""
    index: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            clip_id, split = obj["clip_id"], obj["split"]
            if split not in SPLITS:
                raise DataError(f"{path}:{lineno}: unknown split {split!r}")
            if index.get(clip_id, split) != split:
                raise SplitConflictError(
                    f"{path}:{lineno}: clip {clip_id} listed in two splits"
                )
            index[clip_id] = split
    return index


def write_selection_jsonl(path, selection: SubsetSelection) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for clip in selection.chosen:
            fh.write(json.dumps(clip_to_json(clip), sort_keys=True) + "\n")


def selection_summary(selection: SubsetSelection) -> dict:
    return {
        "chosen": len(selection.chosen),
        "per_class_counts": dict(sorted(selection.per_class_counts.items())),
        "shortfalls": dict(sorted(selection.shortfalls.items())),
        "seed": selection.seed,
    }
