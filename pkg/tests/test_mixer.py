import itertools
from collections import Counter

import pytest

from capkit.errors import ConfigError
from capkit.mixer import (
    MixtureSpec,
    StreamItem,
    epoch_alignment,
    expand_clotho,
    sample_stream,
)

PAPER_RATIOS = [(1, 1, 0), (3, 1, 0), (12, 3, 1), (0, 0, 1), (1, 1, 2), (3, 1, 1)]


def take(stream, n):
    return list(itertools.islice(stream, n))


class TestExpandClotho:
    def test_five_captions_each(self):
        records = [(f"clip{i}", [f"c{i}{j}" for j in range(5)]) for i in range(7)]
        items = expand_clotho(records)
        assert len(items) == 35
        assert items[0] == ("clip0", "c00")

    def test_empty_input(self):
        assert expand_clotho([]) == []

    def test_wrong_count_warns_and_expands(self):
        records = [("clipX", ["a", "b", "c", "d"])]
        with pytest.warns(UserWarning, match="clipX"):
            items = expand_clotho(records)
        assert len(items) == 4


class TestSampleStream:
    def test_clotho_only_ratio(self):
        spec = MixtureSpec(ratio=(0, 0, 1), seed=3)
        items = take(sample_stream((10, 10, 4), spec), 200)
        assert all(item.dataset == "clotho" for item in items)

    def test_ratio_3_1_0_frequencies(self):
        spec = MixtureSpec(ratio=(3, 1, 0), seed=11)
        items = take(sample_stream((50, 50, 0), spec), 100_000)
        freq = Counter(item.dataset for item in items)
        assert 0.73 <= freq["audioset"] / 100_000 <= 0.77
        assert freq["clotho"] == 0

    def test_expected_probabilities_12_3_1(self):
        spec = MixtureSpec(ratio=(12, 3, 1))
        assert spec.probabilities == (0.75, 0.1875, 0.0625)

    def test_deterministic(self):
        spec = MixtureSpec(ratio=(12, 3, 1), seed=5)
        a = take(sample_stream((30, 20, 4), spec), 500)
        b = take(sample_stream((30, 20, 4), spec), 500)
        assert a == b

    def test_without_replacement_within_epoch(self):
        spec = MixtureSpec(ratio=(1, 1, 1), seed=9, clotho_expansion=1)
        items = take(sample_stream((13, 7, 5), spec), 2000)
        per_dataset_epoch = {}
        for item in items:
            per_dataset_epoch.setdefault((item.dataset, item.epoch), []).append(item.index)
        for (dataset, _), indices in per_dataset_epoch.items():
            assert len(indices) == len(set(indices)), dataset

    def test_epoch_increments_on_exhaustion(self):
        spec = MixtureSpec(ratio=(1, 0, 0), seed=0)
        items = take(sample_stream((5, 1, 1), spec), 12)
        epochs = [item.epoch for item in items]
        assert epochs == [0] * 5 + [1] * 5 + [2] * 2

    def test_clotho_expansion_in_index_range(self):
        spec = MixtureSpec(ratio=(0, 0, 1), seed=1, clotho_expansion=5)
        items = take(sample_stream((0, 0, 3), spec), 60)
        indices = {item.index for item in items}
        assert indices == set(range(15))

    def test_zero_sized_dataset_with_nonzero_ratio(self):
        spec = MixtureSpec(ratio=(1, 1, 0), seed=0)
        with pytest.raises(ConfigError, match="no items"):
            next(sample_stream((5, 0, 0), spec))

    def test_all_paper_ratios_constructible(self):
        for ratio in PAPER_RATIOS:
            spec = MixtureSpec(ratio=ratio, seed=1)
            items = take(sample_stream((20, 20, 20), spec), 50)
            assert len(items) == 50
            present = {item.dataset for item in items}
            for name, r in zip(("audioset", "audiocaps", "clotho"), ratio):
                if r == 0:
                    assert name not in present

    def test_invalid_spec(self):
        with pytest.raises(ConfigError):
            MixtureSpec(ratio=(0, 0, 0))
        with pytest.raises(ConfigError):
            MixtureSpec(ratio=(1, 1), seed=0)
        with pytest.raises(ConfigError):
            MixtureSpec(ratio=(1, 1, 1), clotho_expansion=0)


class TestEpochAlignment:
    def test_paper_sizes_nearly_aligned(self):
        steps = epoch_alignment((130_000, 46_000, 0), (3, 1, 0))
        assert steps[0] == pytest.approx(173_333, abs=1)
        assert steps[1] == pytest.approx(184_000)
        assert steps[2] is None

    def test_equal_sizes_equal_steps(self):
        steps = epoch_alignment((100, 100, 0), (1, 1, 0))
        assert steps[0] == steps[1] == 200

    def test_proportional_sizes_align_exactly(self):
        steps = epoch_alignment((1200, 300, 100), (12, 3, 1))
        assert steps[0] == steps[1] == steps[2] == 1600

    def test_all_zero_ratio_rejected(self):
        with pytest.raises(ConfigError):
            epoch_alignment((1, 1, 1), (0, 0, 0))


def test_stream_item_fields():
    item = StreamItem("audioset", 3, 1)
    assert item.dataset == "audioset"
    assert item.index == 3
    assert item.epoch == 1
