"""Acceptance suite: one test per criterion, each printing a PASS line
with its measured numbers (run pytest -s to see them). Criterion 10
(binding parity) belongs to the frontend package's own test suite and is
intentionally absent here.
"""

import itertools
import json
import os
import random
import time

import numpy as np
import pytest

from capkit.audio import Waveform
from capkit.captions import CaptionRecord, format_target, parse_output
from capkit.decode import (
    DecodeParams,
    beam_search,
    brute_force_oracle,
    contrastive,
    greedy,
)
from capkit.features import log_mel
from capkit.metrics import EvalItem, bleu, cider_d, evaluate, spider, tokenize
from capkit.mixer import MixtureSpec, expand_clotho, sample_stream
from capkit.ontology import load_bundled_excerpt, load_ontology_file, synth_caption
from capkit.scorer import TableScorer
from capkit.subset import ClipRecord, TargetTable, leakage_report, select_subset
from capkit import augment as augment_mod
from capkit.augment import AugmentConfig, augment_pipeline, gain, temporal_shift
from oracles import cider_d_oracle
from signals import make_signals

FIG1_CAPTION = (
    "emergency vehicle, siren, ambulance (siren), "
    "domestic sounds - home sounds, whistle, kettle whistle"
)


def report(criterion, message):
    print(f"[criterion {criterion}] PASS: {message}")


def test_criterion_1_fig1_reproduction():
    start = time.perf_counter()
    override = os.environ.get("CAPKIT_ONTOLOGY")
    ontology = load_ontology_file(override) if override else load_bundled_excerpt()
    caption = synth_caption(ontology, ["/m/012n7d", "/g/11b630rrvh"])
    elapsed = time.perf_counter() - start
    assert caption == FIG1_CAPTION
    assert elapsed < 1.0
    source = "published file" if override else "bundled excerpt"
    report(1, f"Fig. 1 caption byte-exact from {source} in {elapsed * 1000:.1f} ms")


def test_criterion_2_spider_arithmetic():
    score, _ = spider([0.4331], [0.1257])
    assert score == 0.2794
    score, _ = spider([0.3404], [0.1077])
    assert abs(score - 0.2240) <= 5e-5
    score, _ = spider([0.4142], [0.1234])
    # the published table rounds per-item means; 1.5e-4 slack covers it
    assert abs(score - 0.2687) <= 1.5e-4
    report(2, "all three published SPIDEr rows reproduced within tolerance")


def _random_table_scorer(seed, vocab, table_depth, max_len):
    rng = np.random.default_rng(seed)

    def normed(logits):
        shift = logits.max() + np.log(np.exp(logits - logits.max()).sum())
        return logits - shift

    table = {}
    for depth in range(table_depth + 1):
        for prefix in itertools.product(range(vocab), repeat=depth):
            table[prefix] = normed(rng.normal(size=vocab) * 2.5)
    reprs = {(): rng.normal(size=3)}  # hash fallback covers the rest
    return TableScorer(vocab, table, reprs)


def test_criterion_3_decode_oracle_suite():
    start = time.perf_counter()
    for case in range(50):
        vocab = 2 + case % 4  # 2..5
        max_len = 2 + case % 5  # 2..6
        scorer = _random_table_scorer(
            9000 + case, vocab, table_depth=min(max_len - 1, 3), max_len=max_len
        )
        saturated = DecodeParams(
            end_token=0, max_len=max_len, num_beams=vocab**max_len
        )
        best, _ = beam_search(scorer, saturated)
        oracle = brute_force_oracle(scorer, saturated)
        assert best.tokens == oracle.tokens, (case, best.tokens, oracle.tokens)
        assert best.score == pytest.approx(oracle.score, abs=1e-12)

        width_one = DecodeParams(end_token=0, max_len=max_len, num_beams=1)
        b1, _ = beam_search(scorer, width_one)
        g = greedy(scorer, width_one)
        assert b1.tokens == g.tokens, case

        c_params = DecodeParams(
            end_token=0, max_len=max_len,
            contrastive_alpha=0.0, contrastive_k=vocab,
        )
        assert contrastive(scorer, c_params).tokens == g.tokens, case
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    report(3, f"50 scorers: saturated beam == oracle, width-1 == greedy, "
              f"alpha-0 contrastive == greedy in {elapsed:.1f} s")


def test_criterion_4_dsp_golden_vectors(fixtures_dir):
    start = time.perf_counter()
    signals = make_signals()
    with np.load(fixtures_dir / "logmel_golden.npz") as golden:
        worst = 0.0
        for name in golden.files:
            out = log_mel(Waveform(signals[name], 16000)).values
            err = float(np.abs(out - golden[name]).max())
            worst = max(worst, err)
            assert err <= 1e-4, (name, err)
    silence = log_mel(Waveform(signals["silence_3s"], 16000)).values
    assert np.all(silence == silence.flat[0])
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    report(4, f"5 golden vectors matched (worst {worst:.2e}), silence constant, "
              f"{elapsed:.2f} s")


def test_criterion_5_mixture_statistics():
    n = 100_000
    for ratio, probs in [
        ((3, 1, 0), (0.75, 0.25, 0.0)),
        ((12, 3, 1), (0.75, 0.1875, 0.0625)),
    ]:
        spec = MixtureSpec(ratio=ratio, seed=2023)
        stream = sample_stream((400, 200, 40), spec)
        counts = {"audioset": 0, "audiocaps": 0, "clotho": 0}
        for item in itertools.islice(stream, n):
            counts[item.dataset] += 1
        for name, p in zip(("audioset", "audiocaps", "clotho"), probs):
            observed = counts[name] / n
            if p == 0.0:
                assert observed == 0.0
            else:
                band = 2.576 * (p * (1 - p) / n) ** 0.5
                assert abs(observed - p) <= band, (ratio, name, observed)

    records = [(f"clip{i}", [f"c{j}" for j in range(5)]) for i in range(11)]
    assert len(expand_clotho(records)) == 55

    spec = MixtureSpec(ratio=(12, 3, 1), seed=77)
    serialize = lambda items: "\n".join(  # noqa: E731
        json.dumps((i.dataset, i.index, i.epoch)) for i in items
    ).encode()
    a = serialize(itertools.islice(sample_stream((50, 30, 10), spec), 2000))
    b = serialize(itertools.islice(sample_stream((50, 30, 10), spec), 2000))
    assert a == b
    report(5, "100k-draw frequencies inside 99% CI for 3:1:0 and 12:3:1; "
              "expansion x5; streams byte-reproducible")


def test_criterion_6_subset_properties():
    start = time.perf_counter()
    rng = np.random.default_rng(606)
    speech, music = "/m/09x0r", "/m/04rlf"
    classes = [f"c{i}" for i in range(10)]
    clips = []
    for i in range(5000):
        labels = [classes[int(rng.integers(10))]]
        draw = rng.random()
        if draw < 0.25:
            labels.append(speech)
        elif draw < 0.45:
            labels.append(music)
        clips.append(
            ClipRecord(
                f"clip{i}", 0.0, 10.0, "train", tuple(labels),
                available=bool(rng.random() < 0.9),
            )
        )
    targets = TargetTable({c: 80 if i < 4 else 500 for i, c in enumerate(classes)})
    index = {f"clip{i}": ("valid" if i % 2 else "test") for i in range(0, 5000, 11)}

    selection = select_subset(
        clips, targets, index, seed=13, deprioritized={speech, music}
    )
    again = select_subset(
        clips, targets, index, seed=13, deprioritized={speech, music}
    )
    assert selection == again  # determinism

    assert leakage_report(selection, index) == []  # zero leakage

    chosen_ids = {c.clip_id for c in selection.chosen}
    for c in classes:
        pool = [
            clip for clip in clips if clip.available and c in clip.label_ids
        ]
        assert selection.per_class_counts[c] >= min(
            targets.targets[c], len(pool)
        ), c
        # speech/music-free candidates exhaust before tagged ones are used
        free = {p.clip_id for p in pool if not {speech, music} & set(p.label_ids)}
        tagged_chosen = any(
            clip_id in chosen_ids
            for p in pool
            if (clip_id := p.clip_id) not in free
        )
        if tagged_chosen:
            assert free <= chosen_ids, c
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    report(6, f"5000-clip corpus: leak-free, floors hold, preference tiering "
              f"respected, deterministic, {elapsed:.2f} s")


def test_criterion_7_augmentation_statistics(monkeypatch):
    counts = {"noise": 0, "shift": 0, "gain": 0}
    real = (augment_mod.gaussian_noise, augment_mod.temporal_shift, augment_mod.gain)

    def wrap_noise(w, std, rng):
        counts["noise"] += 1
        return real[0](w, std, rng)

    def wrap_shift(w, shift):
        counts["shift"] += 1
        return real[1](w, shift)

    def wrap_gain(w, db):
        counts["gain"] += 1
        return real[2](w, db)

    monkeypatch.setattr(augment_mod, "gaussian_noise", wrap_noise)
    monkeypatch.setattr(augment_mod, "temporal_shift", wrap_shift)
    monkeypatch.setattr(augment_mod, "gain", wrap_gain)

    wave = Waveform(np.zeros(32, dtype=np.float32), 16000)
    config = AugmentConfig(p_each=0.3)
    runs = 10_000
    for i in range(runs):
        augment_pipeline(wave, config, np.random.default_rng(40_000 + i))
    rates = {k: v / runs for k, v in counts.items()}
    for name, rate in rates.items():
        assert 0.28 <= rate <= 0.32, (name, rate)

    rng = np.random.default_rng(3)
    loud = Waveform(rng.uniform(-1, 1, 1000).astype(np.float32), 16000)
    for db in (-20.0, 0.0, 6.0, 20.0):
        out = gain(loud, db)
        assert out.samples.min() >= -1.0 and out.samples.max() <= 1.0

    shifted = temporal_shift(loud, 123)
    assert np.array_equal(np.sort(shifted.samples), np.sort(loud.samples))
    report(7, f"application rates {rates} within [0.28, 0.32]; gain clipped; "
              "shift preserves multiset")


def test_criterion_8_caption_round_trip():
    fig2 = [
        (
            CaptionRecord(
                "clotho", "caption",
                "The birds are chirping outdoors throughout the background "
                "feedback of persistent wind.",
            ),
            "<|startoftranscript|><|en|><|transcribe|><|notimestamps|>"
            "clotho > caption: The birds are chirping outdoors throughout the "
            "background feedback of persistent wind.<|endoftext|>",
        ),
        (
            CaptionRecord("audioset", "keywords", "music, music mood, scary music"),
            "<|startoftranscript|><|en|><|transcribe|><|notimestamps|>"
            "audioset > keywords: music, music mood, scary music<|endoftext|>",
        ),
        (
            CaptionRecord("audiocaps", "caption", "An engine accelerating ghastly and then idling"),
            "<|startoftranscript|><|en|><|transcribe|><|notimestamps|>"
            "audiocaps > caption: An engine accelerating ghastly and then idling<|endoftext|>",
        ),
    ]
    for record, expected in fig2:
        formatted = format_target(record)
        assert formatted == expected
        assert parse_output(formatted) == record

    rng = random.Random(808)
    vocabulary = (
        "a an the wind rain water birds dog cat engine hums rattles splashes "
        "person crowd distant muffled loud soft door metal wood footsteps"
    ).split()
    combos = [("clotho", "caption"), ("audiocaps", "caption"), ("audioset", "keywords")]
    for _ in range(1000):
        dataset, task = rng.choice(combos)
        text = " ".join(rng.choices(vocabulary, k=rng.randint(0, 14)))
        record = CaptionRecord(dataset, task, text)
        assert parse_output(format_target(record)) == record
    report(8, "1000 randomized round trips + 3 published example strings byte-exact")


def test_criterion_9_metric_fixtures():
    identity = [
        EvalItem("1", "a dog barks in the yard", ("a dog barks in the yard",)),
        EvalItem("2", "rain falls on the tin roof", ("rain falls on the tin roof",
                                                     "heavy rain everywhere")),
    ]
    assert bleu(identity) == pytest.approx(100.0)

    corpus = [
        EvalItem("i1", "a dog barks in the yard",
                 ("a dog barks in the yard loudly", "a dog is barking outside")),
        EvalItem("i2", "rain falls on a tin roof",
                 ("rain falls on a tin roof", "heavy rain hits a metal roof")),
        EvalItem("i3", "an engine idles then revs",
                 ("an engine idles and then revs up", "a motor is idling and revving")),
    ]
    corpus_score, per_item = cider_d(corpus)
    tokenized = [
        (
            tokenize(it.candidate, lowercase=True),
            [tokenize(r, lowercase=True) for r in it.references],
        )
        for it in corpus
    ]
    oracle_corpus, oracle_items = cider_d_oracle(tokenized)
    assert corpus_score == pytest.approx(oracle_corpus, abs=1e-6)
    for mine, theirs in zip(per_item, oracle_items):
        assert mine == pytest.approx(theirs, abs=1e-6)

    base = evaluate(corpus)
    permuted = evaluate([corpus[2], corpus[0], corpus[1]])
    assert base.bleu == pytest.approx(permuted.bleu, abs=1e-12)
    assert base.meteor_lite == pytest.approx(permuted.meteor_lite, abs=1e-12)
    assert base.cider_d == pytest.approx(permuted.cider_d, abs=1e-12)
    report(9, "BLEU identity = 100.0; CIDEr-D matches brute-force oracle to 1e-6; "
              "order invariant")
