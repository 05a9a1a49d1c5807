"""Corpus-level caption metrics: sacre-style BLEU, CIDEr-D, METEOR-lite,
SPICE ingestion, and the SPIDEr combination.

Tokenization is mteval-13a style for everything; CIDEr-D and METEOR-lite
lowercase, BLEU does not. METEOR-lite is a deliberate approximation:
exact- then stem-match alignment only, no synonym lexicon, so its absolute
values are not comparable with full METEOR. BLEU uses add-epsilon (1e-9)
smoothing on zero n-gram matches.
"""

from __future__ import annotations

import csv
import json
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass

from capkit.errors import DataError
from capkit.stemmer import stem

MAX_NGRAM = 4
CIDER_SIGMA = 6.0
BLEU_EPSILON = 1e-9


@dataclass(frozen=True)
class EvalItem:
    item_id: str
    candidate: str
    references: tuple[str, ...]

    def __post_init__(self):
        if not self.references:
            raise DataError(f"item {self.item_id}: needs at least one reference")
        object.__setattr__(self, "references", tuple(self.references))


@dataclass(frozen=True)
class ScoreReport:
    bleu: float
    meteor_lite: float
    cider_d: float
    cider_per_item: tuple[float, ...]
    spice: float | None = None
    spider: float | None = None
    spider_per_item: tuple[float, ...] | None = None
    item_ids: tuple[str, ...] = ()

    def corpus_scores(self) -> dict:
        scores = {
            "bleu": self.bleu,
            "meteor_lite": self.meteor_lite,
            "cider_d": self.cider_d,
        }
        if self.spice is not None:
            scores["spice"] = self.spice
            scores["spider"] = self.spider
        return scores


# ---------------------------------------------------------------------------
# tokenization (mteval-13a convention)

_13A_PUNCT = re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])")
_13A_PERIOD_BEFORE = re.compile(r"([^0-9])([\.,])")
_13A_PERIOD_AFTER = re.compile(r"([\.,])([^0-9])")
_13A_DASH = re.compile(r"([0-9])(-)")
_WS = re.compile(r"\s+")


def tokenize(text: str, lowercase: bool = False) -> list[str]:
    """13a-style tokenization: split punctuation from words, then split on
    whitespace. Lowercasing is the caller's choice (CIDEr/METEOR on,
    BLEU off)."""
    norm = text
    norm = norm.replace("<skipped>", "")
    norm = norm.replace("-\n", "")
    norm = norm.replace("\n", " ")
    norm = norm.replace("&quot;", '"')
    norm = norm.replace("&amp;", "&")
    norm = norm.replace("&lt;", "<")
    norm = norm.replace("&gt;", ">")

    norm = f" {norm} "
    norm = _13A_PUNCT.sub(r" \1 ", norm)
    norm = _13A_PERIOD_BEFORE.sub(r"\1 \2 ", norm)
    norm = _13A_PERIOD_AFTER.sub(r" \1 \2", norm)
    norm = _13A_DASH.sub(r"\1 \2 ", norm)
    norm = _WS.sub(" ", norm).strip()
    if lowercase:
        norm = norm.lower()
    return norm.split(" ") if norm else []


def _ngram_counts(tokens, max_n: int = MAX_NGRAM) -> Counter:
    counts: Counter = Counter()
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i : i + n])] += 1
    return counts


# ---------------------------------------------------------------------------
# BLEU

def bleu(items) -> float:
    """Corpus BLEU, orders 1..4, geometric mean, exponential brevity
    penalty, closest-reference-length rule (ties -> shorter)."""
    items = list(items)
    if not items:
        raise DataError("BLEU needs a non-empty corpus")
    correct = [0] * MAX_NGRAM
    total = [0] * MAX_NGRAM
    sys_len = 0
    ref_len = 0
    for item in items:
        cand = tokenize(item.candidate)
        refs = [tokenize(ref) for ref in item.references]
        sys_len += len(cand)
        ref_len += min(
            (len(ref) for ref in refs),
            key=lambda L: (abs(L - len(cand)), L),
        )
        cand_counts = _ngram_counts(cand)
        max_ref_counts: Counter = Counter()
        for ref in refs:
            for gram, count in _ngram_counts(ref).items():
                max_ref_counts[gram] = max(max_ref_counts[gram], count)
        for gram, count in cand_counts.items():
            n = len(gram) - 1
            total[n] += count
            correct[n] += min(count, max_ref_counts.get(gram, 0))

    log_precision = 0.0
    for n in range(MAX_NGRAM):
        if total[n] == 0 or correct[n] == 0:
            precision = BLEU_EPSILON
        else:
            precision = correct[n] / total[n]
        log_precision += math.log(precision)

    if sys_len == 0:
        return 0.0
    brevity = 1.0 if sys_len >= ref_len else math.exp(1 - ref_len / sys_len)
    return 100.0 * brevity * math.exp(log_precision / MAX_NGRAM)


# ---------------------------------------------------------------------------
# CIDEr-D

def cider_d(items) -> tuple[float, list[float]]:
    """Standard CIDEr-D: tf-idf n-gram cosine (n = 1..4) with candidate
    counts clipped to reference maxima and a gaussian length penalty,
    averaged over orders and references, scaled by 10."""
    items = list(items)
    if len(items) < 2:
        raise DataError("CIDEr-D needs at least 2 items (idf is degenerate)")

    cand_tokens = [tokenize(it.candidate, lowercase=True) for it in items]
    ref_tokens = [
        [tokenize(ref, lowercase=True) for ref in it.references] for it in items
    ]

    doc_freq: Counter = Counter()
    for refs in ref_tokens:
        grams = set()
        for ref in refs:
            grams.update(_ngram_counts(ref).keys())
        doc_freq.update(grams)
    log_corpus = math.log(len(items))

    def tfidf(tokens):
        counts = _ngram_counts(tokens)
        vec = [defaultdict(float) for _ in range(MAX_NGRAM)]
        norm = [0.0] * MAX_NGRAM
        for gram, count in counts.items():
            idf = log_corpus - math.log(max(1.0, doc_freq[gram]))
            n = len(gram) - 1
            vec[n][gram] = count * idf
            norm[n] += vec[n][gram] ** 2
        return vec, [math.sqrt(x) for x in norm], len(tokens)

    per_item: list[float] = []
    for cand, refs in zip(cand_tokens, ref_tokens):
        cand_vec, cand_norm, cand_len = tfidf(cand)
        acc = [0.0] * MAX_NGRAM
        for ref in refs:
            ref_vec, ref_norm, ref_len = tfidf(ref)
            penalty = math.exp(-((cand_len - ref_len) ** 2) / (2 * CIDER_SIGMA**2))
            for n in range(MAX_NGRAM):
                dot = sum(
                    min(value, ref_vec[n][gram]) * ref_vec[n][gram]
                    for gram, value in cand_vec[n].items()
                    if gram in ref_vec[n]
                )
                if cand_norm[n] and ref_norm[n]:
                    acc[n] += penalty * dot / (cand_norm[n] * ref_norm[n])
        score = 10.0 * sum(acc) / (MAX_NGRAM * len(refs))
        per_item.append(score)
    return sum(per_item) / len(per_item), per_item


# ---------------------------------------------------------------------------
# METEOR-lite

def _align(cand: list[str], ref: list[str]) -> list[tuple[int, int]]:
    """Greedy left-to-right unigram alignment: exact matches first, then
    stem matches, each candidate token taking the earliest unmatched
    reference token."""
    matched_ref: set[int] = set()
    pairs: list[tuple[int, int]] = []
    unmatched_cand = []
    for ci, tok in enumerate(cand):
        for ri, rtok in enumerate(ref):
            if ri not in matched_ref and rtok == tok:
                matched_ref.add(ri)
                pairs.append((ci, ri))
                break
        else:
            unmatched_cand.append(ci)
    cand_stems = {ci: stem(cand[ci]) for ci in unmatched_cand}
    ref_stems = [stem(tok) for tok in ref]
    for ci in unmatched_cand:
        for ri, rstem in enumerate(ref_stems):
            if ri not in matched_ref and rstem == cand_stems[ci]:
                matched_ref.add(ri)
                pairs.append((ci, ri))
                break
    pairs.sort()
    return pairs


def _chunks(pairs: list[tuple[int, int]]) -> int:
    chunks = 0
    prev = None
    for ci, ri in pairs:
        if prev is None or (ci, ri) != (prev[0] + 1, prev[1] + 1):
            chunks += 1
        prev = (ci, ri)
    return chunks


def _meteor_pair(cand: list[str], ref: list[str]) -> float:
    pairs = _align(cand, ref)
    matches = len(pairs)
    if matches == 0 or not cand or not ref:
        return 0.0
    precision = matches / len(cand)
    recall = matches / len(ref)
    fmean = 10.0 * precision * recall / (recall + 9.0 * precision)
    penalty = 0.5 * (_chunks(pairs) / matches) ** 3
    return fmean * (1.0 - penalty)


def meteor_lite(items) -> float:
    """Approximate METEOR: exact + stem alignment stages, best reference
    per item, corpus mean."""
    items = list(items)
    if not items:
        raise DataError("METEOR needs a non-empty corpus")
    scores = []
    for item in items:
        cand = tokenize(item.candidate, lowercase=True)
        best = max(
            _meteor_pair(cand, tokenize(ref, lowercase=True))
            for ref in item.references
        )
        scores.append(best)
    return sum(scores) / len(scores)


# ---------------------------------------------------------------------------
# SPICE ingestion and SPIDEr

def ingest_spice(path, expected_ids) -> list[float]:
    """Read {id, spice} JSONL and return scores aligned to expected_ids."""
    expected = list(expected_ids)
    seen: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                item_id, value = obj["id"], float(obj["spice"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: bad SPICE record: {exc}") from None
            if item_id in seen:
                raise DataError(f"{path}:{lineno}: duplicate id {item_id!r}")
            if not 0.0 <= value <= 1.0:
                raise DataError(
                    f"{path}:{lineno}: spice score {value} outside [0, 1]"
                )
            seen[item_id] = value
    missing = [i for i in expected if i not in seen]
    if missing:
        raise DataError(f"SPICE file missing ids: {missing[:5]}")
    return [seen[i] for i in expected]


def spider(cider_per_item, spice_per_item) -> tuple[float, list[float]]:
    """Per-item arithmetic mean of CIDEr and SPICE; corpus = mean."""
    cider_per_item = list(cider_per_item)
    spice_per_item = list(spice_per_item)
    if len(cider_per_item) != len(spice_per_item):
        raise DataError(
            f"length mismatch: {len(cider_per_item)} cider vs "
            f"{len(spice_per_item)} spice scores"
        )
    if not cider_per_item:
        raise DataError("SPIDEr needs a non-empty corpus")
    per_item = [(c + s) / 2.0 for c, s in zip(cider_per_item, spice_per_item)]
    return sum(per_item) / len(per_item), per_item


# ---------------------------------------------------------------------------
# orchestration

def evaluate(items, spice_path=None) -> ScoreReport:
    items = list(items)
    ids = tuple(it.item_id for it in items)
    if len(set(ids)) != len(ids):
        raise DataError("duplicate item ids in corpus")
    corpus_cider, per_item_cider = cider_d(items)
    extra: dict = {}
    if spice_path is not None:
        spice_scores = ingest_spice(spice_path, ids)
        corpus_spider, per_item_spider = spider(per_item_cider, spice_scores)
        extra = {
            "spice": sum(spice_scores) / len(spice_scores),
            "spider": corpus_spider,
            "spider_per_item": tuple(per_item_spider),
        }
    return ScoreReport(
        bleu=bleu(items),
        meteor_lite=meteor_lite(items),
        cider_d=corpus_cider,
        cider_per_item=tuple(per_item_cider),
        item_ids=ids,
        **extra,
    )


def read_candidates_jsonl(path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if obj["id"] in out:
                raise DataError(f"{path}:{lineno}: duplicate id {obj['id']!r}")
            out[obj["id"]] = obj["text"]
    return out


def read_references_jsonl(path) -> dict[str, tuple[str, ...]]:
    out: dict[str, tuple[str, ...]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if obj["id"] in out:
                raise DataError(f"{path}:{lineno}: duplicate id {obj['id']!r}")
            out[obj["id"]] = tuple(obj["texts"])
    return out


def build_corpus(candidates: dict[str, str], references: dict) -> list[EvalItem]:
    missing = sorted(set(candidates) ^ set(references))
    if missing:
        raise DataError(f"candidate/reference id mismatch: {missing[:5]}")
    return [
        EvalItem(item_id, candidates[item_id], tuple(references[item_id]))
        for item_id in candidates
    ]


def write_report_json(path, report: ScoreReport) -> None:
    doc = {
        "corpus": report.corpus_scores(),
        "per_item": [
            {
                "id": item_id,
                "cider_d": report.cider_per_item[i],
                **(
                    {"spider": report.spider_per_item[i]}
                    if report.spider_per_item is not None
                    else {}
                ),
            }
            for i, item_id in enumerate(report.item_ids)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report_csv(path, report: ScoreReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = ["id", "cider_d"]
        if report.spider_per_item is not None:
            header.append("spider")
        writer.writerow(header)
        for i, item_id in enumerate(report.item_ids):
            row = [item_id, f"{report.cider_per_item[i]:.6f}"]
            if report.spider_per_item is not None:
                row.append(f"{report.spider_per_item[i]:.6f}")
            writer.writerow(row)
