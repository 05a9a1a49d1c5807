"""Single executable exposing every pipeline stage as a subcommand.

All commands read the shared JSON config (path from --config or
$CAPKIT_CONFIG) with --set section.key=value overrides, write their
primary outputs under paths.output_root, and print one machine-readable
run manifest (JSON) to stdout. Exit codes: 0 success, 2 config error,
3 data error, 4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

import capkit
from capkit import augment as augment_mod
from capkit import captions, metrics, mixer, subset
from capkit.audio import read_wav, write_wav
from capkit.config import apply_overrides, load_config
from capkit.decode import DecodeParams, decode
from capkit.errors import ConfigError, DataError, InvariantError
from capkit.features import FeatureParams, log_mel
from capkit.ontology import load_bundled_excerpt, load_ontology_file, synth_caption
from capkit.resample import resample
from capkit.scorer import RemoteScorer, load_table
from capkit.tensorio import write_tensor


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _manifest(command: str, inputs, outputs, seed=None) -> None:
    doc = {
        "command": command,
        "version": capkit.__version__,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "seed": seed,
        "timestamp": time.time(),
    }
    print(json.dumps(doc, sort_keys=True))


def _load_ontology(config):
    path = config.get("paths.ontology")
    if path is None:
        return load_bundled_excerpt(), []
    return load_ontology_file(path), [path]


def _out_dir(config) -> Path:
    out = Path(config.get("paths.output_root"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(config, key: str):
    value = config.get(key)
    if value in (None, "", []):
        raise ConfigError(f"config key {key!r} is required for this command")
    return value


def _input_paths(config, key: str) -> list[Path]:
    root = Path(config.get("paths.audio_root"))
    paths = [Path(p) if Path(p).is_absolute() else root / p for p in _require(config, key)]
    for p in paths:
        if not p.exists():
            raise DataError(f"input file not found: {p}")
    return paths


def cmd_subset(config, args) -> None:
    ontology, extra_inputs = _load_ontology(config)
    clips_path = _require(config, "paths.clips")
    clips = subset.read_clips_jsonl(clips_path)
    subset.validate_clips(clips, ontology)
    index_path = config.get("paths.audiocaps_index")
    index = subset.read_split_index(index_path) if index_path else {}
    targets = subset.build_targets(
        ontology,
        config.get("subset.music_roots"),
        config.get("subset.default_target"),
    )
    seed = config.get("subset.seed")
    selection = subset.select_subset(
        clips, targets, index, seed,
        deprioritized=config.get("subset.deprioritized"),
    )
    leaks = subset.leakage_report(selection, index)
    if leaks:
        raise InvariantError(f"leakage violations for clips: {leaks[:5]}")

    out = _out_dir(config)
    subset_path = out / "subset.jsonl"
    summary_path = out / "subset_summary.json"
    subset.write_selection_jsonl(subset_path, selection)
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(subset.selection_summary(selection), fh, indent=2, sort_keys=True)
        fh.write("\n")
    inputs = [clips_path, *extra_inputs] + ([index_path] if index_path else [])
    _manifest("subset", inputs, [subset_path, summary_path], seed)


def cmd_synth_captions(config, args) -> None:
    ontology, extra_inputs = _load_ontology(config)
    clips_path = _require(config, "paths.clips")
    clips = subset.read_clips_jsonl(clips_path)
    dataset = config.get("synth.dataset")
    task = config.get("synth.task")
    out = _out_dir(config)
    captions_path = out / "captions.jsonl"
    with open(captions_path, "w", encoding="utf-8") as fh:
        for clip in clips:
            text = synth_caption(ontology, clip.label_ids)
            record = captions.CaptionRecord(dataset, task, text)
            captions.validate_record(record)
            fh.write(
                json.dumps(
                    {
                        "clip_id": clip.clip_id,
                        "dataset": dataset,
                        "task": task,
                        "text": text,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    _manifest("synth-captions", [clips_path, *extra_inputs], [captions_path])


def cmd_features(config, args) -> None:
    params = FeatureParams(
        sample_rate=config.get("features.sample_rate"),
        window_length=config.get("features.window_length"),
        hop_length=config.get("features.hop_length"),
        n_mels=config.get("features.n_mels"),
        chunk_seconds=config.get("features.chunk_seconds"),
    )
    inputs = _input_paths(config, "features.inputs")
    out = _out_dir(config) / "features"
    out.mkdir(parents=True, exist_ok=True)
    index_path = out / "index.jsonl"
    outputs = []
    with open(index_path, "w", encoding="utf-8") as fh:
        for path in inputs:
            wave = resample(read_wav(path), params.sample_rate)
            spectrogram = log_mel(wave, params)
            target = out / (path.stem + ".capk")
            write_tensor(target, spectrogram.values)
            outputs.append(target)
            fh.write(
                json.dumps(
                    {
                        "input": str(path),
                        "output": str(target),
                        "shape": list(spectrogram.values.shape),
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    _manifest("features", inputs, [*outputs, index_path])


def cmd_augment(config, args) -> None:
    aug_config = augment_mod.AugmentConfig(
        p_each=config.get("augment.p_each"),
        noise_std_range=tuple(config.get("augment.noise_std_range")),
        shift_fraction_range=tuple(config.get("augment.shift_fraction_range")),
        gain_db_range=tuple(config.get("augment.gain_db_range")),
        seed=config.get("augment.seed"),
    )
    inputs = _input_paths(config, "augment.inputs")
    out = _out_dir(config) / "augmented"
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    for i, path in enumerate(inputs):
        wave = read_wav(path)
        rng = np.random.default_rng(aug_config.seed ^ i)
        augmented = augment_mod.augment_pipeline(wave, aug_config, rng)
        target = out / path.name
        write_wav(target, augmented)
        outputs.append(target)
    _manifest("augment", inputs, outputs, aug_config.seed)


def cmd_mix_plan(config, args) -> None:
    spec = mixer.MixtureSpec(
        ratio=tuple(config.get("mixture.ratio")),
        seed=config.get("mixture.seed"),
        clotho_expansion=config.get("mixture.clotho_expansion"),
    )
    sizes = config.get("mixture.sizes")
    out = _out_dir(config)
    plan_path = out / "mix_plan.jsonl"
    stream = mixer.sample_stream(sizes, spec)
    with open(plan_path, "w", encoding="utf-8") as fh:
        for _ in range(args.draws):
            item = next(stream)
            fh.write(json.dumps(dataclasses.asdict(item), sort_keys=True) + "\n")
    _manifest("mix-plan", [], [plan_path], spec.seed)


def _open_scorer(config):
    kind = config.get("decode.scorer.kind")
    if kind == "table":
        path = _require(config, "decode.scorer.path")
        return load_table(path), [path]
    if kind == "stdio":
        cmd = _require(config, "decode.scorer.cmd")
        return RemoteScorer.spawn_stdio(cmd), []
    if kind == "tcp":
        host = _require(config, "decode.scorer.host")
        port = _require(config, "decode.scorer.port")
        return RemoteScorer.connect_tcp(host, port), []
    raise ConfigError(f"unknown scorer kind {kind!r}")


def cmd_decode(config, args) -> None:
    scorer, scorer_inputs = _open_scorer(config)
    section = config.section("decode")
    base_params = {
        key: section[key]
        for key in (
            "strategy", "max_len", "num_beams", "num_groups",
            "diversity_penalty", "temperature", "top_k", "contrastive_alpha",
            "contrastive_k", "length_penalty", "seed", "end_token",
        )
    }
    jobs_path = config.get("decode.jobs")
    if jobs_path:
        jobs = []
        with open(jobs_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    obj = json.loads(line)
                    jobs.append((obj["id"], obj.get("forced_prefix", [])))
    else:
        jobs = [("job0", config.get("decode.forced_prefix"))]

    out = _out_dir(config)
    hyp_path = out / "hypotheses.jsonl"
    try:
        with open(hyp_path, "w", encoding="utf-8") as fh:
            for job_id, prefix in jobs:
                params = DecodeParams(forced_prefix=tuple(prefix), **base_params)
                for rank, hyp in enumerate(decode(scorer, params)):
                    fh.write(
                        json.dumps(
                            {
                                "id": job_id,
                                "rank": rank,
                                "tokens": list(hyp.tokens),
                                "logprob": hyp.logprob,
                                "score": hyp.score,
                                "finished": hyp.finished,
                            },
                            sort_keys=True,
                        )
                        + "\n"
                    )
    finally:
        if hasattr(scorer, "close"):
            scorer.close()
    inputs = scorer_inputs + ([jobs_path] if jobs_path else [])
    _manifest("decode", inputs, [hyp_path], section["seed"])


def cmd_eval(config, args) -> None:
    candidates_path = _require(config, "eval.candidates")
    references_path = _require(config, "eval.references")
    spice_path = config.get("eval.spice")
    corpus = metrics.build_corpus(
        metrics.read_candidates_jsonl(candidates_path),
        metrics.read_references_jsonl(references_path),
    )
    report = metrics.evaluate(corpus, spice_path)
    out = _out_dir(config)
    json_path = out / "report.json"
    csv_path = out / "report.csv"
    metrics.write_report_json(json_path, report)
    metrics.write_report_csv(csv_path, report)
    inputs = [candidates_path, references_path] + ([spice_path] if spice_path else [])
    _manifest("eval", inputs, [json_path, csv_path])


COMMANDS = {
    "subset": cmd_subset,
    "synth-captions": cmd_synth_captions,
    "features": cmd_features,
    "augment": cmd_augment,
    "mix-plan": cmd_mix_plan,
    "decode": cmd_decode,
    "eval": cmd_eval,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capkit", description=__doc__)
    parser.add_argument("--config", default=None, help="JSON config path")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[],
        metavar="SECTION.KEY=VALUE", help="override a config key",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd_parser = sub.add_parser(name)
        if name == "mix-plan":
            cmd_parser.add_argument("--draws", type=int, default=1000)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        apply_overrides(config, args.overrides)
        COMMANDS[args.command](config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except InvariantError as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
