"""Output-sequence templates: Whisper control tokens plus a dataset/task
prefix, and the inverse parser.

The template layer works on token *text*; turning the forced prefix into
token ids is the scorer side's job.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from capkit.errors import DataError

WHISPER_PREFIX = "<|startoftranscript|><|en|><|transcribe|><|notimestamps|>"
END_TOKEN = "<|endoftext|>"

DATASETS = ("clotho", "audiocaps", "audioset")
TASKS = ("caption", "keywords")

# combinations actually used in training; others need permissive=True
STRICT_COMBOS = frozenset(
    [("clotho", "caption"), ("audiocaps", "caption"), ("audioset", "keywords")]
)

_CONTROL_TOKEN = re.compile(r"<\|[^|]*\|>")
_PREFIX_RE = re.compile(r"^(clotho|audiocaps|audioset) > (caption|keywords): ")


class CaptionFormatError(DataError):
    """Invalid dataset/task combination or unparseable sequence."""

    def __init__(self, message: str, raw_text: str | None = None):
        super().__init__(message)
        self.raw_text = raw_text


@dataclass(frozen=True)
class CaptionRecord:
    dataset: str
    task: str
    text: str


def _check_combo(dataset: str, task: str, permissive: bool) -> None:
    if dataset not in DATASETS:
        raise CaptionFormatError(f"unknown dataset: {dataset!r}")
    if task not in TASKS:
        raise CaptionFormatError(f"unknown task: {task!r}")
    if not permissive and (dataset, task) not in STRICT_COMBOS:
        raise CaptionFormatError(
            f"combination ({dataset}, {task}) is not used in training; "
            "pass permissive=True to allow it"
        )


def validate_record(record: CaptionRecord, permissive: bool = False) -> None:
    _check_combo(record.dataset, record.task, permissive)
    if _CONTROL_TOKEN.search(record.text):
        raise CaptionFormatError("caption text must not contain control tokens")


def forced_prefix(dataset: str, task: str, permissive: bool = False) -> str:
    """Token text forced to the start of generation for this dataset/task."""
    _check_combo(dataset, task, permissive)
    return f"{WHISPER_PREFIX}{dataset} > {task}: "


def format_target(record: CaptionRecord, permissive: bool = False) -> str:
    """Full training target: forced prefix + caption body + end token."""
    validate_record(record, permissive)
    return f"{forced_prefix(record.dataset, record.task, permissive)}{record.text}{END_TOKEN}"


def parse_output(text: str, permissive: bool = False) -> CaptionRecord:
    """Inverse of format_target; tolerates a missing Whisper prefix or end
    token but rejects any sequence without the dataset/task tag."""
    body = text
    if body.startswith(WHISPER_PREFIX):
        body = body[len(WHISPER_PREFIX) :]
    match = _PREFIX_RE.match(body)
    if match is None:
        raise CaptionFormatError(
            "no dataset/task prefix found in decoded text", raw_text=text
        )
    dataset, task = match.group(1), match.group(2)
    _check_combo(dataset, task, permissive)
    body = body[match.end() :]
    if body.endswith(END_TOKEN):
        body = body[: -len(END_TOKEN)]
    record = CaptionRecord(dataset, task, body)
    validate_record(record, permissive)
    return record
