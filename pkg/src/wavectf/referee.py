"""Hidden-test-set referee: submission intake, append-only ledger, leaderboard."""
from __future__ import annotations

import fcntl
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import _jsonfmt
from .io import FormatError, read_header
from .metrics import ScoreReport, evaluate_submission
from .tasks import PRED_KEYS, SCORE_IDS

log = logging.getLogger(__name__)

BOARD_COLUMNS = ("Model", "Avg Score") + SCORE_IDS


class ManifestError(ValueError):
    pass


class UnknownPredictionKey(ManifestError, KeyError):
    def __str__(self):
        return ValueError.__str__(self)


class LedgerError(OSError):
    pass


@dataclass
class Submission:
    dataset: str
    method: str
    predictions: dict
    submitted_at: str
    id: str
    shapes: dict = field(default_factory=dict)
    problems: dict = field(default_factory=dict)


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def ingest(manifest_path, submitted_at=None, inbox=None):
    """Parse and validate a submission manifest.

    Only prediction file headers are read. Missing or unreadable files are
    noted in ``problems`` (those tasks later score -100); unknown keys or a
    malformed manifest are rejected outright.

    Parameters
    ----------
    inbox : path, optional
        When given, every prediction path must resolve inside this directory.
    """
    manifest_path = Path(manifest_path)
    try:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{manifest_path}: {exc}") from exc
    base = manifest_path.parent if inbox is None else Path(inbox)
    return ingest_dict(doc, base, submitted_at=submitted_at, confine=inbox is not None)


def ingest_dict(doc, base, submitted_at=None, confine=False):
    if not isinstance(doc, dict):
        raise ManifestError("manifest must be a JSON object")
    for key in ("dataset", "method", "predictions"):
        if key not in doc:
            raise ManifestError(f"manifest lacks {key!r}")
    if not isinstance(doc["dataset"], str) or not isinstance(doc["method"], str):
        raise ManifestError("dataset and method must be strings")
    preds = doc["predictions"]
    if not isinstance(preds, dict):
        raise ManifestError("predictions must be an object")
    unknown = sorted(set(preds) - set(PRED_KEYS))
    if unknown:
        raise UnknownPredictionKey(f"unknown prediction keys {unknown}")

    base = Path(base).resolve()
    paths, shapes, problems = {}, {}, {}
    digest = hashlib.sha256()
    digest.update(_jsonfmt.dumps({"dataset": doc["dataset"], "method": doc["method"]}).encode())
    for key in PRED_KEYS:
        if key not in preds:
            continue
        if not isinstance(preds[key], str):
            raise ManifestError(f"{key}: path must be a string")
        path = (base / preds[key]).resolve()
        if confine and not path.is_relative_to(base):
            raise ManifestError(f"{key}: path escapes the inbox")
        paths[key] = str(path)
        digest.update(key.encode())
        try:
            shapes[key] = read_header(path)
            digest.update(path.read_bytes())
        except (OSError, FormatError) as exc:
            problems[key] = str(exc)
            digest.update(b"<unreadable>")
    return Submission(
        dataset=doc["dataset"],
        method=doc["method"],
        predictions=paths,
        submitted_at=submitted_at or doc.get("submitted_at") or _now(),
        id=digest.hexdigest()[:16],
        shapes=shapes,
        problems=problems,
    )


@dataclass
class LedgerEntry:
    id: str
    submitted_at: str
    report: ScoreReport

    @property
    def dataset(self):
        return self.report.dataset

    @property
    def method(self):
        return self.report.method

    @property
    def failures(self):
        return self.report.failures

    def to_dict(self):
        return {"id": self.id, "submitted_at": self.submitted_at, "report": self.report.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(id=d["id"], submitted_at=d["submitted_at"], report=ScoreReport.from_dict(d["report"]))


def append_entry(ledger_path, entry):
    """Append one line under an exclusive lock and fsync it."""
    line = _jsonfmt.dumps(entry.to_dict()) + "\n"
    try:
        fd = os.open(ledger_path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
        try:
            fcntl.flock(fd, fcntl.LOCK_EX)
            os.write(fd, line.encode("utf-8"))
            os.fsync(fd)
        finally:
            fcntl.flock(fd, fcntl.LOCK_UN)
            os.close(fd)
    except OSError as exc:
        raise LedgerError(f"could not record submission in {ledger_path}: {exc}") from exc


def read_ledger(ledger_path):
    """All complete entries; a torn final line (no newline) is skipped."""
    path = Path(ledger_path)
    if not path.exists():
        return []
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.endswith("\n") or not line.strip():
                continue
            entries.append(LedgerEntry.from_dict(json.loads(line)))
    return entries


def score_and_record(sub, hidden_bundle, ledger_path, workers=1):
    """Score ``sub`` against the referee bundle and append it to the ledger."""
    before = hidden_bundle.content_hash()
    report = evaluate_submission(hidden_bundle, sub.predictions, dataset=sub.dataset,
                                 method=sub.method, workers=workers)
    if hidden_bundle.content_hash() != before:
        raise RuntimeError("referee bundle changed during scoring")
    for key, reason in sub.problems.items():
        log.info("%s: %s", key, reason)
    entry = LedgerEntry(id=sub.id, submitted_at=sub.submitted_at, report=report)
    append_entry(ledger_path, entry)
    return entry


def leaderboard(entries, dataset, view="best"):
    """One row per method, sorted by composite.

    ``view="best"`` keeps each method's highest composite, ``"latest"`` its
    most recent entry. Ties go to the earlier submission, then method name.
    """
    if view not in ("best", "latest"):
        raise ValueError(f"view must be 'best' or 'latest', got {view!r}")
    chosen = {}
    for entry in entries:
        if entry.dataset != dataset:
            continue
        cur = chosen.get(entry.method)
        if cur is None:
            chosen[entry.method] = entry
        elif view == "best":
            key_new = (-entry.report.composite, entry.submitted_at)
            key_cur = (-cur.report.composite, cur.submitted_at)
            if key_new < key_cur:
                chosen[entry.method] = entry
        elif entry.submitted_at >= cur.submitted_at:
            chosen[entry.method] = entry
    ordered = sorted(chosen.values(), key=lambda e: (-e.report.composite, e.submitted_at, e.method))
    return [
        {"Model": e.method, "Avg Score": e.report.composite, **{s: e.report.scores[s] for s in SCORE_IDS},
         "id": e.id, "submitted_at": e.submitted_at}
        for e in ordered
    ]


def leaderboard_json(rows, dataset, view="best"):
    doc = {"dataset": dataset, "view": view, "columns": list(BOARD_COLUMNS), "rows": rows}
    return _jsonfmt.dumps(doc, indent=2) + "\n"


def render_table(rows):
    """Fixed-width text table with the Model / Avg Score / E1..E12 layout."""
    header = list(BOARD_COLUMNS)
    body = [[r["Model"]] + [f"{r[c]:.2f}" for c in BOARD_COLUMNS[1:]] for r in rows]
    widths = [max(len(str(x)) for x in col) for col in zip(header, *body)]
    lines = []
    for i, row in enumerate([header] + body):
        cells = [row[0].ljust(widths[0])] + [str(c).rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append(" | ".join(cells))
        if i == 0:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
