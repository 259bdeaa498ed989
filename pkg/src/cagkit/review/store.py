"""Durable review/annotation store: append-only JSONL log with snapshot
compaction.

Every submission appends one event line and is acknowledged only after the
line is flushed to disk. Revisions per logical key grow strictly; nothing
is ever rewritten or deleted, so the log doubles as the audit trail.
compact() writes a snapshot so later loads can skip replaying the full log
(the log itself is retained).
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from cagkit.classify import CLASSES
from cagkit.errors import StoreUnwritable, ValidationFailure
from cagkit.metrics import summarize
from cagkit.tables import render_table

LOG_NAME = "events.jsonl"
SNAPSHOT_NAME = "snapshot.json"

ERROR_FLAGS = (
    "laterality_error",
    "vessel_error",
    "treatment_error",
    "logical_error",
    "stenosis_error",
)

REVIEW_TABLE_HEADERS = (
    "Model",
    "Mean",
    "SD",
    "Laterality Error",
    "Vessel Error",
    "Treatment Error",
    "Logical Error",
    "Stenosis Detect Error",
)


@dataclass(frozen=True)
class AnnotationRecord:
    video_id: str
    frame_index: int
    annotator_id: str
    label: str
    timestamp: str = ""
    resolving: bool = False  # marks an adjudication pass
    revision: int = 0

    @property
    def key(self) -> tuple:
        return (self.video_id, self.frame_index, self.annotator_id)

    def to_json_obj(self) -> dict:
        return {
            "video_id": self.video_id,
            "frame_index": self.frame_index,
            "annotator_id": self.annotator_id,
            "label": self.label,
            "timestamp": self.timestamp,
            "resolving": self.resolving,
            "revision": self.revision,
        }


@dataclass(frozen=True)
class ReviewRecord:
    case_id: str
    reviewer_id: str
    model_id: str
    overall: int
    laterality_error: bool = False
    vessel_error: bool = False
    treatment_error: bool = False
    logical_error: bool = False
    stenosis_error: bool = False
    comment: str = ""
    timestamp: str = ""
    revision: int = 0

    @property
    def key(self) -> tuple:
        return (self.case_id, self.reviewer_id, self.model_id)

    def to_json_obj(self) -> dict:
        obj = {
            "case_id": self.case_id,
            "reviewer_id": self.reviewer_id,
            "model_id": self.model_id,
            "overall": self.overall,
            "comment": self.comment,
            "timestamp": self.timestamp,
            "revision": self.revision,
        }
        for flag in ERROR_FLAGS:
            obj[flag] = getattr(self, flag)
        return obj


def validate_annotation(obj: dict) -> AnnotationRecord:
    """Build an AnnotationRecord from untrusted input."""
    for name in ("video_id", "annotator_id", "label"):
        if not isinstance(obj.get(name), str) or not obj.get(name):
            raise ValidationFailure(name, "required string field")
    if not isinstance(obj.get("frame_index"), int) or isinstance(obj.get("frame_index"), bool):
        raise ValidationFailure("frame_index", "must be an integer")
    if obj["frame_index"] < 0:
        raise ValidationFailure("frame_index", "must be >= 0")
    if obj["label"] not in CLASSES:
        raise ValidationFailure("label", f"must be one of {', '.join(CLASSES)}")
    resolving = obj.get("resolving", False)
    if not isinstance(resolving, bool):
        raise ValidationFailure("resolving", "must be a boolean")
    return AnnotationRecord(
        video_id=obj["video_id"],
        frame_index=obj["frame_index"],
        annotator_id=obj["annotator_id"],
        label=obj["label"],
        timestamp=str(obj.get("timestamp", "")),
        resolving=resolving,
    )


def validate_review(obj: dict) -> ReviewRecord:
    for name in ("case_id", "reviewer_id", "model_id"):
        if not isinstance(obj.get(name), str) or not obj.get(name):
            raise ValidationFailure(name, "required string field")
    overall = obj.get("overall")
    if not isinstance(overall, int) or isinstance(overall, bool):
        raise ValidationFailure("overall", "must be an integer")
    if not 0 <= overall <= 10:
        raise ValidationFailure("overall", "must be between 0 and 10")
    flags = {}
    for flag in ERROR_FLAGS:
        value = obj.get(flag, False)
        if not isinstance(value, bool):
            raise ValidationFailure(flag, "must be a boolean")
        flags[flag] = value
    comment = obj.get("comment", "")
    if not isinstance(comment, str):
        raise ValidationFailure("comment", "must be a string")
    return ReviewRecord(
        case_id=obj["case_id"],
        reviewer_id=obj["reviewer_id"],
        model_id=obj["model_id"],
        overall=overall,
        comment=comment,
        timestamp=str(obj.get("timestamp", "")),
        **flags,
    )


class ReviewStore:
    """Single-appender store; readers see a consistent in-memory replay."""

    def __init__(self, path, clock=time.time):
        self.path = Path(path)
        self._clock = clock
        self._lock = threading.Lock()
        self.annotations: list[AnnotationRecord] = []
        self.reviews: list[ReviewRecord] = []
        self._revisions: dict = {}
        try:
            self.path.mkdir(parents=True, exist_ok=True)
            self._load()
            self._log = (self.path / LOG_NAME).open("a", encoding="utf-8")
        except OSError as exc:
            raise StoreUnwritable(f"cannot open store at {self.path}: {exc}") from exc

    # -- persistence --

    def _load(self) -> None:
        self._log_lines_seen = 0
        snapshot_path = self.path / SNAPSHOT_NAME
        if snapshot_path.exists():
            snap = json.loads(snapshot_path.read_text(encoding="utf-8"))
            for obj in snap.get("annotations", []):
                self._apply({"kind": "annotation", **obj})
            for obj in snap.get("reviews", []):
                self._apply({"kind": "review", **obj})
            skip = int(snap.get("log_lines", 0))
        else:
            skip = 0
        log_path = self.path / LOG_NAME
        if log_path.exists():
            with log_path.open("r", encoding="utf-8") as fh:
                for line_no, line in enumerate(fh):
                    self._log_lines_seen = line_no + 1
                    if line_no < skip:
                        continue
                    line = line.strip()
                    if not line:
                        continue
                    self._apply(json.loads(line))

    def _apply(self, event: dict) -> None:
        kind = event.pop("kind")
        if kind == "annotation":
            record = AnnotationRecord(**event)
        else:
            record = ReviewRecord(**event)
        (self.annotations if kind == "annotation" else self.reviews).append(record)
        self._revisions[(kind, record.key)] = max(
            self._revisions.get((kind, record.key), 0), record.revision
        )

    def _append(self, kind: str, record) -> int:
        with self._lock:
            revision = self._revisions.get((kind, record.key), 0) + 1
            record = type(record)(**{**record.to_json_obj(), "revision": revision})
            if not record.timestamp:
                record = type(record)(**{**record.to_json_obj(), "timestamp": self._now()})
            line = json.dumps({"kind": kind, **record.to_json_obj()},
                              sort_keys=True, ensure_ascii=False)
            self._log.write(line + "\n")
            self._log.flush()
            os.fsync(self._log.fileno())
            self._log_lines_seen += 1
            self._revisions[(kind, record.key)] = revision
            (self.annotations if kind == "annotation" else self.reviews).append(record)
            return revision

    def _now(self) -> str:
        return datetime.fromtimestamp(self._clock(), tz=timezone.utc).strftime(
            "%Y-%m-%dT%H:%M:%S.%fZ"
        )

    def submit_annotation(self, record: AnnotationRecord) -> int:
        return self._append("annotation", record)

    def submit_review(self, record: ReviewRecord) -> int:
        return self._append("review", record)

    def compact(self) -> None:
        """Write a snapshot so future loads skip the already-seen log lines."""
        with self._lock:
            snap = {
                "annotations": [r.to_json_obj() for r in self.annotations],
                "reviews": [r.to_json_obj() for r in self.reviews],
                "log_lines": self._log_lines_seen,
            }
            tmp = self.path / (SNAPSHOT_NAME + ".tmp")
            tmp.write_text(json.dumps(snap, sort_keys=True, ensure_ascii=False),
                           encoding="utf-8")
            os.replace(tmp, self.path / SNAPSHOT_NAME)

    def close(self) -> None:
        with self._lock:
            if not self._log.closed:
                self._log.flush()
                os.fsync(self._log.fileno())
                self._log.close()

    # -- queries --

    def latest_annotations(self) -> dict:
        latest: dict = {}
        for r in self.annotations:
            cur = latest.get(r.key)
            if cur is None or r.revision > cur.revision:
                latest[r.key] = r
        return latest

    def latest_reviews(self) -> dict:
        latest: dict = {}
        for r in self.reviews:
            cur = latest.get(r.key)
            if cur is None or r.revision > cur.revision:
                latest[r.key] = r
        return latest


def find_conflicts(annotations) -> list[dict]:
    """Frames where two or more annotators' latest labels disagree.

    A frame with any latest annotation marked resolving is adjudicated and
    drops off the conflict list.
    """
    latest: dict = {}
    for r in annotations:
        cur = latest.get(r.key)
        if cur is None or r.revision > cur.revision:
            latest[r.key] = r
    frames: dict = {}
    for r in latest.values():
        frames.setdefault((r.video_id, r.frame_index), []).append(r)
    conflicts = []
    for (video_id, frame_index), records in sorted(frames.items()):
        if any(r.resolving for r in records):
            continue
        labels = {r.annotator_id: r.label for r in records}
        if len(labels) >= 2 and len(set(labels.values())) >= 2:
            conflicts.append(
                {
                    "video_id": video_id,
                    "frame_index": frame_index,
                    "labels": dict(sorted(labels.items())),
                }
            )
    return conflicts


def export_review_table(reviews, models=None) -> dict:
    """Per-model mean/SD of the overall score plus error-flag counts.

    Only the latest revision per (case, reviewer, model) counts. Row order
    follows `models` when given, otherwise sorted model ids.
    """
    latest: dict = {}
    for r in reviews:
        cur = latest.get(r.key)
        if cur is None or r.revision > cur.revision:
            latest[r.key] = r
    by_model: dict = {}
    for r in latest.values():
        by_model.setdefault(r.model_id, []).append(r)
    row_order = list(models) if models else sorted(by_model)
    rows = []
    for model_id in row_order:
        group = by_model.get(model_id, [])
        if not group:
            continue
        summary = summarize([r.overall for r in group])
        row = {
            "model_id": model_id,
            "n": summary.n,
            "mean": summary.mean,
            "sd": summary.std,
        }
        for flag in ERROR_FLAGS:
            row[flag] = sum(1 for r in group if getattr(r, flag))
        rows.append(row)
    return {"headers": list(REVIEW_TABLE_HEADERS), "rows": rows}


def render_review_table(table: dict) -> str:
    rows = [
        [
            row["model_id"],
            f"{row['mean']:.2f}",
            f"{row['sd']:.2f}",
            row["laterality_error"],
            row["vessel_error"],
            row["treatment_error"],
            row["logical_error"],
            row["stenosis_error"],
        ]
        for row in table["rows"]
    ]
    return render_table(table["headers"], rows)
