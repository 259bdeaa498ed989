"""Bilingual corpus construction, prompt assembly, and leakage-safe splits.

A corpus record pairs one selected key frame with the exam's Japanese and
English pre-procedure reports and ground-truth summaries. Splits assign
whole groups (videos or exams) to train/val/test so near-duplicate frames
can never leak across the evaluation boundary.
"""

from __future__ import annotations

import csv
import json
import logging
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from cagkit.errors import (
    DuplicateRecordKey,
    LeakageDetected,
    MissingLanguage,
    NoRecords,
    UnresolvedExam,
)

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
LANGS = ("jp", "en")

_SIDE_WORDS = {
    "en": {"LCA": "left", "RCA": "right"},
    "jp": {"LCA": "左", "RCA": "右"},
}


@dataclass
class CorpusRecord:
    exam_id: str
    video_id: str
    frame_index: int
    image_ref: str = ""
    laterality: str = ""  # "LCA" | "RCA" | "" when unknown
    report_jp: str = ""
    report_en: str = ""
    gt_summary_jp: str = ""
    gt_summary_en: str = ""
    generated: dict = field(default_factory=dict)  # model_id -> {text_jp?, text_en?}
    complete: bool = False

    @property
    def case_id(self) -> str:
        return f"{self.exam_id}:{self.video_id}:{self.frame_index}"

    def has_language(self, lang: str) -> bool:
        """True when both the report and the summary exist in `lang`."""
        report = getattr(self, f"report_{lang}")
        summary = getattr(self, f"gt_summary_{lang}")
        return bool(report) and bool(summary)

    def to_json_obj(self) -> dict:
        return {
            "exam_id": self.exam_id,
            "video_id": self.video_id,
            "frame_index": self.frame_index,
            "image_ref": self.image_ref,
            "laterality": self.laterality,
            "report_jp": self.report_jp,
            "report_en": self.report_en,
            "gt_summary_jp": self.gt_summary_jp,
            "gt_summary_en": self.gt_summary_en,
            "generated": self.generated,
            "complete": self.complete,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "CorpusRecord":
        return cls(
            exam_id=obj["exam_id"],
            video_id=obj["video_id"],
            frame_index=obj["frame_index"],
            image_ref=obj.get("image_ref", ""),
            laterality=obj.get("laterality", ""),
            report_jp=obj.get("report_jp", ""),
            report_en=obj.get("report_en", ""),
            gt_summary_jp=obj.get("gt_summary_jp", ""),
            gt_summary_en=obj.get("gt_summary_en", ""),
            generated=obj.get("generated", {}),
            complete=obj.get("complete", False),
        )


def build_corpus(
    candidates,
    reports,
    summaries,
    *,
    labels=None,
    image_ref_pattern: str = "frames/{exam_id}/{video_id}/{frame_index:05d}.png",
) -> list[CorpusRecord]:
    """One record per selected key frame, joined against the report and
    summary tables.

    reports: {exam_id: {"report_jp", "report_en"}}.
    summaries: keyed by (exam_id, video_id) with an exam_id fallback.
    labels: optional {(video_id, frame_index): six-class label} used to fill
    laterality. Missing translations leave fields empty; the record is then
    flagged incomplete but retained (training exports filter on the flag).
    """
    labels = labels or {}
    records: list[CorpusRecord] = []
    seen: set = set()
    for cand in candidates:
        if cand.exam_id not in reports:
            raise UnresolvedExam(cand.exam_id)
        report_row = reports[cand.exam_id]
        summary_row = summaries.get((cand.exam_id, cand.video_id)) or summaries.get(
            cand.exam_id, {}
        )
        for frame_index in cand.selected:
            key = (cand.video_id, frame_index)
            if key in seen:
                raise DuplicateRecordKey(
                    f"duplicate key frame ({cand.video_id}, {frame_index})"
                )
            seen.add(key)
            label = labels.get(key, "")
            record = CorpusRecord(
                exam_id=cand.exam_id,
                video_id=cand.video_id,
                frame_index=frame_index,
                image_ref=image_ref_pattern.format(
                    exam_id=cand.exam_id,
                    video_id=cand.video_id,
                    frame_index=frame_index,
                ),
                laterality=label.split("_", 1)[0] if label else "",
                report_jp=str(report_row.get("report_jp", "") or ""),
                report_en=str(report_row.get("report_en", "") or ""),
                gt_summary_jp=str(summary_row.get("gt_summary_jp", "") or ""),
                gt_summary_en=str(summary_row.get("gt_summary_en", "") or ""),
            )
            record.complete = record.has_language("jp") and record.has_language("en")
            records.append(record)
    return records


def export_training(records, lang: str):
    """Records eligible for training in `lang`: both texts present."""
    if lang not in LANGS:
        raise ValueError(f"lang must be one of {LANGS}, got {lang!r}")
    return [r for r in records if r.has_language(lang)]


def attach_generated(records, rows) -> None:
    """Merge model-generated texts into records, in place.

    rows: dicts with video_id, frame_index, model_id, and text_jp/text_en.
    Rows that match no record are ignored (generation may cover a superset).
    """
    index = {(r.video_id, r.frame_index): r for r in records}
    for row in rows:
        record = index.get((str(row["video_id"]), int(row["frame_index"])))
        if record is None:
            continue
        texts = {}
        for key in ("text_jp", "text_en"):
            if row.get(key):
                texts[key] = str(row[key])
        if texts:
            record.generated.setdefault(str(row["model_id"]), {}).update(texts)


def build_prompt(record: CorpusRecord, lang: str, template_version: str = "v1") -> str:
    """Instantiate the versioned prompt template for one record.

    The template text is a byte-stable package resource per (lang, version);
    {side} becomes the laterality word and {report} the clinical report body.
    """
    if lang not in LANGS:
        raise ValueError(f"lang must be one of {LANGS}, got {lang!r}")
    report = getattr(record, f"report_{lang}")
    if not report:
        raise MissingLanguage(f"record {record.case_id} has no {lang} report")
    if record.laterality not in _SIDE_WORDS[lang]:
        raise MissingLanguage(
            f"record {record.case_id} has unknown laterality {record.laterality!r}"
        )
    template = load_prompt_template(lang, template_version)
    return template.format(side=_SIDE_WORDS[lang][record.laterality], report=report)


def load_prompt_template(lang: str, version: str = "v1") -> str:
    name = f"prompt_{lang}_{version}.txt"
    return (resources.files("cagkit") / "templates" / name).read_text(encoding="utf-8")


# --- splits -------------------------------------------------------------------

@dataclass
class SplitManifest:
    granularity: str  # "video" | "exam"
    assignment: dict  # group_id -> split
    counts: dict  # split -> {"cases","videos","images"}

    def to_json_obj(self) -> dict:
        return {
            "granularity": self.granularity,
            "assignment": dict(sorted(self.assignment.items())),
            "counts": {s: self.counts.get(s, {}) for s in SPLITS},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SplitManifest":
        return cls(
            granularity=obj["granularity"],
            assignment=dict(obj["assignment"]),
            counts={s: dict(v) for s, v in obj.get("counts", {}).items()},
        )


@dataclass
class SplitReport:
    granularity: str
    rows: dict  # split -> {"cases","videos","images"}

    def to_json_obj(self) -> dict:
        return {"granularity": self.granularity,
                "rows": {s: self.rows.get(s, {"cases": 0, "videos": 0, "images": 0})
                         for s in SPLITS}}

    def table_rows(self) -> list:
        out = []
        for split in SPLITS:
            row = self.rows.get(split, {"cases": 0, "videos": 0, "images": 0})
            out.append([split, row["cases"], row["videos"], row["images"]])
        return out


def _record_ids(record) -> tuple:
    if isinstance(record, dict):
        return str(record["exam_id"]), str(record["video_id"])
    return str(record.exam_id), str(record.video_id)


def _group_key(record, granularity: str) -> str:
    exam_id, video_id = _record_ids(record)
    return exam_id if granularity == "exam" else video_id


def split_by_group(records, granularity: str = "video", ratios=(0.8, 0.1, 0.1),
                   seed: int = 0) -> SplitManifest:
    """Assign whole groups to splits, balancing image counts to the ratios.

    Groups are shuffled by a seeded PRNG, then each is placed in the split
    whose image-count deficit against its target is currently largest.
    Identical (records, ratios, seed) produce identical manifests.
    """
    records = list(records)
    if not records:
        raise NoRecords("cannot split an empty record list")
    if granularity not in ("video", "exam"):
        raise ValueError(f"granularity must be video or exam, got {granularity!r}")
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError(f"need three positive ratios, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")

    groups: dict[str, list] = {}
    for r in records:
        groups.setdefault(_group_key(r, granularity), []).append(r)

    group_ids = sorted(groups)
    rng = random.Random(seed)
    rng.shuffle(group_ids)

    total = len(records)
    targets = [ratio * total for ratio in ratios]
    assigned_images = [0, 0, 0]
    assignment: dict[str, str] = {}
    for gid in group_ids:
        deficits = [targets[k] - assigned_images[k] for k in range(3)]
        slot = max(range(3), key=lambda k: (deficits[k], -k))
        assignment[gid] = SPLITS[slot]
        assigned_images[slot] += len(groups[gid])

    counts = {s: {"cases": set(), "videos": set(), "images": 0} for s in SPLITS}
    for gid, split in assignment.items():
        for r in groups[gid]:
            exam_id, video_id = _record_ids(r)
            counts[split]["cases"].add(exam_id)
            counts[split]["videos"].add(video_id)
            counts[split]["images"] += 1
    final_counts = {
        s: {
            "cases": len(counts[s]["cases"]),
            "videos": len(counts[s]["videos"]),
            "images": counts[s]["images"],
        }
        for s in SPLITS
    }
    for s in SPLITS:
        if final_counts[s]["images"] == 0:
            logger.warning("split %r received no records", s)
    return SplitManifest(granularity=granularity, assignment=assignment,
                         counts=final_counts)


def validate_split(manifest: SplitManifest, records) -> SplitReport:
    """Check group atomicity and recount the per-split table.

    Each record's split is resolved through the manifest (granularity key
    first, then video_id, then exam_id, so mis-keyed hand-built manifests
    are still checkable). Any group at the manifest's granularity whose
    records land in more than one split raises LeakageDetected.
    """
    records = list(records)
    if not records:
        raise NoRecords("cannot validate a split over no records")

    def resolve(record) -> str:
        exam_id, video_id = _record_ids(record)
        for key in (_group_key(record, manifest.granularity), video_id, exam_id):
            if key in manifest.assignment:
                return manifest.assignment[key]
        raise ValueError(f"manifest does not cover record {exam_id}/{video_id}")

    group_splits: dict[str, set] = {}
    rows = {s: {"cases": set(), "videos": set(), "images": 0} for s in SPLITS}
    for r in records:
        split = resolve(r)
        if split not in SPLITS:
            raise ValueError(f"manifest assigns unknown split {split!r}")
        gid = _group_key(r, manifest.granularity)
        group_splits.setdefault(gid, set()).add(split)
        exam_id, video_id = _record_ids(r)
        rows[split]["cases"].add(exam_id)
        rows[split]["videos"].add(video_id)
        rows[split]["images"] += 1

    for gid in sorted(group_splits):
        if len(group_splits[gid]) > 1:
            raise LeakageDetected(gid, sorted(group_splits[gid]))

    return SplitReport(
        granularity=manifest.granularity,
        rows={
            s: {
                "cases": len(rows[s]["cases"]),
                "videos": len(rows[s]["videos"]),
                "images": rows[s]["images"],
            }
            for s in SPLITS
        },
    )


# --- table IO -------------------------------------------------------------------

def load_report_table(path) -> dict:
    """Reports keyed by exam_id, from CSV or JSONL with columns/fields
    exam_id, report_jp, report_en."""
    table = {}
    for row in _iter_rows(Path(path)):
        table[str(row["exam_id"])] = {
            "report_jp": row.get("report_jp", "") or "",
            "report_en": row.get("report_en", "") or "",
        }
    return table


def load_summary_table(path) -> dict:
    """Summaries keyed by (exam_id, video_id), or exam_id when video_id is
    absent/empty."""
    table = {}
    for row in _iter_rows(Path(path)):
        value = {
            "gt_summary_jp": row.get("gt_summary_jp", "") or "",
            "gt_summary_en": row.get("gt_summary_en", "") or "",
        }
        video_id = str(row.get("video_id", "") or "")
        if video_id:
            table[(str(row["exam_id"]), video_id)] = value
        else:
            table[str(row["exam_id"])] = value
    return table


def _iter_rows(path: Path):
    if path.suffix.lower() == ".csv":
        with path.open("r", encoding="utf-8", newline="") as fh:
            yield from csv.DictReader(fh)
    else:
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)


def write_corpus_jsonl(records, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json_obj(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def read_corpus_jsonl(path) -> list[CorpusRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(CorpusRecord.from_json_obj(json.loads(line)))
    return records
