"""Dataset: corpus assembly, prompt templates, and leakage-safe splits."""

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cagkit.dataset import (
    CorpusRecord,
    SplitManifest,
    attach_generated,
    build_corpus,
    build_prompt,
    export_training,
    load_report_table,
    load_summary_table,
    read_corpus_jsonl,
    split_by_group,
    validate_split,
    write_corpus_jsonl,
)
from cagkit.errors import (
    DuplicateRecordKey,
    LeakageDetected,
    MissingLanguage,
    NoRecords,
    UnresolvedExam,
)
from cagkit.sampler import CandidateSet

REPORTS = {
    "e1": {"report_jp": "左冠動脈の造影。", "report_en": "Left coronary run."},
    "e2": {"report_jp": "右冠動脈の造影。", "report_en": "Right coronary run."},
}
SUMMARIES = {
    ("e1", "v1"): {"gt_summary_jp": "狭窄あり。", "gt_summary_en": "Stenosis present."},
    "e2": {"gt_summary_jp": "有意狭窄なし。", "gt_summary_en": "No significant stenosis."},
}


def cand(exam, video, indices):
    return CandidateSet(exam_id=exam, video_id=video, selected=list(indices),
                        provenance={i: [] for i in indices})


# --- build_corpus ----------------------------------------------------------------

def test_build_complete_record():
    records = build_corpus(
        [cand("e1", "v1", [3])], REPORTS, SUMMARIES,
        labels={("v1", 3): "LCA_better"},
    )
    assert len(records) == 1
    r = records[0]
    assert r.case_id == "e1:v1:3"
    assert r.laterality == "LCA"
    assert r.complete
    assert r.report_en == "Left coronary run."
    assert r.gt_summary_jp == "狭窄あり。"
    assert r.image_ref == "frames/e1/v1/00003.png"


def test_exam_level_summary_fallback():
    records = build_corpus([cand("e2", "v9", [0])], REPORTS, SUMMARIES)
    assert records[0].gt_summary_en == "No significant stenosis."


def test_missing_summary_flags_incomplete_but_keeps_record():
    reports = {"e3": {"report_jp": "レポート", "report_en": "Report"}}
    records = build_corpus([cand("e3", "v3", [1])], reports, {})
    assert len(records) == 1
    assert not records[0].complete
    assert export_training(records, "jp") == []
    assert export_training(records, "en") == []


def test_unresolved_exam_raises():
    with pytest.raises(UnresolvedExam):
        build_corpus([cand("ghost", "v", [0])], REPORTS, SUMMARIES)


def test_duplicate_record_key_raises():
    with pytest.raises(DuplicateRecordKey):
        build_corpus(
            [cand("e1", "v1", [3]), cand("e1", "v1", [3])], REPORTS, SUMMARIES
        )


def test_attach_generated_texts():
    records = build_corpus([cand("e1", "v1", [3])], REPORTS, SUMMARIES)
    attach_generated(
        records,
        [
            {"video_id": "v1", "frame_index": 3, "model_id": "mA",
             "text_en": "Generated EN.", "text_jp": "生成文。"},
            {"video_id": "zzz", "frame_index": 0, "model_id": "mA",
             "text_en": "ignored"},
        ],
    )
    assert records[0].generated == {
        "mA": {"text_en": "Generated EN.", "text_jp": "生成文。"}
    }


def test_corpus_jsonl_round_trip(tmp_path):
    records = build_corpus(
        [cand("e1", "v1", [3, 9])], REPORTS, SUMMARIES,
        labels={("v1", 3): "LCA_better", ("v1", 9): "RCA_bad"},
    )
    path = tmp_path / "corpus.jsonl"
    write_corpus_jsonl(records, path)
    again = read_corpus_jsonl(path)
    assert [r.to_json_obj() for r in again] == [r.to_json_obj() for r in records]
    # UTF-8 Japanese survives verbatim
    assert "狭窄あり。" in path.read_text(encoding="utf-8")


# --- prompts ---------------------------------------------------------------------

def make_record(laterality="LCA", **overrides):
    base = dict(
        exam_id="e1", video_id="v1", frame_index=0, laterality=laterality,
        report_jp="臨床レポート本文。", report_en="Clinical report body.",
        gt_summary_jp="要約。", gt_summary_en="Summary.",
    )
    base.update(overrides)
    return CorpusRecord(**base)


def test_english_prompt_left():
    prompt = build_prompt(make_record("LCA"), "en")
    assert prompt.startswith("This image is a left coronary angiogram.")
    assert "Clinical report body." in prompt


def test_english_prompt_right_differs_only_in_side_word():
    left = build_prompt(make_record("LCA"), "en")
    right = build_prompt(make_record("RCA"), "en")
    assert right.startswith("This image is a right coronary angiogram.")
    assert left.replace(" left ", " right ", 1) == right


def test_japanese_prompt():
    prompt = build_prompt(make_record("RCA"), "jp")
    assert prompt.startswith("この画像は右冠動脈造影像です。")
    assert "臨床レポート本文。" in prompt


def test_missing_language_raises():
    record = make_record("LCA", report_jp="")
    with pytest.raises(MissingLanguage):
        build_prompt(record, "jp")


def test_prompt_is_byte_stable_per_version():
    a = build_prompt(make_record("LCA"), "en", template_version="v1")
    b = build_prompt(make_record("LCA"), "en", template_version="v1")
    assert a == b


# --- splits ----------------------------------------------------------------------

def rec(exam, video, frame):
    return CorpusRecord(exam_id=exam, video_id=video, frame_index=frame)


def test_ten_singleton_groups_split_8_1_1():
    records = [rec(f"e{i}", f"v{i}", 0) for i in range(10)]
    manifest = split_by_group(records, "video", (0.8, 0.1, 0.1), seed=7)
    sizes = {s: sum(1 for v in manifest.assignment.values() if v == s)
             for s in ("train", "val", "test")}
    assert sizes == {"train": 8, "val": 1, "test": 1}


def test_single_group_goes_to_train(caplog):
    records = [rec("e1", "v1", i) for i in range(5)]
    with caplog.at_level("WARNING"):
        manifest = split_by_group(records, "video", seed=3)
    assert manifest.assignment == {"v1": "train"}
    assert any("no records" in m for m in caplog.messages)


def test_same_video_always_coassigned():
    records = [rec("e1", "v1", 0), rec("e1", "v1", 1), rec("e2", "v2", 0)]
    for seed in range(30):
        manifest = split_by_group(records, "video", seed=seed)
        report = validate_split(manifest, records)
        assert sum(r["images"] for r in report.rows.values()) == 3


def test_exam_granularity_keeps_exams_whole():
    records = [rec("e1", "v1", 0), rec("e1", "v2", 0), rec("e2", "v3", 0)]
    manifest = split_by_group(records, "exam", seed=11)
    assert manifest.assignment["e1"] in ("train", "val", "test")
    report = validate_split(manifest, records)
    assert report.rows["train"]["images"] + report.rows["val"]["images"] + \
        report.rows["test"]["images"] == 3


def test_seed_determinism_byte_identical():
    records = [rec(f"e{i % 4}", f"v{i}", j) for i in range(12) for j in range(3)]
    a = split_by_group(records, "video", (0.7, 0.2, 0.1), seed=42).to_json()
    b = split_by_group(records, "video", (0.7, 0.2, 0.1), seed=42).to_json()
    assert a == b
    c = split_by_group(records, "video", (0.7, 0.2, 0.1), seed=43).to_json()
    # different seed may differ; both must validate clean either way
    assert json.loads(c)["granularity"] == "video"


def test_no_records_raises():
    with pytest.raises(NoRecords):
        split_by_group([], "video")
    with pytest.raises(NoRecords):
        validate_split(SplitManifest("video", {}, {}), [])


def test_bad_ratios_rejected():
    records = [rec("e", "v", 0)]
    with pytest.raises(ValueError):
        split_by_group(records, "video", (0.5, 0.4, 0.2))
    with pytest.raises(ValueError):
        split_by_group(records, "video", (1.0, 0.0, 0.0))


def test_hand_built_leaky_manifest_detected():
    # granularity says exam, but the assignment is keyed per video and
    # places two videos of one exam in different splits
    records = [rec("e1", "v1", 0), rec("e1", "v2", 0)]
    manifest = SplitManifest(
        granularity="exam",
        assignment={"v1": "train", "v2": "test"},
        counts={},
    )
    with pytest.raises(LeakageDetected) as err:
        validate_split(manifest, records)
    assert err.value.group_id == "e1"
    assert err.value.splits == ["test", "train"]


def test_report_has_three_rows_and_three_columns():
    records = [rec(f"e{i}", f"v{i}", 0) for i in range(10)]
    manifest = split_by_group(records, "video", seed=1)
    report = validate_split(manifest, records)
    rows = report.table_rows()
    assert [row[0] for row in rows] == ["train", "val", "test"]
    assert all(len(row) == 4 for row in rows)  # split + cases/videos/images
    assert sum(row[3] for row in rows) == 10


@settings(max_examples=80, deadline=None)
@given(
    shape=st.lists(
        st.tuples(st.integers(0, 5), st.integers(1, 4), st.integers(1, 3)),
        min_size=1, max_size=25,
    ),
    seed=st.integers(0, 2**31),
    granularity=st.sampled_from(["video", "exam"]),
)
def test_split_leakage_property(shape, seed, granularity):
    records = []
    for vid, (exam_slot, n_frames, _w) in enumerate(shape):
        for frame in range(n_frames):
            records.append(rec(f"e{exam_slot}", f"v{vid}", frame))
    manifest = split_by_group(records, granularity, seed=seed)
    report = validate_split(manifest, records)  # raises on leakage
    assert sum(r["images"] for r in report.rows.values()) == len(records)
    # every record in exactly one split, counts conserved per column
    all_videos = {r.video_id for r in records}
    assert sum(r["videos"] for r in report.rows.values()) == len(all_videos)


# --- table loaders -----------------------------------------------------------------

def test_load_report_table_csv(tmp_path):
    path = tmp_path / "reports.csv"
    path.write_text(
        "exam_id,report_jp,report_en\n"
        "e1,レポート1,Report one\n"
        "e2,レポート2,Report two\n",
        encoding="utf-8",
    )
    table = load_report_table(path)
    assert table["e1"]["report_jp"] == "レポート1"
    assert table["e2"]["report_en"] == "Report two"


def test_load_summary_table_jsonl_with_and_without_video(tmp_path):
    path = tmp_path / "summaries.jsonl"
    rows = [
        {"exam_id": "e1", "video_id": "v1", "gt_summary_jp": "あ", "gt_summary_en": "A"},
        {"exam_id": "e2", "gt_summary_jp": "い", "gt_summary_en": "B"},
    ]
    path.write_text("\n".join(json.dumps(r, ensure_ascii=False) for r in rows),
                    encoding="utf-8")
    table = load_summary_table(path)
    assert table[("e1", "v1")]["gt_summary_en"] == "A"
    assert table["e2"]["gt_summary_jp"] == "い"
