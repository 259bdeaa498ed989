"""Pipeline CLI: composable subcommands over one declarative config.

    cagkit --config pipeline.json ingest
    cagkit --config pipeline.json sample
    cagkit --config pipeline.json classify
    cagkit --config pipeline.json split
    cagkit --config pipeline.json corpus
    cagkit --config pipeline.json vlscore
    cagkit --config pipeline.json report
    cagkit --config pipeline.json serve

Every stage reads/writes line-delimited JSON manifests in the workdir, so
each step is independently inspectable and reruns are byte-identical on
unchanged inputs. Exit codes: 0 ok, 1 pipeline error, 2 config/usage error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
from pathlib import Path

from cagkit import classify, dataset, vlscore
from cagkit.config import PipelineConfig, load_config
from cagkit.errors import CagkitError, ConfigError
from cagkit.ingest import load_cine
from cagkit.ingest.codecs import encode_png
from cagkit.review.store import export_review_table, render_review_table
from cagkit.sampler import CandidateSet, SamplerConfig, sample_keyframe_candidates
from cagkit.tables import render_table

CINES_MANIFEST = "cines.jsonl"
CANDIDATES_MANIFEST = "candidates.jsonl"
PREDICTIONS_MANIFEST = "predictions.jsonl"
SELECTED_MANIFEST = "selected.jsonl"
SPLIT_MANIFEST = "split.json"
SPLIT_REPORT_JSON = "split_report.json"
SPLIT_REPORT_TXT = "split_report.txt"
CORPUS_MANIFEST = "corpus.jsonl"
VLSCORE_RESULTS = "vlscore_results.jsonl"
VLSCORE_SUMMARY_JSON = "vlscore_summary.json"
VLSCORE_SUMMARY_TXT = "vlscore_summary.txt"
VLSCORE_HISTOGRAM_CSV = "vlscore_histogram.csv"
REPORT_JSON = "report.json"
REPORT_TXT = "report.txt"


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if args.config else PipelineConfig()
        if args.workdir:
            config.workdir = Path(args.workdir)
        if args.seed is not None:
            config.seed = args.seed
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError(f"--workers must be >= 1, got {args.workers}")
            config.workers = args.workers
    except ConfigError as exc:
        _diagnose(exc)
        return 2
    try:
        return args.func(config, args)
    except ConfigError as exc:
        _diagnose(exc)
        return 2
    except (CagkitError, ValueError, OSError) as exc:
        _diagnose(exc)
        return 1


def _diagnose(exc: Exception) -> None:
    print(
        json.dumps({"error": type(exc).__name__, "message": str(exc)},
                   ensure_ascii=False),
        file=sys.stderr,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cagkit", description="cine key-frame and report-evaluation pipeline"
    )
    parser.add_argument("--config", help="pipeline config file (JSON)")
    parser.add_argument("--workdir", help="override the artifact directory")
    parser.add_argument("--seed", type=int, default=None, help="override the split seed")
    parser.add_argument("--workers", type=int, default=None,
                        help="parallel videos in sample/classify")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", help="scan inputs and write the cine manifest") \
        .set_defaults(func=cmd_ingest)
    sub.add_parser("sample", help="extrema-based key-frame candidates") \
        .set_defaults(func=cmd_sample)
    sub.add_parser("classify", help="six-class gating + key-frame selection") \
        .set_defaults(func=cmd_classify)
    sub.add_parser("split", help="leakage-safe train/val/test assignment") \
        .set_defaults(func=cmd_split)
    sub.add_parser("corpus", help="build the bilingual corpus + frame images") \
        .set_defaults(func=cmd_corpus)
    sub.add_parser("vlscore", help="score embedding triples per backbone") \
        .set_defaults(func=cmd_vlscore)
    sub.add_parser("report", help="render the split/score/review tables") \
        .set_defaults(func=cmd_report)
    serve_parser = sub.add_parser("serve", help="run the physician review service")
    serve_parser.add_argument("--port", type=int, default=None)
    serve_parser.set_defaults(func=cmd_serve)
    return parser


# --- manifest helpers ---------------------------------------------------------

def _write_jsonl(path: Path, objs) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8") as fh:
        for obj in objs:
            fh.write(json.dumps(obj, sort_keys=True, ensure_ascii=False) + "\n")
            n += 1
    return n


def _read_jsonl(path: Path) -> list:
    if not path.exists():
        raise ConfigError(f"missing pipeline artifact {path} (run the earlier stages)")
    out = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def _parallel_map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- subcommands ----------------------------------------------------------------

def cmd_ingest(config: PipelineConfig, args) -> int:
    if not config.inputs:
        raise ConfigError("no inputs configured")
    cine_paths = _scan_inputs(config.inputs)
    rows = []
    for path, format_hint in cine_paths:
        seq = load_cine(path, format_hint)
        rows.append(
            {
                "exam_id": seq.exam_id,
                "video_id": seq.video_id,
                "path": str(path),
                "format": format_hint,
                "frames": len(seq.frames),
                "width": seq.width,
                "height": seq.height,
                "bits_per_sample": seq.bits_per_sample,
            }
        )
    n = _write_jsonl(config.artifact(CINES_MANIFEST), rows)
    print(f"ingest: {n} cines -> {config.artifact(CINES_MANIFEST)}")
    return 0


def _scan_inputs(inputs) -> list:
    found = []
    for entry in inputs:
        p = Path(entry)
        if p.is_dir() and (p / "index.txt").exists():
            found.append((p, "imagedir"))
        elif p.is_dir():
            for sub in sorted(p.rglob("*")):
                if sub.is_dir() and (sub / "index.txt").exists():
                    found.append((sub, "imagedir"))
                elif sub.is_file() and sub.suffix.lower() == ".dcm":
                    found.append((sub, "dicom"))
        else:
            found.append((p, "dicom"))
    return found


def cmd_sample(config: PipelineConfig, args) -> int:
    cines = _read_jsonl(config.artifact(CINES_MANIFEST))
    sampler_config = SamplerConfig(
        window_radius=config.window_radius, min_gap=config.min_gap
    )

    def one(row):
        seq = load_cine(row["path"], row["format"])
        return sample_keyframe_candidates(seq, sampler_config).to_json_obj()

    rows = _parallel_map(one, cines, config.workers)
    n = _write_jsonl(config.artifact(CANDIDATES_MANIFEST), rows)
    print(f"sample: {n} candidate sets -> {config.artifact(CANDIDATES_MANIFEST)}")
    return 0


def _make_adapter(config: PipelineConfig) -> classify.PredictorAdapter:
    predictor = config.predictor
    if not predictor:
        raise ConfigError("no predictor configured")
    if predictor["kind"] == "stub":
        return classify.LookupStubAdapter(truth=predictor["truth"])
    return classify.ExternalProcessAdapter(
        predictor["command"], include_pixels=predictor.get("include_pixels", True)
    )


def cmd_classify(config: PipelineConfig, args) -> int:
    cines = {row["video_id"]: row for row in _read_jsonl(config.artifact(CINES_MANIFEST))}
    candidate_sets = [
        CandidateSet.from_json_obj(obj)
        for obj in _read_jsonl(config.artifact(CANDIDATES_MANIFEST))
    ]
    adapter = _make_adapter(config)

    def one(cand: CandidateSet):
        row = cines.get(cand.video_id)
        if row is None:
            raise ConfigError(f"candidate video {cand.video_id!r} missing from cine manifest")
        seq = load_cine(row["path"], row["format"])
        return [
            p.to_json_obj()
            for p in classify.predict_frames(seq, cand.selected, adapter)
        ]

    # an external-process adapter is one serialized conversation: keep order
    workers = 1 if config.predictor.get("kind") == "process" else config.workers
    with adapter:
        per_video = _parallel_map(one, candidate_sets, workers)
    predictions = [p for chunk in per_video for p in chunk]
    _write_jsonl(config.artifact(PREDICTIONS_MANIFEST), predictions)

    exam_by_video = {c.video_id: c.exam_id for c in candidate_sets}
    preds = [classify.FramePrediction.from_json_obj(p) for p in predictions]
    selection = config.selection
    selected = classify.select_top_confidence(
        preds,
        selection["policy"],
        k=selection.get("k"),
        threshold=selection.get("threshold"),
    )
    rows = [
        {**p.to_json_obj(), "exam_id": exam_by_video[p.video_id]} for p in selected
    ]
    n = _write_jsonl(config.artifact(SELECTED_MANIFEST), rows)
    print(
        f"classify: {len(predictions)} predictions, {n} selected -> "
        f"{config.artifact(SELECTED_MANIFEST)}"
    )
    return 0


def cmd_split(config: PipelineConfig, args) -> int:
    rows = _read_jsonl(config.artifact(SELECTED_MANIFEST))
    manifest = dataset.split_by_group(
        rows, granularity=config.granularity, ratios=config.ratios, seed=config.seed
    )
    report = dataset.validate_split(manifest, rows)
    _write_json(config.artifact(SPLIT_MANIFEST), manifest.to_json_obj())
    _write_json(config.artifact(SPLIT_REPORT_JSON), report.to_json_obj())
    text = render_table(["Split", "Cases", "Videos", "Images"], report.table_rows())
    config.artifact(SPLIT_REPORT_TXT).write_text(text, encoding="utf-8")
    print(f"split: manifest -> {config.artifact(SPLIT_MANIFEST)}")
    return 0


def cmd_corpus(config: PipelineConfig, args) -> int:
    if not config.reports_path or not config.summaries_path:
        raise ConfigError("corpus stage needs corpus.reports and corpus.summaries")
    selected = _read_jsonl(config.artifact(SELECTED_MANIFEST))
    all_candidates = [
        CandidateSet.from_json_obj(obj)
        for obj in _read_jsonl(config.artifact(CANDIDATES_MANIFEST))
    ]
    selected_by_video: dict = {}
    labels: dict = {}
    for row in selected:
        selected_by_video.setdefault(row["video_id"], set()).add(row["frame_index"])
        labels[(row["video_id"], row["frame_index"])] = row["label"]

    kept = []
    for cand in all_candidates:
        chosen = sorted(selected_by_video.get(cand.video_id, ()))
        if chosen:
            kept.append(
                CandidateSet(
                    exam_id=cand.exam_id,
                    video_id=cand.video_id,
                    selected=chosen,
                    provenance={i: cand.provenance.get(i, []) for i in chosen},
                )
            )

    records = dataset.build_corpus(
        kept,
        dataset.load_report_table(config.reports_path),
        dataset.load_summary_table(config.summaries_path),
        labels=labels,
    )
    if config.generated_path:
        dataset.attach_generated(records, _read_jsonl(Path(config.generated_path)))

    cines = {row["video_id"]: row for row in _read_jsonl(config.artifact(CINES_MANIFEST))}
    for record in records:
        row = cines[record.video_id]
        seq = load_cine(row["path"], row["format"])
        out_path = config.artifact(record.image_ref)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_bytes(encode_png(seq.frames[record.frame_index].pixels))

    dataset.write_corpus_jsonl(records, config.artifact(CORPUS_MANIFEST))
    print(f"corpus: {len(records)} records -> {config.artifact(CORPUS_MANIFEST)}")
    return 0


def cmd_vlscore(config: PipelineConfig, args) -> int:
    if not config.embeddings:
        raise ConfigError("vlscore stage needs vlscore.embeddings sources")
    triples = []
    for entry in config.embeddings:
        triples.extend(
            vlscore.load_embeddings(
                entry["path"],
                entry["format"],
                normalize=config.normalize_embeddings,
                expect_unit_norm=config.expect_unit_norm,
                model_id=entry["model_id"],
                backbone_id=entry["backbone_id"],
            )
        )
    evaluation = vlscore.evaluate_corpus(triples, config.c_constants or None)
    _write_jsonl(
        config.artifact(VLSCORE_RESULTS),
        [r.to_json_obj() for r in evaluation.results],
    )
    _write_json(config.artifact(VLSCORE_SUMMARY_JSON), evaluation.summary_json_obj())
    config.artifact(VLSCORE_SUMMARY_TXT).write_text(
        _render_score_grid(evaluation.summary_json_obj()), encoding="utf-8"
    )
    hist_lines = ["model_id,backbone_id,bin_low,bin_high,count"]
    for (model_id, backbone_id), bins in sorted(evaluation.histograms.items()):
        for lo, hi, count in bins:
            hist_lines.append(f"{model_id},{backbone_id},{lo:.2f},{hi:.2f},{count}")
    config.artifact(VLSCORE_HISTOGRAM_CSV).write_text(
        "\n".join(hist_lines) + "\n", encoding="utf-8"
    )
    print(
        f"vlscore: {len(evaluation.results)} cases, "
        f"{len(evaluation.summaries)} groups -> {config.artifact(VLSCORE_SUMMARY_JSON)}"
    )
    return 0


def _render_score_grid(grid: dict) -> str:
    backbones = sorted({b for per_model in grid.values() for b in per_model})
    headers = ["Model"]
    for b in backbones:
        headers += [f"{b} Mean", f"{b} SD"]
    rows = []
    for model_id in sorted(grid):
        row = [model_id]
        for b in backbones:
            cell = grid[model_id].get(b)
            row += (
                [f"{cell['mean']:.4f}", f"{cell['std']:.4f}"] if cell else ["-", "-"]
            )
        rows.append(row)
    return render_table(headers, rows)


def cmd_report(config: PipelineConfig, args) -> int:
    sections_text = []
    report_obj: dict = {}

    split_report = config.artifact(SPLIT_REPORT_JSON)
    if split_report.exists():
        obj = json.loads(split_report.read_text(encoding="utf-8"))
        report_obj["split"] = obj
        rows = [
            [s, obj["rows"][s]["cases"], obj["rows"][s]["videos"], obj["rows"][s]["images"]]
            for s in ("train", "val", "test")
        ]
        sections_text.append(
            f"Split ({obj['granularity']}-level, non-overlapping)\n"
            + render_table(["Split", "Cases", "Videos", "Images"], rows)
        )

    summary = config.artifact(VLSCORE_SUMMARY_JSON)
    if summary.exists():
        grid = json.loads(summary.read_text(encoding="utf-8"))
        report_obj["vlscore"] = grid
        sections_text.append("VLScore by model and backbone\n" + _render_score_grid(grid))

    store_path = Path(config.service.get("store", config.artifact("store")))
    if (store_path / "events.jsonl").exists() or (store_path / "snapshot.json").exists():
        from cagkit.review.store import ReviewStore

        store = ReviewStore(store_path)
        try:
            table = export_review_table(store.reviews)
        finally:
            store.close()
        report_obj["review"] = table
        sections_text.append("Physician review\n" + render_review_table(table))

    if not report_obj:
        raise ConfigError("nothing to report: no split/vlscore/review artifacts found")
    _write_json(config.artifact(REPORT_JSON), report_obj)
    config.artifact(REPORT_TXT).write_text(
        "\n".join(sections_text), encoding="utf-8"
    )
    print(f"report: -> {config.artifact(REPORT_TXT)}")
    return 0


def cmd_serve(config: PipelineConfig, args) -> int:
    from cagkit.review.service import ServiceConfig, serve

    service_cfg = config.service
    store = service_cfg.get("store") or str(config.artifact("store"))
    corpus_path = service_cfg.get("corpus", "")
    if not corpus_path and config.artifact(CORPUS_MANIFEST).exists():
        corpus_path = str(config.artifact(CORPUS_MANIFEST))
    split_path = service_cfg.get("split_manifest", "")
    if not split_path and config.artifact(SPLIT_MANIFEST).exists():
        split_path = str(config.artifact(SPLIT_MANIFEST))
    port = args.port if args.port is not None else int(service_cfg.get("port", 0))
    service = serve(
        ServiceConfig(
            store_path=store,
            host=service_cfg.get("host", "127.0.0.1"),
            port=port,
            corpus_path=corpus_path,
            frame_root=service_cfg.get("frame_root", ""),
            split_manifest_path=split_path,
            tokens=service_cfg.get("tokens", {}),
        )
    )
    print(f"serving on http://{service.host}:{service.port}/v1", flush=True)
    try:
        while True:
            service._thread.join(timeout=3600)
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
