"""HTTP/JSON review service (stdlib http.server, versioned under /v1).

Endpoints:
  GET  /v1/health
  GET  /v1/cases?split=...           case summaries
  GET  /v1/cases/{id}                record + generated texts + latest reviews
  GET  /v1/cases/{id}/frame.png      frame rendered from the frame store
  POST /v1/annotations               AnnotationRecord body -> {revision}
  GET  /v1/annotations/conflicts
  POST /v1/reviews                   ReviewRecord body -> {revision}
  GET  /v1/exports/review-table?format=json|text

Auth is a static bearer token per reviewer from config; when no tokens are
configured the service runs open (callers supply reviewer ids themselves).
Errors return {code, field?, message}.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, unquote, urlparse

from cagkit.dataset import CorpusRecord, SplitManifest, read_corpus_jsonl
from cagkit.errors import BindFailure, CagkitError, UnknownCase, ValidationFailure
from cagkit.ingest import load_cine
from cagkit.ingest.codecs import encode_png
from cagkit.review.store import (
    ReviewStore,
    export_review_table,
    find_conflicts,
    render_review_table,
    validate_annotation,
    validate_review,
)

API_PREFIX = "/v1"


class FrameStore:
    """Serves frames as PNG, rendered on demand from <root>/<exam>/<video>
    cines (imagedir directories or .dcm files)."""

    def __init__(self, root):
        self.root = Path(root)

    @lru_cache(maxsize=32)
    def _sequence(self, exam_id: str, video_id: str):
        base = self.root / exam_id / video_id
        if base.is_dir():
            return load_cine(base, "imagedir")
        for candidate in (base.with_suffix(".dcm"), base):
            if candidate.is_file():
                return load_cine(candidate, "dicom")
        raise UnknownCase(f"{exam_id}:{video_id}")

    def render_png(self, exam_id: str, video_id: str, frame_index: int) -> bytes:
        seq = self._sequence(exam_id, video_id)
        if not 0 <= frame_index < len(seq.frames):
            raise UnknownCase(f"{exam_id}:{video_id}:{frame_index}")
        return encode_png(seq.frames[frame_index].pixels)


@dataclass
class ServiceConfig:
    store_path: str
    host: str = "127.0.0.1"
    port: int = 0
    corpus_path: str = ""
    frame_root: str = ""
    split_manifest_path: str = ""
    tokens: dict = field(default_factory=dict)  # token -> reviewer_id


class ReviewService:
    def __init__(self, store: ReviewStore, *, corpus=None, frame_store=None,
                 tokens=None, split_manifest=None, host="127.0.0.1", port=0):
        self.store = store
        self.corpus: dict[str, CorpusRecord] = {r.case_id: r for r in (corpus or [])}
        self.frames_known = {(r.video_id, r.frame_index) for r in self.corpus.values()}
        self.frame_store = frame_store
        self.tokens = dict(tokens or {})
        self.split_manifest = split_manifest
        self.host = host
        self.requested_port = port
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # -- lifecycle --

    def start(self) -> "ReviewService":
        handler = _make_handler(self)
        try:
            self._server = ThreadingHTTPServer((self.host, self.requested_port), handler)
        except OSError as exc:
            raise BindFailure(f"cannot bind {self.host}:{self.requested_port}: {exc}") from exc
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None
        self.store.close()

    @property
    def port(self) -> int:
        if self._server is None:
            raise RuntimeError("service not started")
        return self._server.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}{API_PREFIX}"

    # -- views --

    def split_of(self, record: CorpusRecord) -> str:
        if self.split_manifest is None:
            return ""
        key = (record.exam_id if self.split_manifest.granularity == "exam"
               else record.video_id)
        return self.split_manifest.assignment.get(key, "")

    def case_summaries(self, split: str = "") -> list[dict]:
        out = []
        for case_id in sorted(self.corpus):
            record = self.corpus[case_id]
            record_split = self.split_of(record)
            if split and record_split != split:
                continue
            out.append(
                {
                    "case_id": case_id,
                    "exam_id": record.exam_id,
                    "video_id": record.video_id,
                    "frame_index": record.frame_index,
                    "laterality": record.laterality,
                    "complete": record.complete,
                    "split": record_split,
                    "models": sorted(record.generated),
                }
            )
        return out

    def case_detail(self, case_id: str) -> dict:
        if case_id not in self.corpus:
            raise UnknownCase(case_id)
        record = self.corpus[case_id]
        annotations = [
            r.to_json_obj()
            for r in self.store.latest_annotations().values()
            if r.video_id == record.video_id and r.frame_index == record.frame_index
        ]
        reviews = [
            r.to_json_obj()
            for r in self.store.latest_reviews().values()
            if r.case_id == case_id
        ]
        return {
            "record": record.to_json_obj(),
            "case_id": case_id,
            "split": self.split_of(record),
            "frame_url": f"{API_PREFIX}/cases/{case_id}/frame.png",
            "annotations": sorted(annotations, key=lambda a: a["annotator_id"]),
            "reviews": sorted(reviews, key=lambda r: (r["reviewer_id"], r["model_id"])),
        }

    # -- writes --

    def submit_annotation(self, body: dict, reviewer: str) -> int:
        body = _bind_reviewer(body, "annotator_id", reviewer)
        record = validate_annotation(body)
        if self.frames_known and (record.video_id, record.frame_index) not in self.frames_known:
            raise UnknownCase(f"{record.video_id}:{record.frame_index}")
        return self.store.submit_annotation(record)

    def submit_review(self, body: dict, reviewer: str) -> int:
        body = _bind_reviewer(body, "reviewer_id", reviewer)
        record = validate_review(body)
        if self.corpus:
            if record.case_id not in self.corpus:
                raise UnknownCase(record.case_id)
            generated = self.corpus[record.case_id].generated
            if generated and record.model_id not in generated:
                raise ValidationFailure(
                    "model_id",
                    f"case has no generated text for model {record.model_id!r}",
                )
        return self.store.submit_review(record)


def _bind_reviewer(body: dict, field_name: str, reviewer: str) -> dict:
    if not reviewer:
        return body
    supplied = body.get(field_name)
    if supplied and supplied != reviewer:
        raise ValidationFailure(
            field_name, f"token identifies {reviewer!r}, body says {supplied!r}"
        )
    return {**body, field_name: reviewer}


def _make_handler(service: ReviewService):
    class Handler(BaseHTTPRequestHandler):
        server_version = "cagkit-review/0.1"
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):  # keep test output clean
            pass

        def do_GET(self):
            self._route("GET")

        def do_POST(self):
            self._route("POST")

        def _route(self, method: str) -> None:
            try:
                parsed = urlparse(self.path)
                segments = [unquote(s) for s in parsed.path.split("/") if s]
                query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
                if not segments or "/" + segments[0] != API_PREFIX:
                    return self._error(404, "NotFound", message="unknown path")
                segments = segments[1:]
                if segments == ["health"]:
                    return self._json(200, {"status": "ok"})
                reviewer = self._authenticate()
                self._dispatch(method, segments, query, reviewer)
            except _AuthError as exc:
                self._error(401, "Unauthorized", message=str(exc))
            except UnknownCase as exc:
                self._error(404, "UnknownCase", message=str(exc))
            except ValidationFailure as exc:
                self._error(400, "ValidationFailure", field=exc.field, message=str(exc))
            except CagkitError as exc:
                self._error(500, type(exc).__name__, message=str(exc))
            except BrokenPipeError:
                pass

        def _dispatch(self, method, segments, query, reviewer) -> None:
            if method == "GET" and segments == ["cases"]:
                return self._json(200, {"cases": service.case_summaries(query.get("split", ""))})
            if method == "GET" and len(segments) == 2 and segments[0] == "cases":
                return self._json(200, service.case_detail(segments[1]))
            if (method == "GET" and len(segments) == 3 and segments[0] == "cases"
                    and segments[2] == "frame.png"):
                return self._frame(segments[1])
            if method == "GET" and segments == ["annotations", "conflicts"]:
                return self._json(
                    200, {"conflicts": find_conflicts(service.store.annotations)}
                )
            if method == "GET" and segments == ["exports", "review-table"]:
                table = export_review_table(service.store.reviews)
                if query.get("format", "json") == "text":
                    return self._text(200, render_review_table(table))
                return self._json(200, table)
            if method == "POST" and segments == ["annotations"]:
                revision = service.submit_annotation(self._body(), reviewer)
                return self._json(201, {"revision": revision})
            if method == "POST" and segments == ["reviews"]:
                revision = service.submit_review(self._body(), reviewer)
                return self._json(201, {"revision": revision})
            self._error(404, "NotFound", message="unknown route")

        def _frame(self, case_id: str) -> None:
            if service.frame_store is None:
                return self._error(404, "UnknownCase", message="no frame store configured")
            if case_id not in service.corpus:
                raise UnknownCase(case_id)
            record = service.corpus[case_id]
            payload = service.frame_store.render_png(
                record.exam_id, record.video_id, record.frame_index
            )
            self.send_response(200)
            self.send_header("Content-Type", "image/png")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def _authenticate(self) -> str:
            if not service.tokens:
                return ""
            header = self.headers.get("Authorization", "")
            if header.startswith("Bearer "):
                token = header[len("Bearer "):].strip()
                if token in service.tokens:
                    return service.tokens[token]
            raise _AuthError("missing or unknown bearer token")

        def _body(self) -> dict:
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length) if length else b""
            try:
                obj = json.loads(raw.decode("utf-8")) if raw else {}
            except (json.JSONDecodeError, UnicodeDecodeError) as exc:
                raise ValidationFailure("body", f"invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise ValidationFailure("body", "expected a JSON object")
            return obj

        def _json(self, status: int, obj) -> None:
            payload = json.dumps(obj, sort_keys=True, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def _text(self, status: int, text: str) -> None:
            payload = text.encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "text/plain; charset=utf-8")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def _error(self, status: int, code: str, field: str | None = None,
                   message: str = "") -> None:
            obj = {"code": code, "message": message}
            if field:
                obj["field"] = field
            self._json(status, obj)

    return Handler


class _AuthError(Exception):
    pass


def serve(config: ServiceConfig) -> ReviewService:
    """Build a service from config and start it; caller stops it."""
    store = ReviewStore(config.store_path)
    corpus = read_corpus_jsonl(config.corpus_path) if config.corpus_path else []
    frame_store = FrameStore(config.frame_root) if config.frame_root else None
    split_manifest = None
    if config.split_manifest_path:
        split_manifest = SplitManifest.from_json_obj(
            json.loads(Path(config.split_manifest_path).read_text(encoding="utf-8"))
        )
    service = ReviewService(
        store,
        corpus=corpus,
        frame_store=frame_store,
        tokens=config.tokens,
        split_manifest=split_manifest,
        host=config.host,
        port=config.port,
    )
    return service.start()
