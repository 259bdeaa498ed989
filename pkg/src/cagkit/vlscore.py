"""Triangle-area distance and VLScore over (image, ground-truth, generated)
embedding triples, plus corpus-level evaluation across embedding backbones.

The distance T is half the parallelogram area spanned by (i-g) and (i-r),
computed from the Gram determinant:

    T = 1/2 * sqrt(<i-g, i-g> * <i-r, i-r> - <i-g, i-r>^2)

and the score is max(1 - T/C, 0) where C is the maximum attainable area
(3*sqrt(3)/4 for unit-normalized embeddings: the equilateral triangle
inscribed in a great circle, side sqrt(3), in any dimension >= 2).

Known failure mode: T is zero whenever the generated-report embedding lies
on the line through the image and ground-truth embeddings, so collinear
but distant generations still score 1. This is inherent to the area
construction; consumers should treat identical scores with care.
"""

from __future__ import annotations

import json
import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cagkit import kernels
from cagkit.errors import (
    DimensionMismatch,
    MalformedRecord,
    MixedDimensions,
    NegativeRadicand,
    NonFiniteInput,
    NonPositiveConstant,
)
from cagkit.metrics import ScoreSummary, summarize

logger = logging.getLogger(__name__)

UNIT_SPHERE_MAX_AREA = 3 * math.sqrt(3) / 4

# Gram determinants of degenerate triples land a hair below zero in floats;
# anything lower than this signals genuinely pathological input.
RADICAND_FLOOR = -1e-12

# Below this fraction of a*b the fast-path radicand is cancellation noise;
# recompute it through Lagrange's identity (a sum of squares) instead.
RADICAND_GUARD = 1e-5

HISTOGRAM_BIN_WIDTH = 0.05

BINARY_MAGIC = b"EMT1"


@dataclass(frozen=True)
class EmbeddingTriple:
    case_id: str
    i_e: np.ndarray
    g_e: np.ndarray
    r_e: np.ndarray
    backbone_id: str = "default"
    model_id: str = "default"

    @property
    def dimension(self) -> int:
        return int(np.asarray(self.i_e).shape[0])


@dataclass(frozen=True)
class VLScoreResult:
    case_id: str
    T: float
    score: float
    C: float
    backbone_id: str = "default"
    model_id: str = "default"

    def to_json_obj(self) -> dict:
        return {
            "case_id": self.case_id,
            "T": self.T,
            "score": self.score,
            "C": self.C,
            "backbone_id": self.backbone_id,
            "model_id": self.model_id,
        }


def triangle_area(i_e, g_e, r_e) -> float:
    """Area of the triangle spanned by the three embeddings."""
    i_v, g_v, r_v = (_as_vector(v, name) for v, name in
                     ((i_e, "i_e"), (g_e, "g_e"), (r_e, "r_e")))
    d = i_v.shape[0]
    if g_v.shape[0] != d or r_v.shape[0] != d:
        raise DimensionMismatch(
            f"embedding dimensions differ: {d}, {g_v.shape[0]}, {r_v.shape[0]}"
        )
    if d < 2:
        raise DimensionMismatch(f"embedding dimension must be >= 2, got {d}")
    out = np.empty(3, dtype=np.float64)
    kernels.triangle_gram(i_v, g_v, r_v, 1, d, out[0:1], out[1:2], out[2:3])
    return _area(out[0], out[1], out[2], i_v, g_v, r_v)


def triangle_area_batch(i_m, g_m, r_m) -> np.ndarray:
    """Vector of areas for stacked (n, d) embedding matrices."""
    i_m = np.ascontiguousarray(i_m, dtype=np.float64)
    g_m = np.ascontiguousarray(g_m, dtype=np.float64)
    r_m = np.ascontiguousarray(r_m, dtype=np.float64)
    if not (i_m.shape == g_m.shape == r_m.shape) or i_m.ndim != 2:
        raise DimensionMismatch("batch inputs must share one (n, d) shape")
    n, d = i_m.shape
    if d < 2:
        raise DimensionMismatch(f"embedding dimension must be >= 2, got {d}")
    if not (np.isfinite(i_m).all() and np.isfinite(g_m).all() and np.isfinite(r_m).all()):
        raise NonFiniteInput("batch contains NaN or infinity")
    a = np.empty(n, dtype=np.float64)
    b = np.empty(n, dtype=np.float64)
    ab = np.empty(n, dtype=np.float64)
    kernels.triangle_gram(i_m.ravel(), g_m.ravel(), r_m.ravel(), n, d, a, b, ab)
    return np.array(
        [_area(a[k], b[k], ab[k], i_m[k], g_m[k], r_m[k]) for k in range(n)]
    )


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteInput(f"{name} contains NaN or infinity")
    return arr


def _area(a: float, b: float, ab: float, i_v, g_v, r_v) -> float:
    radicand = float(a) * float(b) - float(ab) * float(ab)
    if radicand < RADICAND_GUARD * float(a) * float(b):
        # thin triangle: the subtraction above cancels catastrophically, so
        # rebuild the Gram determinant as Lagrange's sum of squares
        radicand = _lagrange_radicand(np.subtract(i_v, g_v), np.subtract(i_v, r_v))
    if radicand < 0.0:
        if radicand < RADICAND_FLOOR:
            raise NegativeRadicand(
                f"Gram determinant {radicand} below tolerance {RADICAND_FLOOR}"
            )
        radicand = 0.0
    return 0.5 * math.sqrt(radicand)


def _lagrange_radicand(u: np.ndarray, v: np.ndarray) -> float:
    # <u,u><v,v> - <u,v>^2 == sum_{j<k} (u_j v_k - u_k v_j)^2, term by term
    cross = np.outer(u, v)
    cross -= cross.T
    return 0.5 * float(np.sum(cross * cross))


def max_area_constant(normalization="unit_sphere") -> float:
    """C for the score clamp: "unit_sphere" or a custom positive number."""
    if normalization == "unit_sphere":
        return UNIT_SPHERE_MAX_AREA
    try:
        value = float(normalization)
    except (TypeError, ValueError):
        raise NonPositiveConstant(
            f"normalization must be 'unit_sphere' or a positive number, "
            f"got {normalization!r}"
        ) from None
    if not value > 0:
        raise NonPositiveConstant(f"max-area constant must be > 0, got {value}")
    return value


def vlscore(triple: EmbeddingTriple, C: float = UNIT_SPHERE_MAX_AREA) -> VLScoreResult:
    """score = max(1 - T/C, 0)."""
    if not C > 0:
        raise NonPositiveConstant(f"C must be > 0, got {C}")
    T = triangle_area(triple.i_e, triple.g_e, triple.r_e)
    score = max(1.0 - T / C, 0.0)
    return VLScoreResult(
        case_id=triple.case_id,
        T=T,
        score=score,
        C=C,
        backbone_id=triple.backbone_id,
        model_id=triple.model_id,
    )


@dataclass
class CorpusEvaluation:
    results: list = field(default_factory=list)
    summaries: dict = field(default_factory=dict)  # (model_id, backbone_id) -> ScoreSummary
    histograms: dict = field(default_factory=dict)  # (model_id, backbone_id) -> [(lo, hi, n)]

    def summary_json_obj(self) -> dict:
        grid: dict = {}
        for (model_id, backbone_id), summary in sorted(self.summaries.items()):
            grid.setdefault(model_id, {})[backbone_id] = summary.to_json_obj()
        return grid


def evaluate_corpus(triples, C=None) -> CorpusEvaluation:
    """Score every triple and aggregate per (model, backbone) group.

    C may be a single number, a {backbone_id: C} map, or None for the
    unit-sphere constant everywhere. Backbones named in the map but absent
    from the corpus are skipped with a warning.
    """
    triples = list(triples)
    groups: dict = {}
    for t in triples:
        groups.setdefault((t.model_id, t.backbone_id), []).append(t)

    if isinstance(C, dict):
        present = {backbone for _, backbone in groups}
        for backbone in sorted(set(C) - present):
            logger.warning("backbone %r has a C constant but no triples; skipped", backbone)

    evaluation = CorpusEvaluation()
    for key in sorted(groups):
        model_id, backbone_id = key
        members = sorted(groups[key], key=lambda t: t.case_id)
        dims = {m.dimension for m in members}
        if len(dims) > 1:
            raise MixedDimensions(
                f"backbone {backbone_id!r} mixes dimensions {sorted(dims)}"
            )
        group_c = _resolve_c(C, backbone_id)
        scores = []
        for m in members:
            result = vlscore(m, group_c)
            evaluation.results.append(result)
            scores.append(result.score)
        evaluation.summaries[key] = summarize(scores)
        evaluation.histograms[key] = score_histogram(scores)
    return evaluation


def _resolve_c(C, backbone_id: str) -> float:
    if C is None:
        return UNIT_SPHERE_MAX_AREA
    if isinstance(C, dict):
        value = C.get(backbone_id)
        return UNIT_SPHERE_MAX_AREA if value is None else max_area_constant(value)
    return max_area_constant(C)


def score_histogram(scores) -> list:
    """Fixed 0.05-wide bins over [0, 1]; a score of exactly 1 lands in the
    last bin."""
    n_bins = round(1.0 / HISTOGRAM_BIN_WIDTH)
    edges = np.arange(n_bins + 1) / n_bins  # k/n is correctly rounded, k*width is not
    counts, _ = np.histogram(np.asarray(list(scores), dtype=np.float64), bins=edges)
    return [
        (float(edges[k]), float(edges[k + 1]), int(counts[k]))
        for k in range(len(counts))
    ]


# --- embedding IO -----------------------------------------------------------

def load_embeddings(
    path,
    format: str = "auto",
    *,
    normalize: bool = False,
    expect_unit_norm: bool = False,
    model_id: str = "default",
    backbone_id: str = "default",
) -> list[EmbeddingTriple]:
    """Read triples from JSONL or the binary pack format.

    normalize: L2-normalize each vector on load.
    expect_unit_norm: reject vectors whose norm strays beyond 1e-6 from 1.
    """
    path = Path(path)
    if format == "auto":
        with path.open("rb") as fh:
            format = "binary" if fh.read(4) == BINARY_MAGIC else "jsonl"
    if format == "jsonl":
        triples = _load_jsonl(path, model_id, backbone_id)
    elif format == "binary":
        triples = _load_binary(path, model_id, backbone_id)
    else:
        raise ValueError(f"unknown embeddings format {format!r}")

    out = []
    for line_no, triple in triples:
        vectors = []
        for name in ("i_e", "g_e", "r_e"):
            v = getattr(triple, name)
            if normalize:
                norm = float(np.linalg.norm(v))
                if norm == 0.0:
                    raise MalformedRecord(line_no, f"{name} is the zero vector")
                v = v / norm
            elif expect_unit_norm:
                norm = float(np.linalg.norm(v))
                if abs(norm - 1.0) > 1e-6:
                    raise MalformedRecord(
                        line_no, f"{name} norm {norm} is not 1 within 1e-6"
                    )
            vectors.append(v)
        out.append(
            EmbeddingTriple(
                case_id=triple.case_id,
                i_e=vectors[0],
                g_e=vectors[1],
                r_e=vectors[2],
                backbone_id=triple.backbone_id,
                model_id=triple.model_id,
            )
        )
    return out


def _load_jsonl(path: Path, model_id: str, backbone_id: str):
    triples = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc}") from None
            for key in ("case_id", "i_e", "g_e", "r_e"):
                if key not in obj:
                    raise MalformedRecord(line_no, f"missing field {key!r}")
            vecs = {}
            for key in ("i_e", "g_e", "r_e"):
                try:
                    vecs[key] = np.asarray(obj[key], dtype=np.float64)
                except (TypeError, ValueError):
                    raise MalformedRecord(line_no, f"{key} is not numeric") from None
                if vecs[key].ndim != 1:
                    raise MalformedRecord(line_no, f"{key} is not a flat vector")
                if not np.isfinite(vecs[key]).all():
                    raise NonFiniteInput(f"line {line_no}: {key} contains NaN/inf")
            dims = {v.shape[0] for v in vecs.values()}
            if len(dims) != 1:
                raise DimensionMismatch(
                    f"line {line_no}: vector dimensions differ {sorted(dims)}"
                )
            if dims.pop() < 2:
                raise DimensionMismatch(f"line {line_no}: dimension must be >= 2")
            triples.append(
                (
                    line_no,
                    EmbeddingTriple(
                        case_id=str(obj["case_id"]),
                        i_e=vecs["i_e"],
                        g_e=vecs["g_e"],
                        r_e=vecs["r_e"],
                        backbone_id=str(obj.get("backbone_id", backbone_id)),
                        model_id=str(obj.get("model_id", model_id)),
                    ),
                )
            )
    return triples


def _load_binary(path: Path, model_id: str, backbone_id: str):
    """Pack layout: magic 'EMT1', uint32 d, uint32 count (little-endian),
    then count records of 3*d float32 little-endian (i_e, g_e, r_e)."""
    data = path.read_bytes()
    if data[:4] != BINARY_MAGIC:
        raise MalformedRecord(0, f"bad magic {data[:4]!r}, expected {BINARY_MAGIC!r}")
    if len(data) < 12:
        raise MalformedRecord(0, "truncated header")
    d, count = struct.unpack_from("<II", data, 4)
    if d < 2:
        raise DimensionMismatch(f"header dimension must be >= 2, got {d}")
    record_bytes = 3 * d * 4
    expected = 12 + count * record_bytes
    if len(data) < expected:
        raise MalformedRecord(0, f"file holds {len(data)} bytes, need {expected}")
    triples = []
    for k in range(count):
        offset = 12 + k * record_bytes
        flat = np.frombuffer(data, dtype="<f4", count=3 * d, offset=offset).astype(
            np.float64
        )
        if not np.isfinite(flat).all():
            raise NonFiniteInput(f"record {k}: contains NaN/inf")
        triples.append(
            (
                k,
                EmbeddingTriple(
                    case_id=f"case_{k:06d}",
                    i_e=flat[:d],
                    g_e=flat[d:2 * d],
                    r_e=flat[2 * d:],
                    backbone_id=backbone_id,
                    model_id=model_id,
                ),
            )
        )
    return triples
