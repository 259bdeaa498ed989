"""Six-class laterality/key-frame gating over a pluggable predictor.

The class taxonomy is fixed and ordered; argmax ties break toward the
earlier class so runs are reproducible. Predictors are adapters that
consume a [0,1]-normalized grayscale frame (resized to a target size,
default 224x224 bilinear) and emit a 6-way probability vector. Two
built-ins: a lookup stub fed from a sidecar truth file, and an
external-process adapter speaking line-delimited JSON over stdin/stdout.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cagkit.errors import EmptyInput, MalformedPrediction, PredictorUnavailable
from cagkit.ingest.model import Frame

CLASSES = (
    "LCA_better",
    "LCA_bad",
    "LCA_other",
    "RCA_better",
    "RCA_bad",
    "RCA_other",
)

LATERALITIES = ("LCA", "RCA")
QUALITIES = ("better", "bad", "other")

# Adapter probability vectors may carry float-transport noise up to this
# drift from sum 1; beyond it the prediction is rejected as malformed.
PROB_SUM_TOLERANCE = 1e-6

DEFAULT_TARGET_SIZE = (224, 224)


def laterality(label: str) -> str:
    """LCA_bad -> LCA; total over the six classes."""
    _check_label(label)
    return label.split("_", 1)[0]


def quality(label: str) -> str:
    _check_label(label)
    return label.split("_", 1)[1]


def collapse_laterality(label: str) -> str:
    return laterality(label)


def collapse_keyframe3(label: str) -> str:
    """Three-class view: the two `better` labels survive, all else -> others."""
    _check_label(label)
    return label if quality(label) == "better" else "others"


def _check_label(label: str) -> None:
    if label not in CLASSES:
        raise ValueError(f"unknown six-class label {label!r}")


@dataclass(frozen=True)
class FramePrediction:
    video_id: str
    frame_index: int
    probs: tuple
    label: str
    confidence: float
    renormalized: bool = False

    def to_json_obj(self) -> dict:
        return {
            "video_id": self.video_id,
            "frame_index": self.frame_index,
            "probs": list(self.probs),
            "label": self.label,
            "confidence": self.confidence,
            "renormalized": self.renormalized,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "FramePrediction":
        return cls(
            video_id=obj["video_id"],
            frame_index=obj["frame_index"],
            probs=tuple(obj["probs"]),
            label=obj["label"],
            confidence=obj["confidence"],
            renormalized=obj.get("renormalized", False),
        )


def prediction_from_probs(video_id: str, frame_index: int, probs) -> FramePrediction:
    """Validate a raw probability vector and derive label/confidence.

    Vectors drifting from sum 1 by at most 1e-6 are renormalized and
    flagged; wrong arity, NaN, or negative entries raise
    MalformedPrediction.
    """
    try:
        values = [float(p) for p in probs]
    except (TypeError, ValueError):
        raise MalformedPrediction(f"probs not numeric: {probs!r}") from None
    if len(values) != len(CLASSES):
        raise MalformedPrediction(
            f"expected {len(CLASSES)} probabilities, got {len(values)}"
        )
    if any(not np.isfinite(v) for v in values):
        raise MalformedPrediction(f"non-finite probability in {values}")
    if any(v < 0 for v in values):
        raise MalformedPrediction(f"negative probability in {values}")
    total = sum(values)
    renormalized = False
    if total != 1.0:
        if abs(total - 1.0) > PROB_SUM_TOLERANCE:
            raise MalformedPrediction(f"probabilities sum to {total}, not 1")
        values = [v / total for v in values]
        renormalized = True
    best = max(range(len(values)), key=lambda k: (values[k], -k))
    return FramePrediction(
        video_id=video_id,
        frame_index=frame_index,
        probs=tuple(values),
        label=CLASSES[best],
        confidence=values[best],
        renormalized=renormalized,
    )


# --- adapters ----------------------------------------------------------------

class PredictorAdapter:
    """Contract: consume one [0,1] grayscale frame, emit six probabilities."""

    def predict_probs(self, video_id: str, frame_index: int, image: np.ndarray):
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class LookupStubAdapter(PredictorAdapter):
    """Sidecar-truth predictor for tests and pipeline dry runs.

    The truth file is line-delimited JSON; each line carries video_id,
    frame_index, and either probs or label (labels become one-hot vectors).
    """

    def __init__(self, truth=None, mapping=None):
        self._table: dict = dict(mapping) if mapping else {}
        if truth is not None:
            for line_no, line in enumerate(
                Path(truth).read_text(encoding="utf-8").splitlines(), start=1
            ):
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                key = (str(obj["video_id"]), int(obj["frame_index"]))
                if "probs" in obj:
                    self._table[key] = list(obj["probs"])
                elif "label" in obj:
                    self._table[key] = one_hot(obj["label"])
                else:
                    raise MalformedPrediction(
                        f"truth line {line_no} has neither probs nor label"
                    )

    def predict_probs(self, video_id, frame_index, image):
        key = (str(video_id), int(frame_index))
        if key not in self._table:
            raise PredictorUnavailable(f"no truth entry for {key}")
        return self._table[key]


class ExternalProcessAdapter(PredictorAdapter):
    """Line-JSON request/response with a model process over stdin/stdout.

    Exactly one request is in flight at a time; responses must echo the
    request's video_id/frame_index.
    """

    def __init__(self, command, include_pixels: bool = True):
        self.command = list(command)
        self.include_pixels = include_pixels
        self._proc: subprocess.Popen | None = None

    def _ensure_started(self):
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as exc:
                raise PredictorUnavailable(
                    f"could not start predictor {self.command}: {exc}"
                ) from exc
        return self._proc

    def predict_probs(self, video_id, frame_index, image):
        proc = self._ensure_started()
        request = {"video_id": str(video_id), "frame_index": int(frame_index)}
        if self.include_pixels:
            arr = np.asarray(image, dtype=np.float64)
            request["height"], request["width"] = arr.shape
            request["pixels"] = [round(float(v), 9) for v in arr.ravel()]
        try:
            proc.stdin.write(json.dumps(request) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise PredictorUnavailable(f"predictor process died: {exc}") from exc
        if not line:
            raise PredictorUnavailable("predictor process closed its stdout")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedPrediction(f"response is not JSON: {line!r}") from exc
        if (
            str(response.get("video_id")) != str(video_id)
            or int(response.get("frame_index", -1)) != int(frame_index)
        ):
            raise MalformedPrediction(
                f"response ids {response.get('video_id')}/{response.get('frame_index')} "
                f"do not echo request {video_id}/{frame_index}"
            )
        if "probs" not in response:
            raise MalformedPrediction("response missing probs")
        return response["probs"]

    def close(self):
        if self._proc is not None:
            if self._proc.stdin:
                try:
                    self._proc.stdin.close()
                except OSError:
                    pass
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
            self._proc = None


def one_hot(label: str) -> list[float]:
    _check_label(label)
    return [1.0 if c == label else 0.0 for c in CLASSES]


# --- inference ----------------------------------------------------------------

def predict(
    frame: Frame,
    predictor: PredictorAdapter,
    *,
    video_id: str,
    bits_per_sample: int = 8,
    target_size=DEFAULT_TARGET_SIZE,
) -> FramePrediction:
    """Run one frame through an adapter and validate the result."""
    image = normalize_frame(frame.pixels, bits_per_sample)
    if target_size is not None and image.shape != tuple(target_size):
        image = resize_bilinear(image, target_size[0], target_size[1])
    probs = predictor.predict_probs(video_id, frame.index, image)
    return prediction_from_probs(video_id, frame.index, probs)


def predict_frames(seq, indices, predictor, target_size=DEFAULT_TARGET_SIZE):
    """Predictions for the chosen frame indices of one cine, in index order."""
    out = []
    for idx in sorted(indices):
        out.append(
            predict(
                seq.frames[idx],
                predictor,
                video_id=seq.video_id,
                bits_per_sample=seq.bits_per_sample,
                target_size=target_size,
            )
        )
    return out


def normalize_frame(pixels: np.ndarray, bits_per_sample: int) -> np.ndarray:
    return np.asarray(pixels, dtype=np.float64) / float(2 ** bits_per_sample - 1)


def resize_bilinear(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Plain bilinear resample with half-pixel centers."""
    img = np.asarray(image, dtype=np.float64)
    in_h, in_w = img.shape
    if (in_h, in_w) == (out_h, out_w):
        return img.copy()
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    y0 = np.clip(np.floor(ys), 0, in_h - 1).astype(int)
    x0 = np.clip(np.floor(xs), 0, in_w - 1).astype(int)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    top = img[np.ix_(y0, x0)] * (1 - wx) + img[np.ix_(y0, x1)] * wx
    bottom = img[np.ix_(y1, x0)] * (1 - wx) + img[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bottom * wy


# --- selection -----------------------------------------------------------------

def select_top_confidence(preds, policy: str, *, k: int | None = None,
                          threshold: float | None = None):
    """Pick key frames from scored predictions.

    policy "top_k": the k globally highest-confidence predictions.
    policy "per_video_best": the highest-confidence `better`-class frame
    per (video, laterality).
    policy "threshold": every prediction with confidence >= threshold.
    Output ordering: confidence descending, then video_id, then frame_index.
    """
    preds = list(preds)
    order_key = lambda p: (-p.confidence, p.video_id, p.frame_index)

    if policy == "top_k":
        if not preds:
            raise EmptyInput("top_k selection over an empty prediction list")
        if k is None or not 0 <= k <= len(preds):
            raise ValueError(f"top_k needs 0 <= k <= {len(preds)}, got {k}")
        return sorted(preds, key=order_key)[:k]

    if policy == "per_video_best":
        best: dict = {}
        for p in preds:
            if quality(p.label) != "better":
                continue
            key = (p.video_id, laterality(p.label))
            if key not in best or order_key(p) < order_key(best[key]):
                best[key] = p
        return sorted(best.values(), key=order_key)

    if policy == "threshold":
        if threshold is None:
            raise ValueError("threshold policy needs a threshold")
        return sorted((p for p in preds if p.confidence >= threshold), key=order_key)

    raise ValueError(f"unknown selection policy {policy!r}")
