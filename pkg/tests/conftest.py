"""Shared fixtures: synthetic cines, imagedirs, and predictor scripts."""

from __future__ import annotations

import sys
import textwrap

import numpy as np
import pytest

from cagkit.ingest.codecs import encode_pgm, encode_png
from cagkit.ingest.model import sequence_from_arrays


def constant_frames(values, shape=(2, 2), dtype=np.uint8):
    """One constant frame per value; mean series == values, variance == 0."""
    return [np.full(shape, v, dtype=dtype) for v in values]


@pytest.fixture
def make_sequence():
    def build(values=(0, 1, 0, 2, 0), exam_id="exam1", video_id="vid1",
              shape=(2, 2), dtype=np.uint8):
        return sequence_from_arrays(exam_id, video_id,
                                    constant_frames(values, shape, dtype))
    return build


@pytest.fixture
def make_imagedir(tmp_path):
    """Write an imagedir cine under tmp_path/<exam>/<video>."""

    def build(arrays, exam_id="exam1", video_id="vid1", image_format="png",
              root=None):
        base = (root or tmp_path) / exam_id / video_id
        base.mkdir(parents=True, exist_ok=True)
        encode = encode_png if image_format == "png" else encode_pgm
        names = []
        for k, arr in enumerate(arrays):
            name = f"f{k:03d}.{image_format}"
            (base / name).write_bytes(encode(np.asarray(arr)))
            names.append(name)
        (base / "index.txt").write_text("\n".join(names) + "\n", encoding="utf-8")
        return base

    return build


ECHO_PREDICTOR = textwrap.dedent(
    """\
    import json
    import sys

    for line in sys.stdin:
        req = json.loads(line)
        pixels = req.get("pixels", [])
        mean = sum(pixels) / len(pixels) if pixels else 0.0
        slot = min(5, max(0, int(round(mean * 5))))
        probs = [0.02] * 6
        probs[slot] = 0.90
        total = sum(probs)
        probs = [p / total for p in probs]
        print(json.dumps({"video_id": req["video_id"],
                          "frame_index": req["frame_index"],
                          "probs": probs}), flush=True)
    """
)

BROKEN_PREDICTOR = textwrap.dedent(
    """\
    import json
    import sys

    for line in sys.stdin:
        req = json.loads(line)
        print(json.dumps({"video_id": req["video_id"],
                          "frame_index": req["frame_index"],
                          "probs": [0.2, 0.2, 0.2, 0.2, 0.2]}), flush=True)
    """
)


@pytest.fixture
def predictor_command(tmp_path):
    """Command line for a deterministic external predictor process."""

    def build(source=ECHO_PREDICTOR, name="predictor.py"):
        script = tmp_path / name
        script.write_text(source, encoding="utf-8")
        return [sys.executable, str(script)]

    return build
