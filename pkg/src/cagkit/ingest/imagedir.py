"""Image-directory cine format: index.txt naming ordered grayscale frames."""

from __future__ import annotations

from pathlib import Path

from cagkit.errors import EmptySequence
from cagkit.ingest.codecs import decode_image, encode_pgm, encode_png
from cagkit.ingest.model import CineSequence, sequence_from_arrays

INDEX_NAME = "index.txt"


def load_imagedir(path) -> CineSequence:
    """Read an imagedir cine: one frame file per index.txt line, in order.

    exam_id/video_id follow the <exam>/<video> directory convention.
    """
    path = Path(path)
    index_path = path / INDEX_NAME
    names = [
        line.strip()
        for line in index_path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    if not names:
        raise EmptySequence(f"{index_path}: no frames listed")
    arrays = []
    for name in names:
        frame_path = path / name
        arrays.append(decode_image(frame_path.read_bytes(), filename=str(frame_path)))
    return sequence_from_arrays(
        exam_id=path.parent.name or path.name,
        video_id=path.name,
        arrays=arrays,
    )


def save_imagedir(seq: CineSequence, path, image_format: str = "png") -> Path:
    """Write a cine back out as an imagedir; round trip is pixel-exact."""
    if image_format not in ("png", "pgm"):
        raise ValueError(f"image_format must be png or pgm, got {image_format!r}")
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    encode = encode_png if image_format == "png" else encode_pgm
    names = []
    for frame in seq.frames:
        name = f"frame_{frame.index:05d}.{image_format}"
        (path / name).write_bytes(encode(frame.pixels))
        names.append(name)
    (path / INDEX_NAME).write_text("\n".join(names) + "\n", encoding="utf-8")
    return path
