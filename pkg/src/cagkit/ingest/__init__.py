"""Cine ingestion: multi-frame DICOM and image-directory inputs."""

from __future__ import annotations

from pathlib import Path

from cagkit.ingest.dicom import load_dicom
from cagkit.ingest.imagedir import INDEX_NAME, load_imagedir, save_imagedir
from cagkit.ingest.model import (
    CineSequence,
    Frame,
    FrameStats,
    frame_stats,
    sequence_from_arrays,
)

__all__ = [
    "CineSequence",
    "Frame",
    "FrameStats",
    "frame_stats",
    "load_cine",
    "load_dicom",
    "load_imagedir",
    "save_imagedir",
    "sequence_from_arrays",
]


def load_cine(path, format_hint: str = "auto") -> CineSequence:
    """Parse a cine input into a normalized frame stack.

    format_hint: "dicom", "imagedir", or "auto" (directory with index.txt
    means imagedir, anything else is treated as a DICOM file).
    """
    path = Path(path)
    if format_hint == "auto":
        format_hint = "imagedir" if path.is_dir() else "dicom"
    if format_hint == "imagedir":
        return load_imagedir(path)
    if format_hint == "dicom":
        return load_dicom(path)
    raise ValueError(f"unknown format hint {format_hint!r}")
