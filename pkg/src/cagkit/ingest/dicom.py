"""Minimal multi-frame DICOM reader.

Scope is deliberately narrow: uncompressed explicit-VR little-endian
datasets, the five pixel-geometry tags plus two optional identity tags.
Anything outside that (compressed syntaxes, implicit VR, undefined-length
elements) raises UnsupportedTransferSyntax.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from cagkit.errors import (
    EmptySequence,
    MissingRequiredTag,
    TruncatedPixelData,
    UnsupportedTransferSyntax,
)
from cagkit.ingest.model import CineSequence, sequence_from_arrays

EXPLICIT_VR_LE = "1.2.840.10008.1.2.1"

TAG_ROWS = (0x0028, 0x0010)
TAG_COLUMNS = (0x0028, 0x0011)
TAG_NUMBER_OF_FRAMES = (0x0028, 0x0008)
TAG_BITS_ALLOCATED = (0x0028, 0x0100)
TAG_PIXEL_DATA = (0x7FE0, 0x0010)
TAG_SOP_INSTANCE_UID = (0x0008, 0x0018)
TAG_STUDY_INSTANCE_UID = (0x0020, 0x000D)
TAG_TRANSFER_SYNTAX = (0x0002, 0x0010)

_TAG_NAMES = {
    TAG_ROWS: "(0028,0010) Rows",
    TAG_COLUMNS: "(0028,0011) Columns",
    TAG_NUMBER_OF_FRAMES: "(0028,0008) NumberOfFrames",
    TAG_BITS_ALLOCATED: "(0028,0100) BitsAllocated",
    TAG_PIXEL_DATA: "(7FE0,0010) PixelData",
}

_WANTED = set(_TAG_NAMES) | {TAG_SOP_INSTANCE_UID, TAG_STUDY_INSTANCE_UID}

# VRs whose explicit encoding uses a 2-byte reserved field + 4-byte length
_LONG_VRS = {b"OB", b"OW", b"OF", b"OD", b"OL", b"SQ", b"UC", b"UR", b"UT", b"UN"}


def load_dicom(path) -> CineSequence:
    """Parse one multi-frame DICOM file into a CineSequence."""
    path = Path(path)
    data = path.read_bytes()
    elements = _parse_elements(data)

    for tag in (TAG_ROWS, TAG_COLUMNS, TAG_NUMBER_OF_FRAMES, TAG_BITS_ALLOCATED,
                TAG_PIXEL_DATA):
        if tag not in elements:
            raise MissingRequiredTag(_TAG_NAMES[tag])

    rows = _parse_us(elements[TAG_ROWS], TAG_ROWS)
    cols = _parse_us(elements[TAG_COLUMNS], TAG_COLUMNS)
    bits = _parse_us(elements[TAG_BITS_ALLOCATED], TAG_BITS_ALLOCATED)
    n_frames = _parse_is(elements[TAG_NUMBER_OF_FRAMES], TAG_NUMBER_OF_FRAMES)
    pixel = elements[TAG_PIXEL_DATA]

    if bits not in (8, 16):
        raise UnsupportedTransferSyntax(f"BitsAllocated {bits} not supported (8 or 16 only)")
    if n_frames <= 0:
        raise EmptySequence(f"{path.name}: NumberOfFrames={n_frames}")

    frame_size = rows * cols * (bits // 8)
    expected = frame_size * n_frames
    if len(pixel) < expected:
        raise TruncatedPixelData(
            f"{path.name}: PixelData holds {len(pixel)} bytes, "
            f"need {expected} for {n_frames} frames of {rows}x{cols}"
        )

    dtype = np.uint8 if bits == 8 else np.dtype("<u2")
    stack = np.frombuffer(pixel[:expected], dtype=dtype).reshape(n_frames, rows, cols)
    arrays = [stack[i].astype(np.uint16) if bits == 16 else stack[i] for i in range(n_frames)]

    exam_id = _parse_str(elements.get(TAG_STUDY_INSTANCE_UID)) or path.parent.name
    video_id = _parse_str(elements.get(TAG_SOP_INSTANCE_UID)) or path.stem
    return sequence_from_arrays(exam_id, video_id, arrays, bits_per_sample=bits)


def _parse_elements(data: bytes) -> dict:
    """Walk top-level explicit-VR elements, keeping only the wanted tags."""
    pos = 0
    if data[128:132] == b"DICM":
        pos = 132
    elif data[:4] == b"DICM":
        pos = 4
    elements = {}
    transfer_syntax = None
    n = len(data)
    while pos + 8 <= n:
        group, elem = int.from_bytes(data[pos:pos + 2], "little"), int.from_bytes(
            data[pos + 2:pos + 4], "little"
        )
        vr = data[pos + 4:pos + 6]
        if not (vr.isalpha() and vr.isupper()):
            raise UnsupportedTransferSyntax(
                f"element ({group:04X},{elem:04X}) is not explicit-VR encoded"
            )
        if vr in _LONG_VRS:
            length = int.from_bytes(data[pos + 8:pos + 12], "little")
            value_at = pos + 12
        else:
            length = int.from_bytes(data[pos + 6:pos + 8], "little")
            value_at = pos + 8
        if length == 0xFFFFFFFF:
            raise UnsupportedTransferSyntax(
                f"element ({group:04X},{elem:04X}) has undefined length "
                "(encapsulated or sequence data is out of scope)"
            )
        if value_at + length > n:
            if (group, elem) == TAG_PIXEL_DATA:
                raise TruncatedPixelData(
                    f"PixelData declares {length} bytes but file ends after "
                    f"{n - value_at}"
                )
            raise UnsupportedTransferSyntax(
                f"element ({group:04X},{elem:04X}) overruns the file"
            )
        if (group, elem) == TAG_TRANSFER_SYNTAX:
            transfer_syntax = data[value_at:value_at + length].rstrip(b"\x00 ").decode(
                "ascii", "replace"
            )
            if transfer_syntax != EXPLICIT_VR_LE:
                raise UnsupportedTransferSyntax(
                    f"transfer syntax {transfer_syntax} (explicit-VR little-endian only)"
                )
        if (group, elem) in _WANTED:
            elements[(group, elem)] = data[value_at:value_at + length]
        pos = value_at + length
    return elements


def _parse_us(raw: bytes, tag) -> int:
    if len(raw) != 2:
        raise UnsupportedTransferSyntax(f"{_TAG_NAMES.get(tag, tag)}: bad US length {len(raw)}")
    return int.from_bytes(raw, "little")


def _parse_is(raw: bytes, tag) -> int:
    text = raw.decode("ascii", "replace").strip().strip("\x00")
    try:
        return int(text)
    except ValueError:
        raise MissingRequiredTag(
            _TAG_NAMES.get(tag, str(tag)), f"unparseable integer string {text!r}"
        ) from None


def _parse_str(raw) -> str:
    if raw is None:
        return ""
    return raw.rstrip(b"\x00 ").decode("ascii", "replace").strip()
