"""In-memory cine representation and per-frame statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cagkit import kernels
from cagkit.errors import EmptySequence, FrameSizeMismatch


@dataclass(frozen=True)
class Frame:
    """One still frame; pixels are a read-only (height, width) array."""

    index: int
    pixels: np.ndarray


@dataclass(frozen=True)
class CineSequence:
    """One exam video as an ordered stack of grayscale frames.

    All frames share width/height/bits_per_sample; frame order equals
    acquisition order. Instances are immutable (pixel arrays are marked
    read-only) and safe to share across threads.
    """

    exam_id: str
    video_id: str
    frames: tuple[Frame, ...]
    width: int
    height: int
    bits_per_sample: int


@dataclass(frozen=True)
class FrameStats:
    index: int
    mean: float
    variance: float


def sequence_from_arrays(exam_id, video_id, arrays, bits_per_sample=None):
    """Build a validated CineSequence from a list of 2-D pixel arrays.

    Raises EmptySequence for zero frames and FrameSizeMismatch when frames
    disagree on shape or sample width.
    """
    if not arrays:
        raise EmptySequence(f"{video_id}: no frames")
    frames = []
    shape = None
    dtype = None
    for i, arr in enumerate(arrays):
        a = np.asarray(arr)
        if a.ndim != 2:
            raise FrameSizeMismatch(f"frame {i}: expected 2-D pixels, got shape {a.shape}")
        if a.dtype == np.uint8:
            pass
        elif a.dtype == np.uint16:
            pass
        else:
            raise FrameSizeMismatch(f"frame {i}: unsupported dtype {a.dtype}")
        if shape is None:
            shape, dtype = a.shape, a.dtype
        elif a.shape != shape or a.dtype != dtype:
            raise FrameSizeMismatch(
                f"frame {i}: {a.shape}/{a.dtype} differs from first frame {shape}/{dtype}"
            )
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        frames.append(Frame(index=i, pixels=a))
    inferred_bits = 8 if dtype == np.uint8 else 16
    if bits_per_sample is not None and bits_per_sample != inferred_bits:
        raise FrameSizeMismatch(
            f"declared {bits_per_sample}-bit samples but pixel arrays are {inferred_bits}-bit"
        )
    height, width = shape
    return CineSequence(
        exam_id=exam_id,
        video_id=video_id,
        frames=tuple(frames),
        width=width,
        height=height,
        bits_per_sample=inferred_bits,
    )


def frame_stats(seq: CineSequence) -> list[FrameStats]:
    """Per-frame arithmetic mean and population variance of all pixels."""
    n = len(seq.frames)
    frame_size = seq.width * seq.height
    stack = np.empty(n * frame_size, dtype=seq.frames[0].pixels.dtype)
    for f in seq.frames:
        stack[f.index * frame_size:(f.index + 1) * frame_size] = f.pixels.ravel()
    means = np.empty(n, dtype=np.float64)
    variances = np.empty(n, dtype=np.float64)
    if seq.bits_per_sample == 8:
        kernels.frame_mean_var_u8(stack, n, frame_size, means, variances)
    else:
        kernels.frame_mean_var_u16(stack, n, frame_size, means, variances)
    return [
        FrameStats(index=i, mean=float(means[i]), variance=float(variances[i]))
        for i in range(n)
    ]
