"""Minimal grayscale PNG and PGM codecs.

Supports exactly what the frame store needs: 8/16-bit single-channel
images, non-interlaced PNG (color type 0), binary (P5) and ASCII (P2) PGM.
Encoding is pixel-exact so an imagedir round trip is lossless.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def decode_image(data: bytes, filename: str = "") -> np.ndarray:
    """Dispatch on magic bytes; filename only improves error messages."""
    if data[:8] == PNG_SIGNATURE:
        return decode_png(data)
    if data[:2] in (b"P5", b"P2"):
        return decode_pgm(data)
    raise ValueError(f"{filename or 'image'}: not a grayscale PNG or PGM file")


# --- PNG --------------------------------------------------------------------

def decode_png(data: bytes) -> np.ndarray:
    if data[:8] != PNG_SIGNATURE:
        raise ValueError("bad PNG signature")
    pos = 8
    width = height = bit_depth = None
    idat = bytearray()
    while pos + 8 <= len(data):
        (length,) = struct.unpack(">I", data[pos:pos + 4])
        ctype = data[pos + 4:pos + 8]
        chunk = data[pos + 8:pos + 8 + length]
        if len(chunk) < length:
            raise ValueError("truncated PNG chunk")
        pos += 12 + length  # skip CRC; integrity checking is not our job here
        if ctype == b"IHDR":
            width, height, bit_depth, color_type, comp, filt, interlace = struct.unpack(
                ">IIBBBBB", chunk
            )
            if color_type != 0:
                raise ValueError(f"unsupported PNG color type {color_type} (grayscale only)")
            if bit_depth not in (8, 16):
                raise ValueError(f"unsupported PNG bit depth {bit_depth}")
            if comp != 0 or filt != 0 or interlace != 0:
                raise ValueError("unsupported PNG compression/filter/interlace method")
        elif ctype == b"IDAT":
            idat.extend(chunk)
        elif ctype == b"IEND":
            break
    if width is None:
        raise ValueError("PNG missing IHDR")
    raw = zlib.decompress(bytes(idat))
    bpp = bit_depth // 8
    stride = width * bpp
    if len(raw) != height * (stride + 1):
        raise ValueError("PNG pixel payload has wrong length")
    out = bytearray(height * stride)
    for y in range(height):
        ft = raw[y * (stride + 1)]
        row = bytearray(raw[y * (stride + 1) + 1:(y + 1) * (stride + 1)])
        prev = out[(y - 1) * stride:y * stride] if y else bytes(stride)
        if ft == 0:
            pass
        elif ft == 1:  # Sub
            for x in range(bpp, stride):
                row[x] = (row[x] + row[x - bpp]) & 0xFF
        elif ft == 2:  # Up
            for x in range(stride):
                row[x] = (row[x] + prev[x]) & 0xFF
        elif ft == 3:  # Average
            for x in range(stride):
                left = row[x - bpp] if x >= bpp else 0
                row[x] = (row[x] + ((left + prev[x]) >> 1)) & 0xFF
        elif ft == 4:  # Paeth
            for x in range(stride):
                left = row[x - bpp] if x >= bpp else 0
                ul = prev[x - bpp] if x >= bpp else 0
                row[x] = (row[x] + _paeth(left, prev[x], ul)) & 0xFF
        else:
            raise ValueError(f"unknown PNG filter type {ft}")
        out[y * stride:(y + 1) * stride] = row
    if bit_depth == 8:
        return np.frombuffer(bytes(out), dtype=np.uint8).reshape(height, width)
    # PNG stores 16-bit samples big-endian
    return (
        np.frombuffer(bytes(out), dtype=">u2").astype(np.uint16).reshape(height, width)
    )


def _paeth(a: int, b: int, c: int) -> int:
    p = a + b - c
    pa = abs(p - a)
    pb = abs(p - b)
    pc = abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def encode_png(img: np.ndarray) -> bytes:
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.dtype not in (np.uint8, np.uint16):
        raise ValueError("encode_png expects a 2-D uint8 or uint16 array")
    height, width = arr.shape
    bit_depth = 8 if arr.dtype == np.uint8 else 16
    if bit_depth == 16:
        body = arr.astype(">u2").tobytes()
    else:
        body = arr.tobytes()
    stride = width * (bit_depth // 8)
    raw = b"".join(
        b"\x00" + body[y * stride:(y + 1) * stride] for y in range(height)
    )
    ihdr = struct.pack(">IIBBBBB", width, height, bit_depth, 0, 0, 0, 0)
    return b"".join(
        [
            PNG_SIGNATURE,
            _chunk(b"IHDR", ihdr),
            _chunk(b"IDAT", zlib.compress(raw, 9)),
            _chunk(b"IEND", b""),
        ]
    )


def _chunk(ctype: bytes, data: bytes) -> bytes:
    return (
        struct.pack(">I", len(data))
        + ctype
        + data
        + struct.pack(">I", zlib.crc32(ctype + data) & 0xFFFFFFFF)
    )


# --- PGM --------------------------------------------------------------------

def decode_pgm(data: bytes) -> np.ndarray:
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise ValueError("bad PGM magic")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    width, height, maxval = fields
    if not 0 < maxval < 65536:
        raise ValueError(f"bad PGM maxval {maxval}")
    dtype = np.uint8 if maxval < 256 else np.uint16
    if magic == b"P2":
        values = data[pos:].split()
        if len(values) < width * height:
            raise ValueError("truncated PGM data")
        arr = np.array([int(v) for v in values[:width * height]], dtype=dtype)
        return arr.reshape(height, width)
    pos += 1  # exactly one whitespace byte after maxval
    count = width * height
    if dtype == np.uint8:
        payload = data[pos:pos + count]
        if len(payload) < count:
            raise ValueError("truncated PGM data")
        return np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    payload = data[pos:pos + 2 * count]
    if len(payload) < 2 * count:
        raise ValueError("truncated PGM data")
    # PGM stores 16-bit samples most-significant byte first
    return np.frombuffer(payload, dtype=">u2").astype(np.uint16).reshape(height, width)


def encode_pgm(img: np.ndarray) -> bytes:
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.dtype not in (np.uint8, np.uint16):
        raise ValueError("encode_pgm expects a 2-D uint8 or uint16 array")
    height, width = arr.shape
    maxval = 255 if arr.dtype == np.uint8 else 65535
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    if arr.dtype == np.uint8:
        return header + arr.tobytes()
    return header + arr.astype(">u2").tobytes()
