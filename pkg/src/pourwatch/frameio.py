"""Frame ingestion and serialization: Y4M (mono) and the SLGF raw format,
plus stereo splitting of side-by-side composites.

SLGF is a trivial fixture format: 16-byte header (magic "SLGF", little-endian
u32 width, height, frame count) followed by count * width * height bytes of
row-major 8-bit luma.
"""

from __future__ import annotations

import struct
from typing import Iterable, Iterator

import numpy as np

from .optflow import Frame

SLGF_MAGIC = b"SLGF"
SLGF_HEADER = struct.Struct("<4sIII")

FORMAT_Y4M = "y4m-mono"
FORMAT_SLGF = "raw-luma"


class FormatError(ValueError):
    """Malformed frame container; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class OddWidthError(ValueError):
    """A stereo frame must have an even width to split."""


def stereo_split(frame: Frame) -> tuple[Frame, Frame]:
    """Split a side-by-side composite into its left and right views."""
    if frame.width % 2 != 0:
        raise OddWidthError(f"stereo frame width {frame.width} is odd")
    half = frame.width // 2
    left = Frame(half, frame.height, frame.luma[:, :half].copy(), frame.index)
    right = Frame(half, frame.height, frame.luma[:, half:].copy(), frame.index)
    return left, right


def stereo_join(left: Frame, right: Frame) -> Frame:
    """Re-concatenate two views; exact inverse of stereo_split."""
    if (left.height, left.index) != (right.height, right.index):
        raise ValueError("views disagree in height or index")
    return Frame(left.width + right.width, left.height,
                 np.hstack([left.luma, right.luma]), left.index)


# --- SLGF --------------------------------------------------------------------

def write_slgf(path, frames: Iterable[Frame]) -> int:
    """Write frames to an SLGF file; returns the frame count."""
    frames = list(frames)
    if not frames:
        raise ValueError("cannot write an empty SLGF file")
    w, h = frames[0].width, frames[0].height
    with open(path, "wb") as fh:
        fh.write(SLGF_HEADER.pack(SLGF_MAGIC, w, h, len(frames)))
        for f in frames:
            if (f.width, f.height) != (w, h):
                raise ValueError("all frames must share one size")
            fh.write(f.to_gray8().tobytes())
    return len(frames)


def read_slgf(path) -> Iterator[Frame]:
    """Frames of an SLGF file with consecutive indices from zero."""
    with open(path, "rb") as fh:
        header = fh.read(SLGF_HEADER.size)
        if len(header) < SLGF_HEADER.size:
            raise FormatError("truncated SLGF header", len(header))
        magic, w, h, count = SLGF_HEADER.unpack(header)
        if magic != SLGF_MAGIC:
            raise FormatError(f"bad magic {magic!r}", 0)
        if w == 0 or h == 0:
            raise FormatError("zero frame dimensions", 4)
        frame_bytes = w * h
        for i in range(count):
            payload = fh.read(frame_bytes)
            if len(payload) < frame_bytes:
                raise FormatError(
                    f"frame {i} truncated: expected {frame_bytes} bytes, got {len(payload)}",
                    SLGF_HEADER.size + i * frame_bytes + len(payload))
            yield Frame.from_gray8(payload, w, h, i)


# --- Y4M (mono colorspace) ---------------------------------------------------

def write_y4m(path, frames: Iterable[Frame], fps: tuple[int, int] = (30, 1)) -> int:
    """Write frames as YUV4MPEG2 with the mono colorspace."""
    count = 0
    with open(path, "wb") as fh:
        for f in frames:
            if count == 0:
                header = f"YUV4MPEG2 W{f.width} H{f.height} F{fps[0]}:{fps[1]} Ip A1:1 Cmono\n"
                fh.write(header.encode("ascii"))
            fh.write(b"FRAME\n")
            fh.write(f.to_gray8().tobytes())
            count += 1
    if count == 0:
        raise ValueError("cannot write an empty Y4M file")
    return count


def read_y4m(path) -> Iterator[Frame]:
    """Frames of a mono Y4M file with consecutive indices from zero."""
    with open(path, "rb") as fh:
        header = bytearray()
        while True:
            c = fh.read(1)
            if not c:
                raise FormatError("missing stream header terminator", len(header))
            if c == b"\n":
                break
            header += c
            if len(header) > 512:
                raise FormatError("unterminated stream header", len(header))
        tokens = header.decode("ascii", errors="replace").split(" ")
        if tokens[0] != "YUV4MPEG2":
            raise FormatError(f"bad stream signature {tokens[0]!r}", 0)
        width = height = None
        colorspace = "420"  # Y4M default when C is absent
        for tok in tokens[1:]:
            if not tok:
                continue
            key, val = tok[0], tok[1:]
            if key == "W":
                width = int(val)
            elif key == "H":
                height = int(val)
            elif key == "C":
                colorspace = val
        if width is None or height is None:
            raise FormatError("stream header lacks W or H", len(header))
        if colorspace != "mono":
            raise FormatError(f"unsupported colorspace C{colorspace} (need Cmono)", 0)

        frame_bytes = width * height
        offset = len(header) + 1
        index = 0
        while True:
            marker = bytearray()
            c = fh.read(1)
            if not c:
                return  # clean end of stream
            while c != b"\n":
                marker += c
                c = fh.read(1)
                if not c:
                    raise FormatError("truncated FRAME marker", offset + len(marker))
                if len(marker) > 256:
                    raise FormatError("unterminated FRAME marker", offset)
            if not bytes(marker).startswith(b"FRAME"):
                raise FormatError(f"expected FRAME marker, got {bytes(marker)!r}", offset)
            offset += len(marker) + 1
            payload = fh.read(frame_bytes)
            if len(payload) < frame_bytes:
                raise FormatError(
                    f"frame {index} truncated: expected {frame_bytes} bytes, got {len(payload)}",
                    offset + len(payload))
            yield Frame.from_gray8(payload, width, height, index)
            offset += frame_bytes
            index += 1


def read_frames(source, format: str) -> Iterator[Frame]:
    """Dispatch to the reader for ``format`` ("y4m-mono" or "raw-luma")."""
    if format == FORMAT_Y4M:
        return read_y4m(source)
    if format == FORMAT_SLGF:
        return read_slgf(source)
    raise ValueError(f"unknown frame format {format!r}")
