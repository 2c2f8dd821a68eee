"""Pixel raster types, PNM I/O, grayscale conversion, and resampling.

Conventions fixed package-wide:
  * samples are 8-bit, stored as (height, width) uint8 arrays;
  * float results are rounded half away from zero, then clamped to [0, 255];
  * bicubic means the Catmull-Rom kernel (a = -0.5) with edge-clamped taps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import FormatError, ParameterError

LUMA_R, LUMA_G, LUMA_B = 0.299, 0.587, 0.114


def round_half_away(x):
    """Round to the nearest integer with halves away from zero."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def to_u8(x) -> np.ndarray:
    """Round (half away from zero) and clamp float samples into uint8."""
    return np.clip(round_half_away(x), 0.0, 255.0).astype(np.uint8)


def _frozen_u8(arr: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ParameterError(f"{what} must be 2-D, got {arr.ndim}-D")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ParameterError(f"{what} dimensions must be >= 1")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer):
            raise ParameterError(f"{what} must hold integers")
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ParameterError(f"{what} values must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    out = arr.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class ImagePlane:
    """A height x width raster of 8-bit intensity samples (immutable)."""

    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen_u8(self.samples, "plane"))

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    def __eq__(self, other):
        return isinstance(other, ImagePlane) and np.array_equal(self.samples, other.samples)


@dataclass(frozen=True, eq=False)
class ImageFrame:
    """One grayscale plane or three RGB planes of identical dimensions."""

    planes: tuple

    def __post_init__(self):
        planes = tuple(self.planes)
        if len(planes) not in (1, 3):
            raise ParameterError(f"frame must have 1 or 3 planes, got {len(planes)}")
        w, h = planes[0].width, planes[0].height
        for p in planes[1:]:
            if p.width != w or p.height != h:
                raise ParameterError("frame planes must share dimensions")
        object.__setattr__(self, "planes", planes)

    @property
    def width(self) -> int:
        return self.planes[0].width

    @property
    def height(self) -> int:
        return self.planes[0].height

    def __eq__(self, other):
        return isinstance(other, ImageFrame) and self.planes == other.planes


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """An ordered, dimensionally homogeneous list of frames (n >= 1)."""

    frames: tuple

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ParameterError("sequence must contain at least one frame")
        f0 = frames[0]
        for f in frames[1:]:
            if f.width != f0.width or f.height != f0.height or len(f.planes) != len(f0.planes):
                raise ParameterError("sequence frames must share dimensions and plane count")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    def __eq__(self, other):
        return isinstance(other, FrameSequence) and self.frames == other.frames


# ---------------------------------------------------------------------------
# PNM (binary PGM / PPM, maxval 255)

def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise FormatError("header", "unexpected end of header")
    return data[start:pos], pos


def _header_int(data: bytes, pos: int, field: str) -> tuple[int, int]:
    tok, pos = _next_token(data, pos)
    try:
        val = int(tok)
    except ValueError:
        raise FormatError(field, f"not an integer: {tok!r}") from None
    return val, pos


def load_pnm(data: bytes) -> ImageFrame:
    """Decode a binary PGM (P5) or PPM (P6) file with maxval 255."""
    magic, pos = _next_token(data, 0)
    if magic not in (b"P5", b"P6"):
        raise FormatError("magic", f"expected P5 or P6, got {magic!r}")
    width, pos = _header_int(data, pos, "width")
    height, pos = _header_int(data, pos, "height")
    maxval, pos = _header_int(data, pos, "maxval")
    if width < 1:
        raise FormatError("width", f"must be >= 1, got {width}")
    if height < 1:
        raise FormatError("height", f"must be >= 1, got {height}")
    if maxval != 255:
        raise FormatError("maxval", f"must be 255, got {maxval}")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise FormatError("header", "missing whitespace before payload")
    pos += 1
    nchan = 1 if magic == b"P5" else 3
    expected = width * height * nchan
    payload = data[pos:]
    if len(payload) < expected:
        raise FormatError("payload", f"truncated: need {expected} bytes, have {len(payload)}")
    if len(payload) > expected:
        raise FormatError("payload", f"{len(payload) - expected} trailing bytes")
    raster = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, nchan)
    planes = tuple(ImagePlane(raster[:, :, c]) for c in range(nchan))
    return ImageFrame(planes)


def save_pnm(frame: ImageFrame) -> bytes:
    """Encode a frame as canonical binary PGM/PPM (single spaces, newline before payload)."""
    nchan = len(frame.planes)
    magic = b"P5" if nchan == 1 else b"P6"
    header = magic + b"\n%d %d\n255\n" % (frame.width, frame.height)
    raster = np.stack([p.samples for p in frame.planes], axis=-1)
    return header + raster.tobytes()


# ---------------------------------------------------------------------------
# Color conversion

def to_grayscale(frame: ImageFrame) -> ImagePlane:
    """Return the single plane, or the BT.601 luma of an RGB frame."""
    if len(frame.planes) == 1:
        return frame.planes[0]
    r, g, b = (p.samples.astype(np.float64) for p in frame.planes)
    return ImagePlane(to_u8(LUMA_R * r + LUMA_G * g + LUMA_B * b))


# ---------------------------------------------------------------------------
# Resampling

def _catmull_rom(s: np.ndarray) -> np.ndarray:
    # Kernel value at distance s >= 0 for a = -0.5.
    s = np.abs(s)
    near = (1.5 * s - 2.5) * s * s + 1.0
    far = ((-0.5 * s + 2.5) * s - 4.0) * s + 2.0
    return np.where(s < 1.0, near, np.where(s < 2.0, far, 0.0))


def _bicubic_matrix(n_src: int, n_dst: int) -> np.ndarray:
    mat = np.zeros((n_dst, n_src), dtype=np.float64)
    ratio = n_src / n_dst
    centers = (np.arange(n_dst) + 0.5) * ratio - 0.5
    base = np.floor(centers).astype(np.int64)
    t = centers - base
    for k in range(-1, 3):
        idx = np.clip(base + k, 0, n_src - 1)
        w = _catmull_rom(t - k)
        np.add.at(mat, (np.arange(n_dst), idx), w)
    return mat


def _nearest_index(n_src: int, n_dst: int) -> np.ndarray:
    idx = np.floor((np.arange(n_dst) + 0.5) * (n_src / n_dst)).astype(np.int64)
    return np.clip(idx, 0, n_src - 1)


def resample_f64(samples: np.ndarray, new_width: int, new_height: int) -> np.ndarray:
    """Bicubic resample of a 2-D array, returned unrounded in float64."""
    src = np.asarray(samples, dtype=np.float64)
    ry = _bicubic_matrix(src.shape[0], new_height)
    rx = _bicubic_matrix(src.shape[1], new_width)
    return ry @ src @ rx.T


def resample(plane: ImagePlane, new_width: int, new_height: int, kernel: str = "bicubic") -> ImagePlane:
    """Resample a plane to the requested dimensions with nearest or bicubic taps."""
    if new_width < 1 or new_height < 1:
        raise ParameterError("resample dimensions must be >= 1")
    if kernel == "nearest":
        iy = _nearest_index(plane.height, new_height)
        ix = _nearest_index(plane.width, new_width)
        return ImagePlane(plane.samples[np.ix_(iy, ix)])
    if kernel == "bicubic":
        return ImagePlane(to_u8(resample_f64(plane.samples, new_width, new_height)))
    raise ParameterError(f"unknown resample kernel {kernel!r}")


def frame_to_array(frame: ImageFrame) -> np.ndarray:
    """Stack a frame's planes into a (planes, height, width) float64 array."""
    return np.stack([p.samples.astype(np.float64) for p in frame.planes])


def planes_to_frame(arrays: Sequence[np.ndarray]) -> ImageFrame:
    return ImageFrame(tuple(ImagePlane(a) for a in arrays))
