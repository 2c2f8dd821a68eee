"""Bundled synthetic test corpus (all images generated, 128x128 grayscale).

The edge-rich subset (step, checkerboard, glyphs, scene) drives the
metadata-guided sweeps; gradient and blob are the smooth references. The
scene image doubles as the "natural" stand-in: its default-parameter edge
map lands at a few percent density.
"""

from __future__ import annotations

import os

import numpy as np

from .image import ImageFrame, ImagePlane, save_pnm, to_u8

SIZE = 128

EDGE_RICH = ("step", "checkerboard", "glyphs", "scene")
SMOOTH = ("gradient", "blob")

# 5x7 stroke rasters for a handful of block letters, tiled into text-like rows.
_GLYPH_ROWS = {
    "E": ("11111", "10000", "10000", "11110", "10000", "10000", "11111"),
    "H": ("10001", "10001", "10001", "11111", "10001", "10001", "10001"),
    "T": ("11111", "00100", "00100", "00100", "00100", "00100", "00100"),
    "L": ("10000", "10000", "10000", "10000", "10000", "10000", "11111"),
    "F": ("11111", "10000", "10000", "11110", "10000", "10000", "10000"),
    "N": ("10001", "11001", "10101", "10011", "10001", "10001", "10001"),
}
_GLYPH_ORDER = "EHTLFNHTEFLNTEHL"
_STROKE = 3  # stroke width in pixels; thick enough to survive sigma=1.4 smoothing


def _put_glyph_row(arr: np.ndarray, row0: int, ink: int, gi0: int = 0) -> int:
    size = arr.shape[1]
    cell_w = 5 * _STROKE + 4
    gi = gi0
    for col0 in range(4, size - cell_w, cell_w):
        rows = _GLYPH_ROWS[_GLYPH_ORDER[gi % len(_GLYPH_ORDER)]]
        gi += 1
        for gy, bits in enumerate(rows):
            for gx, b in enumerate(bits):
                if b == "1":
                    y = row0 + gy * _STROKE
                    x = col0 + gx * _STROKE
                    arr[y : y + _STROKE, x : x + _STROKE] = ink
    return gi


def step_edge(size: int = SIZE) -> ImagePlane:
    """Vertical step: dark left half, bright right half.

    Levels 16/240 keep quantization error visible instead of letting the
    0/255 clamp hide it, so codec distortion stays monotone in quality.
    """
    arr = np.full((size, size), 16, dtype=np.uint8)
    arr[:, size // 2 :] = 240
    return ImagePlane(arr)


def gradient(size: int = SIZE) -> ImagePlane:
    """Smooth horizontal ramp from 0 to 255."""
    row = np.linspace(0.0, 255.0, size)
    return ImagePlane(to_u8(np.tile(row, (size, 1))))


def checkerboard(size: int = SIZE, block: int = 16) -> ImagePlane:
    yy, xx = np.mgrid[0:size, 0:size]
    arr = 16 + (((yy // block) + (xx // block)) % 2) * 224
    return ImagePlane(arr.astype(np.uint8))


def blob(size: int = SIZE) -> ImagePlane:
    """Smooth two-lobe Gaussian blob on a mid-gray background."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    c = size / 2.0
    g1 = 90.0 * np.exp(-(((yy - c * 0.8) ** 2) + (xx - c * 1.2) ** 2) / (2 * (size / 6.0) ** 2))
    g2 = -60.0 * np.exp(-(((yy - c * 1.3) ** 2) + (xx - c * 0.6) ** 2) / (2 * (size / 8.0) ** 2))
    return ImagePlane(to_u8(128.0 + g1 + g2))


def glyphs(size: int = SIZE) -> ImagePlane:
    """Text-like raster: rows of block letters in dark ink on bright paper."""
    arr = np.full((size, size), 245, dtype=np.uint8)
    cell_h = 7 * _STROKE + 6
    gi = 0
    for row0 in range(3, size - cell_h, cell_h):
        gi = _put_glyph_row(arr, row0, 10, gi)
    return ImagePlane(arr)


def scene(size: int = SIZE) -> ImagePlane:
    """Composite: smooth lobes, a bright column, a dark disk, text, a checker strip."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    c = size / 2.0
    base = (
        150.0
        + 70.0 * np.exp(-(((yy - c * 0.75) ** 2) + (xx - c * 1.15) ** 2) / (2 * (size / 5.0) ** 2))
        - 40.0 * np.exp(-(((yy - c * 1.4) ** 2) + (xx - c * 0.5) ** 2) / (2 * (size / 7.0) ** 2))
    )
    base[:, int(size * 0.82) :] = 245.0
    disk = ((yy - size * 0.72) ** 2 + (xx - size * 0.62) ** 2) < (size * 0.15) ** 2
    base[disk] = 25.0
    gi = _put_glyph_row(base, size // 12, 12)
    gi = _put_glyph_row(base, size // 12 + 27, 12, gi)
    _put_glyph_row(base, size // 12 + 54, 12, gi)
    strip_rows = slice(int(size * 0.84), size)
    strip_cols = slice(0, int(size * 0.55))
    checker = ((yy // 8 + xx // 8) % 2)[strip_rows, strip_cols]
    base[strip_rows, strip_cols] = 40.0 + 200.0 * checker
    return ImagePlane(to_u8(base))


def bundled() -> dict:
    """All bundled corpus images, keyed by name (deterministic order)."""
    return {
        "step": step_edge(),
        "gradient": gradient(),
        "checkerboard": checkerboard(),
        "blob": blob(),
        "glyphs": glyphs(),
        "scene": scene(),
    }


def edge_rich() -> dict:
    return {name: plane for name, plane in bundled().items() if name in EDGE_RICH}


def write_dir(path: str) -> list:
    """Write the bundled corpus as .pnm files; returns the file paths."""
    os.makedirs(path, exist_ok=True)
    out = []
    for name, plane in bundled().items():
        p = os.path.join(path, f"{name}.pnm")
        with open(p, "wb") as fh:
            fh.write(save_pnm(ImageFrame((plane,))))
        out.append(p)
    return out
