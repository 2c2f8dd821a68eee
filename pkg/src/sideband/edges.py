"""Sender-side structured metadata: Canny edge maps and a 2-bit gradient map.

Gradient magnitudes are reported on a 0-255 scale: Sobel magnitude divided
by 4, so a full-range vertical step edge maps to ~255.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .image import ImagePlane

GRAD2_THRESHOLDS = (16.0, 48.0, 112.0)
_SOBEL_DERIV = np.array([-1.0, 0.0, 1.0])
_SOBEL_SMOOTH = np.array([1.0, 2.0, 1.0])


@dataclass(frozen=True, eq=False)
class MetadataPlane:
    """A 1-bit or 2-bit raster of side-information sites on the HR grid."""

    sites: np.ndarray
    depth: int

    def __post_init__(self):
        if self.depth not in (1, 2):
            raise ParameterError(f"metadata depth must be 1 or 2, got {self.depth}")
        arr = np.asarray(self.sites)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ParameterError("metadata sites must form a non-empty 2-D grid")
        arr = arr.astype(np.uint8, copy=True)
        if arr.max(initial=0) >= (1 << self.depth):
            raise ParameterError(f"metadata values must be < 2^{self.depth}")
        arr.setflags(write=False)
        object.__setattr__(self, "sites", arr)

    @property
    def height(self) -> int:
        return self.sites.shape[0]

    @property
    def width(self) -> int:
        return self.sites.shape[1]

    def density(self) -> float:
        """Fraction of nonzero sites."""
        return float(np.count_nonzero(self.sites)) / self.sites.size

    def __eq__(self, other):
        return (
            isinstance(other, MetadataPlane)
            and self.depth == other.depth
            and np.array_equal(self.sites, other.sites)
        )


@dataclass(frozen=True)
class CannyParams:
    gauss_sigma: float = 1.4
    low_thresh: float = 40.0
    high_thresh: float = 100.0

    def __post_init__(self):
        if self.gauss_sigma <= 0:
            raise ParameterError(f"gauss_sigma must be > 0, got {self.gauss_sigma}")
        if not 0 < self.low_thresh <= self.high_thresh:
            raise ParameterError(
                f"need 0 < low <= high, got ({self.low_thresh}, {self.high_thresh})"
            )


def _gauss_kernel(sigma: float) -> np.ndarray:
    radius = int(np.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return k / k.sum()


def _smooth(arr: np.ndarray, sigma: float) -> np.ndarray:
    k = _gauss_kernel(sigma)
    out = ndimage.correlate1d(arr, k, axis=0, mode="nearest")
    return ndimage.correlate1d(out, k, axis=1, mode="nearest")


def _sobel_magnitude(arr: np.ndarray) -> tuple:
    gx = ndimage.correlate1d(arr, _SOBEL_DERIV, axis=1, mode="nearest")
    gx = ndimage.correlate1d(gx, _SOBEL_SMOOTH, axis=0, mode="nearest")
    gy = ndimage.correlate1d(arr, _SOBEL_DERIV, axis=0, mode="nearest")
    gy = ndimage.correlate1d(gy, _SOBEL_SMOOTH, axis=1, mode="nearest")
    return np.hypot(gx, gy) / 4.0, gx, gy


def gradient_255(plane: ImagePlane, sigma: float) -> np.ndarray:
    """Gaussian-smoothed Sobel magnitude on the 0-255 scale."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    mag, _, _ = _sobel_magnitude(_smooth(plane.samples.astype(np.float64), sigma))
    return mag


def nonmax_suppress(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Thin ridges to 1 px: keep sites strictly above the backward neighbor
    and >= the forward neighbor along the 4-sector-quantized gradient."""
    deg = np.degrees(np.arctan2(gy, gx)) % 180.0
    pad = np.pad(mag, 1, mode="constant")

    def shifted(dy, dx):
        return pad[1 + dy : 1 + dy + mag.shape[0], 1 + dx : 1 + dx + mag.shape[1]]

    keep = np.zeros(mag.shape, dtype=bool)
    sectors = (
        ((deg < 22.5) | (deg >= 157.5), (0, 1)),
        ((deg >= 22.5) & (deg < 67.5), (1, 1)),
        ((deg >= 67.5) & (deg < 112.5), (1, 0)),
        ((deg >= 112.5) & (deg < 157.5), (1, -1)),
    )
    for mask, (dy, dx) in sectors:
        fwd = shifted(dy, dx)
        bwd = shifted(-dy, -dx)
        keep |= mask & (mag > bwd) & (mag >= fwd)
    return keep & (mag > 0)


def _hysteresis(strong: np.ndarray, weak: np.ndarray) -> np.ndarray:
    # Stack flood from strong sites across 8-connected weak sites.
    h, w = strong.shape
    out = strong.copy()
    stack = [(int(y), int(x)) for y, x in np.argwhere(strong)]
    while stack:
        y, x = stack.pop()
        for dy in (-1, 0, 1):
            ny = y + dy
            if ny < 0 or ny >= h:
                continue
            for dx in (-1, 0, 1):
                nx = x + dx
                if 0 <= nx < w and weak[ny, nx] and not out[ny, nx]:
                    out[ny, nx] = True
                    stack.append((ny, nx))
    return out


def canny(plane: ImagePlane, params: CannyParams = CannyParams()) -> MetadataPlane:
    """Classic Canny pipeline; output marks edge sites with 1."""
    smoothed = _smooth(plane.samples.astype(np.float64), params.gauss_sigma)
    mag, gx, gy = _sobel_magnitude(smoothed)
    nms = nonmax_suppress(mag, gx, gy)
    strong = nms & (mag >= params.high_thresh)
    weak = nms & (mag >= params.low_thresh)
    edges = _hysteresis(strong, weak)
    return MetadataPlane(sites=edges.astype(np.uint8), depth=1)


@dataclass(frozen=True)
class SparsitySweep:
    """Edge maps of non-increasing density; all_empty warns of a degenerate sweep."""

    maps: tuple
    all_empty: bool


def sweep_sparsity(
    plane: ImagePlane, base: CannyParams, levels: int, ratio: float = 1.6
) -> SparsitySweep:
    """Produce `levels` edge maps by scaling thresholds geometrically upward."""
    if levels < 2:
        raise ParameterError(f"sparsity sweep needs levels >= 2, got {levels}")
    if ratio <= 1.0:
        raise ParameterError(f"threshold ratio must be > 1, got {ratio}")
    maps = []
    for i in range(levels):
        f = ratio**i
        params = CannyParams(base.gauss_sigma, base.low_thresh * f, base.high_thresh * f)
        maps.append(canny(plane, params))
    all_empty = all(m.density() == 0.0 for m in maps)
    return SparsitySweep(maps=tuple(maps), all_empty=all_empty)


def gradient_2bit(plane: ImagePlane, sigma: float) -> MetadataPlane:
    """4-level gradient-magnitude map with fixed thresholds {16, 48, 112}."""
    mag = gradient_255(plane, sigma)
    levels = np.digitize(mag, GRAD2_THRESHOLDS).astype(np.uint8)
    return MetadataPlane(sites=levels, depth=2)


def downsample_metadata(m: MetadataPlane, factor: int) -> MetadataPlane:
    """factor x factor block pooling: OR for depth 1, max for depth 2."""
    if factor < 1:
        raise ParameterError(f"pooling factor must be >= 1, got {factor}")
    if factor == 1:
        return m
    ph, pw = -m.height % factor, -m.width % factor
    arr = np.pad(m.sites, ((0, ph), (0, pw)), mode="constant")
    h, w = arr.shape
    pooled = arr.reshape(h // factor, factor, w // factor, factor).max(axis=(1, 3))
    return MetadataPlane(sites=pooled, depth=m.depth)


def expand_metadata(m: MetadataPlane, factor: int) -> MetadataPlane:
    """Nearest-neighbor re-expansion of a pooled metadata plane."""
    if factor < 1:
        raise ParameterError(f"expansion factor must be >= 1, got {factor}")
    if factor == 1:
        return m
    return MetadataPlane(sites=np.repeat(np.repeat(m.sites, factor, 0), factor, 1), depth=m.depth)


def to_debug_plane(m: MetadataPlane) -> ImagePlane:
    """Visual export: 0/255 for depth 1, 0/85/170/255 for depth 2."""
    scale = 255 if m.depth == 1 else 85
    return ImagePlane((m.sites.astype(np.int64) * scale).astype(np.uint8))


def threshold_to_binary(m: MetadataPlane) -> MetadataPlane:
    """Depth-2 maps collapse to binary edges at level >= 2; depth-1 passes through."""
    if m.depth == 1:
        return m
    return MetadataPlane(sites=(m.sites >= 2).astype(np.uint8), depth=1)
