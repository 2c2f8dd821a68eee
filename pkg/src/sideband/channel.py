"""Deterministic, seedable transmission-degradation pipeline (NN/LN/HN).

Noise is keyed per site: for pixel index i = y*width + x and 64-bit seed s,
two splitmix64 finalizer outputs hash(s + GOLDEN*(2i+1)) and
hash(s + GOLDEN*(2i+2)) become uniforms in (0, 1), combined by Box-Muller
(cosine branch) into one standard normal. Parallel and serial evaluation
therefore agree bit-exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .image import ImagePlane, to_u8

ChannelSeed = int

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64(0xFFFFFFFFFFFFFFFF)


@dataclass(frozen=True)
class DegradePreset:
    """Noise-then-blur regime; kernel size 0 disables the blur stage."""

    name: str
    noise_sigma: float
    blur_kernel: int
    blur_sigma: float

    def __post_init__(self):
        if self.blur_kernel and self.blur_kernel % 2 == 0:
            raise ParameterError(f"blur kernel must be odd, got {self.blur_kernel}")
        if self.noise_sigma < 0:
            raise ParameterError("noise sigma must be >= 0")


PRESETS = {
    "NN": DegradePreset("NN", 0.0, 0, 0.0),
    "LN": DegradePreset("LN", 10.0, 5, 0.8),
    "HN": DegradePreset("HN", 20.0, 7, 1.2),
}


def preset(name: str) -> DegradePreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ParameterError(f"unknown degradation preset {name!r}") from None


def _splitmix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def gaussian_field(seed: int, height: int, width: int) -> np.ndarray:
    """One standard-normal sample per site, a pure function of (seed, x, y)."""
    s = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    idx = np.arange(height * width, dtype=np.uint64)
    two_i = idx * np.uint64(2)
    a = _splitmix(s + _GOLDEN * (two_i + np.uint64(1)))
    b = _splitmix(s + _GOLDEN * (two_i + np.uint64(2)))
    u1 = ((a >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    u2 = ((b >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    return z.reshape(height, width)


def kernel_1d(sigma: float, size: int) -> np.ndarray:
    """Discrete Gaussian taps normalized to sum 1; 2-D blur = outer product."""
    if size % 2 == 0 or size < 1:
        raise ParameterError(f"kernel size must be odd and >= 1, got {size}")
    if sigma <= 0:
        raise ParameterError(f"blur sigma must be > 0, got {sigma}")
    if size == 1:
        return np.array([1.0])
    r = size // 2
    xs = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return k / k.sum()


def blur(arr: np.ndarray, size: int, sigma: float) -> np.ndarray:
    """Separable isotropic Gaussian blur with edge-clamped taps (float in/out)."""
    k = kernel_1d(sigma, size)
    out = ndimage.correlate1d(np.asarray(arr, dtype=np.float64), k, axis=0, mode="nearest")
    return ndimage.correlate1d(out, k, axis=1, mode="nearest")


def degrade_custom(
    plane: ImagePlane,
    noise_sigma: float,
    blur_kernel: int,
    blur_sigma: float,
    seed: int,
    order: str = "noise_blur",
) -> ImagePlane:
    """Apply Gaussian noise and/or blur in float, with one final round+clamp."""
    if order not in ("noise_blur", "blur_noise"):
        raise ParameterError(f"unknown stage order {order!r}")
    if noise_sigma == 0 and blur_kernel == 0:
        return plane
    arr = plane.samples.astype(np.float64)
    stages = ["noise", "blur"] if order == "noise_blur" else ["blur", "noise"]
    for stage in stages:
        if stage == "noise" and noise_sigma > 0:
            arr = arr + noise_sigma * gaussian_field(seed, plane.height, plane.width)
        elif stage == "blur" and blur_kernel:
            arr = blur(arr, blur_kernel, blur_sigma)
    return ImagePlane(to_u8(arr))


def degrade(plane: ImagePlane, pre: DegradePreset, seed: int, order: str = "noise_blur") -> ImagePlane:
    """Run a named degradation regime; NN returns the input unchanged."""
    if pre.noise_sigma == 0 and pre.blur_kernel == 0:
        return plane
    return degrade_custom(plane, pre.noise_sigma, pre.blur_kernel, pre.blur_sigma, seed, order)


def derive_seed(master: int, *parts) -> int:
    """Stable 64-bit sub-seed from a master seed and hashable labels."""
    h = hashlib.sha256(repr((master,) + parts).encode()).digest()
    return int.from_bytes(h[:8], "little")
