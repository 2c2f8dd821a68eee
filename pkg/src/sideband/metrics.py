"""Full-reference quality metrics: MSE/PSNR, SSIM, temporal frame-difference loss.

SSIM uses the original configuration: 11x11 Gaussian window sigma=1.5,
K1=0.01, K2=0.03, L=255, averaged over valid window positions only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .image import FrameSequence, ImagePlane, frame_to_array

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_L = 255.0


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float
    mse: float


def _check_pair(a: ImagePlane, b: ImagePlane):
    if a.width != b.width or a.height != b.height:
        raise ParameterError(
            f"dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def mse(a: ImagePlane, b: ImagePlane) -> float:
    _check_pair(a, b)
    d = a.samples.astype(np.float64) - b.samples.astype(np.float64)
    return float(np.mean(d * d))


def psnr(a: ImagePlane, b: ImagePlane) -> float:
    """Peak SNR in dB over the 8-bit range; identical inputs give +inf."""
    e = mse(a, b)
    if e == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 * 255.0 / e)


def _ssim_window() -> np.ndarray:
    r = SSIM_WINDOW // 2
    xs = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / (2.0 * SSIM_SIGMA * SSIM_SIGMA))
    return k / k.sum()


def _filter_valid(arr: np.ndarray) -> np.ndarray:
    k = _ssim_window()
    r = SSIM_WINDOW // 2
    out = ndimage.correlate1d(arr, k, axis=0, mode="constant")
    out = ndimage.correlate1d(out, k, axis=1, mode="constant")
    return out[r:-r, r:-r]


def ssim(a: ImagePlane, b: ImagePlane) -> float:
    """Mean structural similarity; 1.0 exactly iff the images are identical."""
    _check_pair(a, b)
    if min(a.width, a.height) < SSIM_WINDOW:
        raise ParameterError(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for SSIM"
        )
    x = a.samples.astype(np.float64)
    y = b.samples.astype(np.float64)
    c1 = (SSIM_K1 * SSIM_L) ** 2
    c2 = (SSIM_K2 * SSIM_L) ** 2
    mu_x = _filter_valid(x)
    mu_y = _filter_valid(y)
    e_xx = _filter_valid(x * x)
    e_yy = _filter_valid(y * y)
    e_xy = _filter_valid(x * y)
    var_x = e_xx - mu_x * mu_x
    var_y = e_yy - mu_y * mu_y
    cov = e_xy - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def report(a: ImagePlane, b: ImagePlane) -> MetricReport:
    return MetricReport(psnr=psnr(a, b), ssim=ssim(a, b), mse=mse(a, b))


def frame_diff_loss(a: FrameSequence, b: FrameSequence) -> float:
    """Mean L1 distance between temporal frame differences, per pixel."""
    if len(a) != len(b):
        raise ParameterError(f"frame counts differ: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise ParameterError("frame-difference loss needs at least 2 frames")
    fa = [frame_to_array(f) for f in a.frames]
    fb = [frame_to_array(f) for f in b.frames]
    if fa[0].shape != fb[0].shape:
        raise ParameterError("sequences must share dimensions and plane count")
    total = 0.0
    for i in range(1, len(fa)):
        da = fa[i] - fa[i - 1]
        db = fb[i] - fb[i - 1]
        total += float(np.mean(np.abs(da - db)))
    return total / (len(fa) - 1)
