"""sideband: base-layer + edge-map side-information codec and RDO evaluation toolkit."""

__version__ = "0.1.0"

from .image import FrameSequence, ImageFrame, ImagePlane, load_pnm, resample, save_pnm, to_grayscale
from .edges import CannyParams, MetadataPlane, canny, gradient_2bit, sweep_sparsity
from .channel import DegradePreset, PRESETS, degrade, kernel_1d
from .metrics import MetricReport, frame_diff_loss, psnr, ssim
from .receiver import GateDecision, gate, reconstruct
from .rdo import RDCurve, RatePoint, build_curve, lagrangian

__all__ = [
    "__version__",
    "ImagePlane", "ImageFrame", "FrameSequence", "load_pnm", "save_pnm", "to_grayscale", "resample",
    "MetadataPlane", "CannyParams", "canny", "gradient_2bit", "sweep_sparsity",
    "DegradePreset", "PRESETS", "degrade", "kernel_1d",
    "MetricReport", "psnr", "ssim", "frame_diff_loss",
    "GateDecision", "gate", "reconstruct",
    "RDCurve", "RatePoint", "build_curve", "lagrangian",
]
