"""Rate-distortion orchestration: curve sweeps, Lagrangian costs, comparisons.

A curve point aggregates one (quality factor, metadata level) setting over
the whole corpus: rates are corpus means (total = base + meta by
construction), quality metrics are corpus means. Matched-quality and
matched-rate comparisons interpolate piecewise-linearly over the shared
interval on a uniform 101-sample grid.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import bilevel, dctcodec
from .channel import DegradePreset, derive_seed, degrade
from .edges import CannyParams, canny
from .errors import NoOverlapError, ParameterError
from .image import ImageFrame, resample, to_grayscale
from .metrics import psnr as psnr_of
from .metrics import ssim as ssim_of
from .receiver import DEFAULT_TAU, gate, reconstruct

GRID_SAMPLES = 101
D_KINDS = ("mse", "one_minus_ssim")


@dataclass(frozen=True)
class RatePoint:
    base_bits: float
    meta_bits: float
    total_bits: float
    psnr: float
    ssim: float
    regime: str
    reconstructor: str
    q: int
    meta_level: int  # 0 = no metadata transmitted
    tau: float


@dataclass(frozen=True)
class RDCurve:
    method: str
    d_kind: str
    lam: float
    points: tuple

    def __post_init__(self):
        if self.d_kind not in D_KINDS:
            raise ParameterError(f"d_kind must be one of {D_KINDS}, got {self.d_kind!r}")
        pts = tuple(self.points)
        if not pts:
            raise ParameterError("a curve must contain at least one point")
        for a, b in zip(pts, pts[1:]):
            if not a.total_bits < b.total_bits:
                raise ParameterError("curve points must have strictly increasing total_bits")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class LagrangianCost:
    j: float
    d: float
    lam: float
    r: float


def lagrangian(d: float, lam: float, r: float) -> LagrangianCost:
    """Operational cost J = D + lambda * R."""
    if lam < 0:
        raise ParameterError(f"lambda must be >= 0, got {lam}")
    if r < 0:
        raise ParameterError(f"rate must be >= 0, got {r}")
    return LagrangianCost(j=d + lam * r, d=d, lam=lam, r=r)


def distortion(point: RatePoint, d_kind: str) -> float:
    """Decrease-is-better distortion for a point: MSE (from PSNR) or 1 - SSIM."""
    if d_kind == "mse":
        if math.isinf(point.psnr):
            return 0.0
        return 255.0 * 255.0 * 10.0 ** (-point.psnr / 10.0)
    if d_kind == "one_minus_ssim":
        return 1.0 - point.ssim
    raise ParameterError(f"d_kind must be one of {D_KINDS}, got {d_kind!r}")


def select_min_cost(points: Sequence[RatePoint], lam: float, d_kind: str) -> int:
    """Index of the point minimizing J = D + lambda*R (first on ties)."""
    if not points:
        raise ParameterError("cannot select from an empty candidate set")
    costs = [lagrangian(distortion(p, d_kind), lam, p.total_bits).j for p in points]
    return int(np.argmin(costs))


# ---------------------------------------------------------------------------
# Curve construction

def _scaled_canny(base: CannyParams, level: int, ratio: float) -> CannyParams:
    f = ratio ** (level - 1)
    return CannyParams(base.gauss_sigma, base.low_thresh * f, base.high_thresh * f)


def _evaluate_point(args) -> tuple:
    (hr, img_idx, regime, reconstructor, q, level, scale, seed, tau, canny_base, ratio, kernel) = args
    if level > 0:
        m = canny(hr, _scaled_canny(canny_base, level, ratio))
        meta_bits = bilevel.meta_rate(bilevel.meta_encode(m))
    else:
        m = None
        meta_bits = 0
    lr = resample(hr, hr.width // scale, hr.height // scale, kernel) if scale > 1 else hr
    stream = dctcodec.base_encode(lr, q)
    base_bits = dctcodec.rate_of(stream)
    decoded = dctcodec.base_decode(stream)
    job_seed = derive_seed(seed, regime.name, img_idx, q, level)
    degraded = degrade(decoded, regime, job_seed)
    m_tilde = None
    if m is not None:
        decision = gate(degraded, m, scale, tau)
        m_tilde = m if decision.v else None
    sr = reconstruct(reconstructor, degraded, m_tilde, scale)
    return base_bits, meta_bits, psnr_of(sr, hr), ssim_of(sr, hr)


def build_curve(
    corpus: Sequence[ImageFrame],
    regime: DegradePreset,
    reconstructor: str,
    meta_levels: int,
    quality_factors: Sequence[int],
    scale: int,
    seed: int,
    lam: float,
    d_kind: str = "one_minus_ssim",
    tau: float = DEFAULT_TAU,
    canny_base: CannyParams = CannyParams(),
    sweep_ratio: float = 1.6,
    kernel: str = "bicubic",
    workers: int = 1,
    method: Optional[str] = None,
) -> RDCurve:
    """Sweep (quality factor x metadata level) over a corpus into one R-D curve."""
    if not corpus:
        raise ParameterError("corpus must not be empty")
    if not quality_factors:
        raise ParameterError("need at least one quality factor")
    if scale not in (1, 2, 4):
        raise ParameterError(f"scale must be 1, 2 or 4, got {scale}")
    if meta_levels < 0:
        raise ParameterError("meta_levels must be >= 0")
    planes = [to_grayscale(f) for f in corpus]
    for p in planes:
        if p.width % scale or p.height % scale:
            raise ParameterError(f"image {p.width}x{p.height} not divisible by scale {scale}")
    levels = list(range(1, meta_levels + 1)) if meta_levels else [0]
    grid = [(q, level) for q in quality_factors for level in levels]
    jobs = [
        (hr, i, regime, reconstructor, q, level, scale, seed, tau, canny_base, sweep_ratio, kernel)
        for (q, level) in grid
        for i, hr in enumerate(planes)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_point, jobs, chunksize=1))
    else:
        results = [_evaluate_point(j) for j in jobs]
    n = len(planes)
    points = []
    for gi, (q, level) in enumerate(grid):
        chunk = results[gi * n : (gi + 1) * n]
        base_bits = sum(r[0] for r in chunk) / n
        meta_bits = sum(r[1] for r in chunk) / n
        points.append(
            RatePoint(
                base_bits=base_bits,
                meta_bits=meta_bits,
                total_bits=base_bits + meta_bits,
                psnr=sum(r[2] for r in chunk) / n,
                ssim=sum(r[3] for r in chunk) / n,
                regime=regime.name,
                reconstructor=reconstructor,
                q=q,
                meta_level=level,
                tau=tau,
            )
        )
    points.sort(key=lambda p: p.total_bits)
    deduped = []
    for p in points:
        if deduped and p.total_bits == deduped[-1].total_bits:
            if distortion(p, d_kind) < distortion(deduped[-1], d_kind):
                deduped[-1] = p
        else:
            deduped.append(p)
    label = method or f"{regime.name}:{reconstructor}:{'meta' if meta_levels else 'nometa'}"
    return RDCurve(method=label, d_kind=d_kind, lam=lam, points=tuple(deduped))


# ---------------------------------------------------------------------------
# Matched-quality / matched-rate comparisons

@dataclass(frozen=True)
class SavingReport:
    mean_pct: float
    max_pct: float


@dataclass(frozen=True)
class GainReport:
    mean: float
    max: float


def _quality_values(curve: RDCurve, metric: str) -> np.ndarray:
    if metric == "psnr":
        return np.array([p.psnr for p in curve.points])
    if metric == "ssim":
        return np.array([p.ssim for p in curve.points])
    raise ParameterError(f"metric must be psnr or ssim, got {metric!r}")


def _rate_of_quality(curve: RDCurve, metric: str) -> tuple:
    quality = _quality_values(curve, metric)
    rates = np.array([p.total_bits for p in curve.points])
    finite = np.isfinite(quality)
    quality, rates = quality[finite], rates[finite]
    if quality.size == 0:
        raise NoOverlapError(f"curve {curve.method!r} has no finite {metric} points")
    order = np.argsort(quality, kind="stable")
    quality, rates = quality[order], rates[order]
    keep_q, keep_r = [], []
    for qv, rv in zip(quality, rates):
        if keep_q and qv == keep_q[-1]:
            keep_r[-1] = min(keep_r[-1], rv)
        else:
            keep_q.append(qv)
            keep_r.append(rv)
    return np.array(keep_q), np.array(keep_r)


def _shared_grid(a_lo, a_hi, b_lo, b_hi, what: str) -> np.ndarray:
    lo, hi = max(a_lo, b_lo), min(a_hi, b_hi)
    if lo > hi:
        raise NoOverlapError(f"curves share no {what} range: [{a_lo}, {a_hi}] vs [{b_lo}, {b_hi}]")
    return np.linspace(lo, hi, GRID_SAMPLES)


def _log2_rates(rates: np.ndarray, method: str) -> np.ndarray:
    if (rates <= 0).any():
        raise ParameterError(f"curve {method!r} has nonpositive rates; log-rate needs R > 0")
    return np.log2(rates)


def bitrate_saving_at_matched_quality(
    ref: RDCurve, test: RDCurve, metric: str, log_rate: bool = False
) -> SavingReport:
    """Mean and max percentage rate saved by `test` at equal quality.

    With log_rate, rate is interpolated on a log2 axis (Bjontegaard-style)
    before converting back to bits.
    """
    qr, rr = _rate_of_quality(ref, metric)
    qt, rt = _rate_of_quality(test, metric)
    grid = _shared_grid(qr[0], qr[-1], qt[0], qt[-1], f"{metric} quality")
    if log_rate:
        ref_rates = 2.0 ** np.interp(grid, qr, _log2_rates(rr, ref.method))
        test_rates = 2.0 ** np.interp(grid, qt, _log2_rates(rt, test.method))
    else:
        ref_rates = np.interp(grid, qr, rr)
        test_rates = np.interp(grid, qt, rt)
    saving = (ref_rates - test_rates) / ref_rates * 100.0
    return SavingReport(mean_pct=float(saving.mean()), max_pct=float(saving.max()))


def quality_gain_at_matched_rate(
    ref: RDCurve, test: RDCurve, metric: str, log_rate: bool = False
) -> GainReport:
    """Mean and max quality delta of `test` over `ref` at equal total rate."""
    def rate_quality(curve):
        quality = _quality_values(curve, metric)
        rates = np.array([p.total_bits for p in curve.points])
        finite = np.isfinite(quality)
        quality, rates = quality[finite], rates[finite]
        if quality.size == 0:
            raise NoOverlapError(f"curve {curve.method!r} has no finite {metric} points")
        if log_rate:
            rates = _log2_rates(rates, curve.method)
        return rates, quality

    rr, qr = rate_quality(ref)
    rt, qt = rate_quality(test)
    grid = _shared_grid(rr[0], rr[-1], rt[0], rt[-1], "rate")
    ref_q = np.interp(grid, rr, qr)
    test_q = np.interp(grid, rt, qt)
    gain = test_q - ref_q
    return GainReport(mean=float(gain.mean()), max=float(gain.max()))


# ---------------------------------------------------------------------------
# Emission / parsing

CSV_COLUMNS = (
    "method", "regime", "reconstructor", "q", "meta_level", "tau",
    "base_bits", "meta_bits", "total_bits", "psnr_db", "ssim",
    "d_kind", "lambda", "j",
)


def _point_row(curve: RDCurve, p: RatePoint) -> dict:
    d = distortion(p, curve.d_kind)
    return {
        "method": curve.method,
        "regime": p.regime,
        "reconstructor": p.reconstructor,
        "q": p.q,
        "meta_level": p.meta_level,
        "tau": repr(p.tau),
        "base_bits": repr(p.base_bits),
        "meta_bits": repr(p.meta_bits),
        "total_bits": repr(p.total_bits),
        "psnr_db": repr(p.psnr),
        "ssim": repr(p.ssim),
        "d_kind": curve.d_kind,
        "lambda": repr(curve.lam),
        "j": repr(lagrangian(d, curve.lam, p.total_bits).j),
    }


def emit(curves: Sequence[RDCurve], fmt: str) -> bytes:
    """Serialize curves as CSV rows or a JSON object keyed by method label."""
    if not curves:
        raise ParameterError("nothing to emit: no curves")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for curve in curves:
            for p in curve.points:
                writer.writerow(_point_row(curve, p))
        return buf.getvalue().encode()
    if fmt == "json":
        obj = {"curves": {}}
        for curve in curves:
            if curve.method in obj["curves"]:
                raise ParameterError(f"duplicate curve label {curve.method!r}")
            obj["curves"][curve.method] = {
                "d_kind": curve.d_kind,
                "lambda": curve.lam,
                "points": [
                    {k: (float(v) if k in _FLOAT_COLS else v) for k, v in _point_row(curve, p).items()}
                    for p in curve.points
                ],
            }
        return (json.dumps(obj, indent=2) + "\n").encode()
    raise ParameterError(f"format must be csv or json, got {fmt!r}")


_FLOAT_COLS = {"tau", "base_bits", "meta_bits", "total_bits", "psnr_db", "ssim", "lambda", "j"}


def _row_to_point(row: dict) -> RatePoint:
    return RatePoint(
        base_bits=float(row["base_bits"]),
        meta_bits=float(row["meta_bits"]),
        total_bits=float(row["total_bits"]),
        psnr=float(row["psnr_db"]),
        ssim=float(row["ssim"]),
        regime=row["regime"],
        reconstructor=row["reconstructor"],
        q=int(row["q"]),
        meta_level=int(row["meta_level"]),
        tau=float(row["tau"]),
    )


def parse(data: bytes, fmt: str) -> list:
    """Inverse of emit: recover the list of curves."""
    if fmt == "csv":
        reader = csv.DictReader(io.StringIO(data.decode()))
        groups: dict = {}
        for row in reader:
            groups.setdefault(row["method"], []).append(row)
        curves = []
        for method, rows in groups.items():
            curves.append(
                RDCurve(
                    method=method,
                    d_kind=rows[0]["d_kind"],
                    lam=float(rows[0]["lambda"]),
                    points=tuple(_row_to_point(r) for r in rows),
                )
            )
        return curves
    if fmt == "json":
        obj = json.loads(data.decode())
        curves = []
        for method, entry in obj["curves"].items():
            curves.append(
                RDCurve(
                    method=method,
                    d_kind=entry["d_kind"],
                    lam=float(entry["lambda"]),
                    points=tuple(_row_to_point(r) for r in entry["points"]),
                )
            )
        return curves
    raise ParameterError(f"format must be csv or json, got {fmt!r}")
