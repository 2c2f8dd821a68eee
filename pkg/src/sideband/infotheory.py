"""Exact entropy/mutual-information computations over small discrete joints.

All logs are base 2 (bits); 0*log(0) := 0 and zero-probability conditioning
terms are skipped. Alphabets are capped at 16 symbols so every quantity is
enumerable exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InternalCheckError, ParameterError

MAX_ALPHABET = 16
SUM_TOL = 1e-12
DUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DiscreteJoint:
    """Explicit joint table q(x, y, m) with axes (X, Y, M)."""

    prob: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.prob, dtype=np.float64)
        if p.ndim != 3:
            raise ParameterError(f"joint must be 3-D over (X, Y, M), got {p.ndim}-D")
        if min(p.shape) < 1 or max(p.shape) > MAX_ALPHABET:
            raise ParameterError(f"alphabet sizes must lie in [1, {MAX_ALPHABET}]")
        if p.min() < 0:
            raise ParameterError("joint entries must be nonnegative")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise ParameterError(f"joint must sum to 1 within {SUM_TOL}, got {p.sum()!r}")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "prob", p)

    @property
    def shape(self):
        return self.prob.shape


@dataclass(frozen=True, eq=False)
class GateFunction:
    """Total mapping v(y, m) -> {0, 1}."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table)
        if t.ndim != 2:
            raise ParameterError("gate table must be 2-D over (Y, M)")
        if not np.isin(t, (0, 1)).all():
            raise ParameterError("gate values must be 0 or 1")
        t = t.astype(np.int64, copy=True)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)


_AXES = {"y": 1, "m": 2}


def _plogp_sum(joint: np.ndarray, cond: np.ndarray) -> float:
    # -sum q(x,s) log2 q(x|s) over entries with q(x,s) > 0.
    mask = joint > 0
    ratio = joint[mask] / cond[mask]
    return float(-(joint[mask] * np.log2(ratio)).sum())


def cond_entropy(q: DiscreteJoint, given=()) -> float:
    """H(X | given) in bits; `given` is a subset of {"y", "m"}."""
    axes = tuple(sorted(_AXES[g] for g in given))
    if len(set(given)) != len(tuple(given)):
        raise ParameterError(f"duplicate conditioning variables in {given!r}")
    drop = tuple(a for a in (1, 2) if a not in axes)
    joint_xs = q.prob.sum(axis=drop) if drop else q.prob
    cond_s = joint_xs.sum(axis=0, keepdims=True)
    cond = np.broadcast_to(cond_s, joint_xs.shape)
    return _plogp_sum(joint_xs, cond)


def entropy_m(q: DiscreteJoint) -> float:
    """Marginal entropy H(M) in bits."""
    pm = q.prob.sum(axis=(0, 1))
    pm = pm[pm > 0]
    return float(-(pm * np.log2(pm)).sum())


def cond_mutual_info(q: DiscreteJoint) -> float:
    """I(X; M | Y), computed two ways that must agree within 1e-10.

    Route A: H(X|Y) - H(X|Y,M). Route B: E_Y[KL(q(X,M|Y) || q(X|Y)q(M|Y))].
    Returns the KL-expectation value.
    """
    route_a = cond_entropy(q, ("y",)) - cond_entropy(q, ("y", "m"))
    p = q.prob
    q_y = p.sum(axis=(0, 2))
    q_xy = p.sum(axis=2)
    q_ym = p.sum(axis=0)
    mask = p > 0
    num = p * q_y[np.newaxis, :, np.newaxis]
    den = q_xy[:, :, np.newaxis] * q_ym[np.newaxis, :, :]
    route_b = float((p[mask] * np.log2(num[mask] / den[mask])).sum())
    if abs(route_a - route_b) > DUAL_TOL:
        raise InternalCheckError(
            f"mutual-information routes disagree: {route_a!r} vs {route_b!r}"
        )
    if route_b < -SUM_TOL:
        raise InternalCheckError(f"negative conditional mutual information: {route_b!r}")
    return route_b


def apply_gate(q: DiscreteJoint, v: GateFunction) -> DiscreteJoint:
    """Collapse rejected metadata onto the extra symbol m-tilde = bottom (last index)."""
    nx, ny, nm = q.shape
    if v.table.shape != (ny, nm):
        raise ParameterError(f"gate table must be {ny}x{nm}, got {v.table.shape}")
    out = np.zeros((nx, ny, nm + 1), dtype=np.float64)
    keep = v.table[np.newaxis, :, :].astype(np.float64)
    out[:, :, :nm] = q.prob * keep
    out[:, :, nm] = (q.prob * (1.0 - keep)).sum(axis=2)
    return DiscreteJoint(out)


@dataclass(frozen=True)
class NllReport:
    nll: float
    entropy: float
    kl: float


def nll_gap(q: DiscreteJoint, p: np.ndarray) -> NllReport:
    """Expected -log2 p(X|Y,M) decomposed as H(X|Y,M) + E[KL]; p rows sum to 1."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape != q.shape:
        raise ParameterError(f"model table must have shape {q.shape}, got {p.shape}")
    if p.min() < 0:
        raise ParameterError("model probabilities must be nonnegative")
    sums = p.sum(axis=0)
    if np.abs(sums - 1.0).max() > 1e-9:
        raise ParameterError("model conditionals p(x|y,m) must sum to 1 over x")
    ent = cond_entropy(q, ("y", "m"))
    mask = q.prob > 0
    if (p[mask] == 0).any():
        return NllReport(nll=math.inf, entropy=ent, kl=math.inf)
    nll = float(-(q.prob[mask] * np.log2(p[mask])).sum())
    q_ym = q.prob.sum(axis=0, keepdims=True)
    q_cond = np.divide(q.prob, q_ym, out=np.zeros_like(q.prob), where=q_ym > 0)
    kl = float((q.prob[mask] * np.log2(q_cond[mask] / p[mask])).sum())
    if abs(nll - (ent + kl)) > DUAL_TOL:
        raise InternalCheckError(f"NLL decomposition broken: {nll!r} != {ent!r} + {kl!r}")
    if kl < -SUM_TOL:
        raise InternalCheckError(f"negative KL term: {kl!r}")
    return NllReport(nll=nll, entropy=ent, kl=kl)


def true_conditional(q: DiscreteJoint) -> np.ndarray:
    """q(x|y,m) with uniform rows where q(y,m) = 0 (keeps rows normalized)."""
    q_ym = q.prob.sum(axis=0, keepdims=True)
    nx = q.shape[0]
    out = np.divide(q.prob, q_ym, out=np.full_like(q.prob, 1.0 / nx), where=q_ym > 0)
    return out


def metadata_entropy_bound(q: DiscreteJoint) -> tuple:
    """Return (I(X;M|Y), H(M)); the first never exceeds the second."""
    return cond_mutual_info(q), entropy_m(q)


# ---------------------------------------------------------------------------
# Sampling and the verification harness

def random_joint(rng: np.random.Generator, shape, concentration: float = 1.0, sparsity: float = 0.0) -> DiscreteJoint:
    """Dirichlet-sampled joint; `sparsity` zeroes a fraction of cells first."""
    n = int(np.prod(shape))
    alpha = np.full(n, concentration)
    flat = rng.dirichlet(alpha)
    if sparsity > 0:
        keep = rng.random(n) >= sparsity
        if not keep.any():
            keep[int(rng.integers(n))] = True
        flat = flat * keep
        flat = flat / flat.sum()
    return DiscreteJoint(flat.reshape(shape))


def random_conditional(rng: np.random.Generator, shape) -> np.ndarray:
    nx, ny, nm = shape
    out = np.empty(shape)
    for j in range(ny):
        for k in range(nm):
            out[:, j, k] = rng.dirichlet(np.ones(nx))
    return out


def random_gate(rng: np.random.Generator, ny: int, nm: int) -> GateFunction:
    return GateFunction(rng.integers(0, 2, size=(ny, nm)))


def degenerate_joints(shape) -> list:
    """Hand-built edge cases: independence, X=M copies, constants, point masses."""
    nx, ny, nm = shape
    out = []
    uniform = np.full(shape, 1.0 / (nx * ny * nm))
    out.append(DiscreteJoint(uniform))
    point = np.zeros(shape)
    point[0, 0, 0] = 1.0
    out.append(DiscreteJoint(point))
    if nx == nm:
        copy = np.zeros(shape)
        for i in range(nx):
            copy[i, 0, i] = 1.0 / nx
        out.append(DiscreteJoint(copy))
    const_m = np.zeros(shape)
    const_m[:, :, 0] = 1.0 / (nx * ny)
    out.append(DiscreteJoint(const_m))
    tiny = np.full(shape, 1e-15)
    tiny[0, 0, 0] = 1.0 - tiny.sum() + 1e-15
    out.append(DiscreteJoint(tiny / tiny.sum()))
    return out


def verify_theorem(samples: int, seed: int, shape=(4, 4, 4)) -> dict:
    """Brute-force check of the entropy-reduction results over random joints.

    Returns a summary dict with per-check pass flags and worst-case slacks.
    """
    if samples < 1:
        raise ParameterError("sample count must be >= 1")
    nx, ny, nm = shape
    rng = np.random.default_rng(seed)
    min_gap = math.inf
    min_mi = math.inf
    max_dual = 0.0
    min_gate_gap = math.inf
    max_nll_err = 0.0
    max_true_kl = 0.0
    min_bound_slack = math.inf
    joints = degenerate_joints(shape)
    for i in range(samples):
        sparsity = 0.5 if i % 4 == 3 else 0.0
        conc = 0.2 if i % 2 else 1.0
        joints.append(random_joint(rng, shape, concentration=conc, sparsity=sparsity))
    nll_every = max(1, len(joints) // max(1, min(samples, 1000)))
    for i, q in enumerate(joints):
        h_y = cond_entropy(q, ("y",))
        h_ym = cond_entropy(q, ("y", "m"))
        route_a = h_y - h_ym
        mi = cond_mutual_info(q)
        min_gap = min(min_gap, h_y - h_ym)
        min_mi = min(min_mi, mi)
        max_dual = max(max_dual, abs(route_a - mi))
        gated = apply_gate(q, random_gate(rng, ny, nm))
        min_gate_gap = min(min_gate_gap, h_y - cond_entropy(gated, ("y", "m")))
        i_mi, h_m = metadata_entropy_bound(q)
        min_bound_slack = min(min_bound_slack, h_m - i_mi)
        if i % nll_every == 0:
            rep = nll_gap(q, random_conditional(rng, shape))
            if math.isfinite(rep.nll):
                max_nll_err = max(max_nll_err, abs(rep.nll - (rep.entropy + rep.kl)))
            max_true_kl = max(max_true_kl, nll_gap(q, true_conditional(q)).kl)
    checks = {
        "entropy_reduction": min_gap >= -SUM_TOL,
        "mutual_info_nonneg": min_mi >= -SUM_TOL,
        "dual_formula_agreement": max_dual <= DUAL_TOL,
        "gated_never_increases": min_gate_gap >= -SUM_TOL,
        "nll_decomposition": max_nll_err <= DUAL_TOL,
        "true_conditional_kl_zero": max_true_kl <= SUM_TOL,
        "bitrate_bound": min_bound_slack >= -SUM_TOL,
    }
    return {
        "samples": len(joints),
        "alphabets": list(shape),
        "seed": seed,
        "passed": all(checks.values()),
        "checks": checks,
        "worst_slacks": {
            "min_entropy_gap": min_gap,
            "min_mutual_info": min_mi,
            "max_dual_disagreement": max_dual,
            "min_gated_gap": min_gate_gap,
            "max_nll_decomposition_error": max_nll_err,
            "max_true_conditional_kl": max_true_kl,
            "min_bound_slack": min_bound_slack,
        },
    }
