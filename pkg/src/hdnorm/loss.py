"""SSI and hierarchical (HDN) losses with analytical gradients.

The per-pixel loss at location i averages, over the pixel's surviving
contexts, the absolute difference between the median/MAD-normalized
prediction and ground truth. The outer mean runs over pixels that kept
at least one context after filtering.

Context filtering: contexts with fewer than min_context joint-valid
pixels are dropped (a singleton context normalizes to 0/0), and contexts
whose ground-truth MAD is <= eps carry no relative-depth signal and are
dropped when gt_degenerate_skip is set.

Gradients treat the median's argsort selection and every sign() as
locally constant; the loss is piecewise smooth and tests skip tie
neighborhoods.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .contexts import ContextHierarchy, LevelSpec, batch_context, build_hierarchy
from .depth_core import DepthMap
from .errors import DegenerateInputError, EmptyInputError, ParameterError, ShapeMismatchError
from .normalization import DEFAULT_EPS


@dataclass(frozen=True)
class LossConfig:
    hierarchy: ContextHierarchy
    eps: float = DEFAULT_EPS
    min_context: int = 2
    gt_degenerate_skip: bool = True

    def __post_init__(self):
        if self.eps <= 0:
            raise ParameterError(f"eps must be > 0, got {self.eps}")
        if self.min_context < 2:
            raise ParameterError(f"min_context must be >= 2, got {self.min_context}")


@dataclass(frozen=True)
class LossReport:
    value: float
    gradient: Optional[np.ndarray]
    per_level: list
    used_pixels: int


def _check_pair(pred: DepthMap, gt: DepthMap) -> np.ndarray:
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise ShapeMismatchError(
            f"pred {pred.height}x{pred.width} vs gt {gt.height}x{gt.width}")
    joint = pred.valid & gt.valid
    if not joint.any():
        raise EmptyInputError("no jointly valid pixels")
    return joint


def _surviving_contexts(pred, gt, cfg):
    """Per level, the contexts restricted to joint-valid pixels that pass
    the size and gt-degeneracy filters."""
    joint = _check_pair(pred, gt).ravel()
    gf = gt.values.ravel()
    survivors = []
    for part in cfg.hierarchy.levels:
        kept = []
        for ctx in part.contexts:
            idx = ctx[joint[ctx]]
            if idx.size < cfg.min_context:
                continue
            gvals = gf[idx]
            gm = np.median(gvals)
            gmad = np.mean(np.abs(gvals - gm))
            if cfg.gt_degenerate_skip and gmad <= cfg.eps:
                continue
            ng = (gvals - gm) / max(gmad, cfg.eps)
            kept.append((idx, ng))
        survivors.append((part.level_tag, kept))
    return survivors


def hdn_loss(pred: DepthMap, gt: DepthMap, cfg: LossConfig,
             with_gradient: bool = False) -> LossReport:
    """Hierarchical loss over cfg.hierarchy (built from this gt)."""
    survivors = _surviving_contexts(pred, gt, cfg)
    pf = pred.values.ravel()
    npix = pf.size
    contrib = np.zeros(npix)
    counts = np.zeros(npix, dtype=np.int64)
    per_level = []
    for tag, kept in survivors:
        level_sum, level_n = 0.0, 0
        for idx, ng in kept:
            pvals = pf[idx]
            pm = np.median(pvals)
            pmad = np.mean(np.abs(pvals - pm))
            res = (pvals - pm) / max(pmad, cfg.eps) - ng
            a = np.abs(res)
            contrib[idx] += a
            counts[idx] += 1
            level_sum += a.sum()
            level_n += a.size
        per_level.append((tag, level_sum / level_n if level_n else 0.0))
    used = counts > 0
    m_used = int(used.sum())
    if m_used == 0:
        raise DegenerateInputError("all contexts filtered out")
    value = float(np.mean(contrib[used] / counts[used]))
    gradient = None
    if with_gradient:
        gradient = _accumulate_gradient(pf, survivors, counts, m_used, cfg.eps)
        gradient = gradient.reshape(pred.values.shape)
    return LossReport(value=value, gradient=gradient, per_level=per_level,
                      used_pixels=m_used)


def hdn_gradient(pred: DepthMap, gt: DepthMap, cfg: LossConfig) -> np.ndarray:
    """Analytical d(loss)/d(pred) as an H x W array; zero at invalid
    pixels and at pixels with no surviving context."""
    return hdn_loss(pred, gt, cfg, with_gradient=True).gradient


def _median_derivative(values: np.ndarray) -> np.ndarray:
    """d median / d value_k for the even/odd median rule, holding the
    sort order fixed."""
    n = values.size
    order = np.argsort(values, kind="stable")
    e = np.zeros(n)
    if n % 2 == 1:
        e[order[n // 2]] = 1.0
    else:
        e[order[n // 2 - 1]] = 0.5
        e[order[n // 2]] = 0.5
    return e


def _accumulate_gradient(pf, survivors, counts, m_used, eps):
    grad = np.zeros(pf.size)
    for _tag, kept in survivors:
        for idx, ng in kept:
            d = pf[idx]
            n = d.size
            m = np.median(d)
            dev = d - m
            madv = np.mean(np.abs(dev))
            s = max(madv, eps)
            res = dev / s - ng
            # deadband so numerically-affine predictions (residuals at
            # rounding noise) get an exactly zero gradient
            sig = np.where(np.abs(res) > 1e-12, np.sign(res), 0.0)
            w = 1.0 / (m_used * counts[idx])
            e = _median_derivative(d)
            if madv > eps:
                sgn_dev = np.sign(dev)
                ds = (sgn_dev - e * sgn_dev.sum()) / n
            else:
                ds = np.zeros(n)
            A = float(np.sum(w * sig))
            B = float(np.sum(w * sig * dev))
            grad[idx] += w * sig / s - e * (A / s) - ds * (B / s**2)
    return grad


def ssi_loss(pred: DepthMap, gt: DepthMap, eps: float = DEFAULT_EPS) -> LossReport:
    """Scale-and-shift invariant loss over the global joint-valid context."""
    joint = _check_pair(pred, gt)
    idx = np.flatnonzero(joint.ravel())
    p = pred.values.ravel()[idx]
    g = gt.values.ravel()[idx]
    pm, gm = np.median(p), np.median(g)
    pn = (p - pm) / max(np.mean(np.abs(p - pm)), eps)
    gn = (g - gm) / max(np.mean(np.abs(g - gm)), eps)
    value = float(np.mean(np.abs(pn - gn)))
    return LossReport(value=value, gradient=None,
                      per_level=[("global", value)], used_pixels=idx.size)


def batch_ssi_loss(preds: Sequence[DepthMap], gts: Sequence[DepthMap],
                   eps: float = DEFAULT_EPS) -> LossReport:
    """SSI loss with a single context spanning all maps' joint-valid
    pixels (batch-level normalization)."""
    if not preds or len(preds) != len(gts):
        raise EmptyInputError("batch_ssi_loss needs matching non-empty lists")
    pvals, gvals = [], []
    for pred, gt in zip(preds, gts):
        joint = _check_pair(pred, gt)
        idx = np.flatnonzero(joint.ravel())
        pvals.append(pred.values.ravel()[idx])
        gvals.append(gt.values.ravel()[idx])
    p = np.concatenate(pvals)
    g = np.concatenate(gvals)
    pm, gm = np.median(p), np.median(g)
    pn = (p - pm) / max(np.mean(np.abs(p - pm)), eps)
    gn = (g - gm) / max(np.mean(np.abs(g - gm)), eps)
    value = float(np.mean(np.abs(pn - gn)))
    return LossReport(value=value, gradient=None,
                      per_level=[("batch", value)], used_pixels=p.size)


def local_only_loss(pred: DepthMap, gt: DepthMap, kind: str, S: int,
                    eps: float = DEFAULT_EPS, min_context: int = 2) -> LossReport:
    """hdn_loss with a single level of the given kind and size."""
    hierarchy = build_hierarchy(gt, LevelSpec(kind, (S,)))
    cfg = LossConfig(hierarchy=hierarchy, eps=eps, min_context=min_context)
    return hdn_loss(pred, gt, cfg)


def l1_plus_hdn(pred: DepthMap, gt: DepthMap, cfg: LossConfig,
                lam: float, with_gradient: bool = False) -> LossReport:
    """L1 regression loss plus lam times the hierarchical loss."""
    if lam < 0:
        raise ParameterError(f"lambda must be >= 0, got {lam}")
    joint = _check_pair(pred, gt)
    idx = joint.ravel()
    diff = pred.values.ravel()[idx] - gt.values.ravel()[idx]
    l1 = float(np.mean(np.abs(diff)))
    hdn = hdn_loss(pred, gt, cfg, with_gradient=with_gradient)
    gradient = None
    if with_gradient:
        gradient = np.zeros(pred.values.size)
        gradient[np.flatnonzero(idx)] = np.sign(diff) / diff.size
        gradient = gradient.reshape(pred.values.shape) + lam * hdn.gradient
    return LossReport(value=l1 + lam * hdn.value, gradient=gradient,
                      per_level=[("l1", l1)] + hdn.per_level,
                      used_pixels=hdn.used_pixels)


# ---------------------------------------------------------------------------
# Finite-difference checking support

def numerical_gradient(pred: DepthMap, gt: DepthMap, cfg: LossConfig,
                       step: float = 1e-5) -> np.ndarray:
    """Central finite differences of hdn_loss over the joint-valid pixels."""
    if step <= 0:
        raise ParameterError(f"finite-difference step must be > 0, got {step}")
    joint = _check_pair(pred, gt)
    base = np.array(pred.values)
    grad = np.zeros_like(base)
    for r, c in zip(*np.nonzero(joint)):
        for sgn in (+1, -1):
            bumped = np.array(base)
            bumped[r, c] += sgn * step
            val = hdn_loss(DepthMap(bumped, pred.valid), gt, cfg).value
            grad[r, c] += sgn * val
        grad[r, c] /= 2 * step
    return grad


def tie_mask(pred: DepthMap, gt: DepthMap, cfg: LossConfig,
             margin: float = 1e-4) -> np.ndarray:
    """Pixels near a median/sign tie, where finite differences straddle a
    kink of the piecewise-smooth loss. Conservative: if any member of a
    context is within margin of a tie, the whole context is flagged."""
    survivors = _surviving_contexts(pred, gt, cfg)
    pf = pred.values.ravel()
    tied = np.zeros(pf.size, dtype=bool)
    for _tag, kept in survivors:
        for idx, ng in kept:
            d = pf[idx]
            n = d.size
            m = np.median(d)
            dev = d - m
            madv = np.mean(np.abs(dev))
            s = max(madv, cfg.eps)
            res = dev / s - ng
            srt = np.sort(d)
            middles = ([srt[n // 2]] if n % 2 == 1
                       else [srt[n // 2 - 1], srt[n // 2]])
            # sign(dev) flips; the middle's own dev is identically zero
            nonmid = np.abs(dev) > 0
            flag = bool(np.any(np.abs(dev[nonmid]) < margin))
            # order crossings that reselect the median
            for mv in middles:
                dist = np.abs(d - mv)
                if np.any(dist[dist > 0] < margin):
                    flag = True
            # residual sign flips, scaled by the normalization slope
            if np.min(np.abs(res)) < margin * max(1.0, 1.0 / s):
                flag = True
            # clamp branch switch
            if abs(madv - cfg.eps) < margin:
                flag = True
            if flag:
                tied[idx] = True
    return tied.reshape(pred.values.shape)
