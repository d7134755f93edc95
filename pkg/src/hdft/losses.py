"""Training objectives: absolute-error reconstruction plus a level-weighted
pyramid term.

Both terms are sums (not means) over entries, so the default weights
follow the same calibration as the published hyperparameters.  The L1
subgradient uses sign(0) = 0.  An L2 variant of the reconstruction term
is available for sensitivity checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import pyramid


@dataclass(frozen=True)
class LossWeights:
    lam1: float = 1.0
    lam2: float = 1.0
    levels: int = 4

    def __post_init__(self):
        if self.lam1 < 0 or self.lam2 < 0:
            raise ValueError("loss weights must be nonnegative")


def _diff_sum(a: ad.Var, b, kind: str) -> ad.Var:
    b = ad.as_var(b)
    if a.shape != b.shape:
        raise ValueError(f"loss shape mismatch: {a.shape} vs {b.shape}")
    d = ad.sub(a, b)
    if kind == "l1":
        return ad.sum_all(ad.abs_val(d))
    if kind == "l2":
        return ad.sum_all(ad.mul(d, d))
    raise ValueError(f"recon kind must be l1 or l2, got {kind!r}")


def recon_loss(o1: ad.Var, gt, kind: str = "l1") -> ad.Var:
    """Sum of absolute differences over every entry of the finest output."""
    return _diff_sum(o1, gt, kind)


def pyramid_loss(outputs, targets, kind: str = "l1") -> ad.Var:
    """Weighted per-level comparison, both lists ordered coarse to fine.

    Level i (1 = finest) contributes with weight 2^(i-2) for i = 2..n;
    the finest level is excluded (it is covered by the reconstruction
    term).
    """
    n = len(outputs)
    if len(targets) != n:
        raise ValueError(f"level count mismatch: {n} outputs vs {len(targets)} targets")
    total = None
    for i in range(2, n + 1):
        pos = n - i
        term = _diff_sum(outputs[pos], targets[pos], kind) * float(2 ** (i - 2))
        total = term if total is None else ad.add(total, term)
    return total


def total_loss(out, gt: np.ndarray, weights: LossWeights = LossWeights(), kind: str = "l1") -> ad.Var:
    """lam1 * reconstruction + lam2 * pyramid term against the target's
    smoothed level stack.  ``out`` is a pipeline output (levels coarse to
    fine)."""
    rec = recon_loss(out.levels[-1], gt, kind)
    gl = list(reversed(pyramid.gaussian_levels(gt, weights.levels)))
    pyr = pyramid_loss(out.levels, gl, kind)
    return ad.add(rec * weights.lam1, pyr * weights.lam2)
