"""Contrastive losses on unit-normalised features, with analytic gradients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cpccd.errors import InvalidArgument


@dataclass(frozen=True)
class LossBreakdown:
    l_pos: float
    l_neg: float
    l_nmm: float
    l_completion: float
    l_total: float

    @classmethod
    def of(cls, l_pos: float, l_neg: float, l_completion: float = 0.0) -> LossBreakdown:
        l_nmm = nmm_loss(l_pos, l_neg)
        return cls(l_pos, l_neg, l_nmm, l_completion, total_loss(l_completion, l_nmm))


def nmm_loss(l_pos: float, l_neg: float) -> float:
    return l_pos + l_neg


def total_loss(l_completion: float, l_nmm: float) -> float:
    return l_completion + l_nmm


def _same_shape(a, b):
    if a.shape != b.shape:
        raise InvalidArgument(f"shape mismatch {a.shape} vs {b.shape}")


def positive_loss(f_clean, f_cpgt, grad: bool = False):
    """Negative mean inner product of matching (b, l) feature vectors."""
    _same_shape(f_clean, f_cpgt)
    d = f_clean.shape[-1]
    c = f_clean.reshape(-1, d)
    g = f_cpgt.reshape(-1, d)
    m = c.shape[0]
    loss = -float(np.sum(c * g)) / m
    if not grad:
        return loss
    return loss, (-g / m).reshape(f_clean.shape), (-c / m).reshape(f_cpgt.shape)


def negative_loss(f_clean, f_noisy, t: float = 1.0, grad: bool = False):
    """``t * log sum_{i != j} exp(<clean_i, noisy_j> / t)`` over all M = B*L vectors.

    Pairs cross batch boundaries; only the diagonal (same position) is
    masked. Evaluated as a max-shifted log-sum-exp.
    """
    _same_shape(f_clean, f_noisy)
    if not t > 0:
        raise InvalidArgument(f"temperature must be > 0, got {t}")
    d = f_clean.shape[-1]
    c = f_clean.reshape(-1, d)
    n = f_noisy.reshape(-1, d)
    m = c.shape[0]
    if m < 2:
        raise InvalidArgument("negative loss needs at least two feature vectors")
    z = (c @ n.T) / t
    np.fill_diagonal(z, -np.inf)
    zmax = z.max()
    e = np.exp(z - zmax)
    total = e.sum()
    loss = t * (float(zmax) + float(np.log(total)))
    if not grad:
        return loss
    w = e / total  # d loss / d sim_ij, zero on the diagonal
    return loss, (w @ n).reshape(f_clean.shape), (w.T @ c).reshape(f_noisy.shape)


def chamfer_l1_batch(pred, target, grad: bool = False):
    """Mean over the batch of the L1-accumulated Chamfer distance.

    Neighbours are chosen by Euclidean distance (first index on ties); each
    matched pair contributes ``|x - y|_1``. ``pred`` is (B, P, 3) and
    ``target`` (B, T, 3).
    """
    bsz = pred.shape[0]
    total = 0.0
    dpred = np.zeros_like(pred)
    for b in range(bsz):
        x, y = pred[b], target[b]
        diff = x[:, None, :] - y[None, :, :]
        d2 = (diff * diff).sum(axis=-1)
        nn_xy = d2.argmin(axis=1)
        nn_yx = d2.argmin(axis=0)
        r_xy = x - y[nn_xy]
        r_yx = y - x[nn_yx]
        total += np.abs(r_xy).sum() / x.shape[0] + np.abs(r_yx).sum() / y.shape[0]
        if grad:
            dpred[b] += np.sign(r_xy) / x.shape[0]
            np.add.at(dpred[b], nn_yx, -np.sign(r_yx) / y.shape[0])
    loss = float(total) / bsz
    if not grad:
        return loss
    return loss, dpred / bsz
