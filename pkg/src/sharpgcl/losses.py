"""Contrastive objectives over two projected views.

The main objective reweights supervised positives and negatives by learning
hardness: positives get extra weight when similarity is low (and a fixed
unit of weight on the same-origin diagonal), negatives get weight
proportional to their similarity kernel, with a debiasing correction and a
floor clamp at exp(-1/tau) keeping every per-node term positive.

Baselines implemented against their original definitions:

* ``grace_loss``  - InfoNCE with inter- and intra-view negatives
  (Zhu et al., "Deep Graph Contrastive Representation Learning", 2020).
* ``scl_loss``    - supervised contrastive loss over the 2N multiview batch
  (Khosla et al., "Supervised Contrastive Learning", 2020).
* ``debias_loss`` - InfoNCE with a debiased negative estimator
  (Chuang et al., "Debiased Contrastive Learning", 2020).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

log = logging.getLogger(__name__)


@dataclass
class HarConfig:
    """Temperature and reweighting knobs.

    ``alpha`` scales the positive hardness weights, ``beta`` the negative
    ones; ``tau_plus`` is the class prior (defaults to 1/C at call time).
    Run configs restrict alpha/beta to (0, 1]; the loss itself accepts 0 so
    the degenerate endpoints stay testable.
    """

    tau: float
    alpha: float = 1.0
    beta: float = 1.0
    tau_plus: float | None = None
    exclude_intra_self: bool = False
    per_row_minmax: bool = False
    neg_mean_negatives_only: bool = False

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if not (0 <= self.alpha <= 1) or not (0 <= self.beta <= 1):
            raise ValueError("alpha and beta must lie in [0, 1]")
        if self.tau_plus is not None and not (0 < self.tau_plus < 1):
            raise ValueError("tau_plus must lie in (0, 1)")

    def resolve_tau_plus(self, labels: np.ndarray, num_classes: int | None) -> float:
        if self.tau_plus is not None:
            return self.tau_plus
        c = num_classes if num_classes else int(np.unique(labels).size)
        return 1.0 / max(c, 2)


@dataclass
class MaskPair:
    mask_pos: np.ndarray
    mask_neg: np.ndarray


@dataclass
class SimilarityBundle:
    s: np.ndarray
    s_pos: np.ndarray
    s_neg: np.ndarray


def cosine_sim(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; 0 if either vector is zero."""
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def ftau(a: np.ndarray, b: np.ndarray, tau: float) -> float:
    """Similarity kernel exp(cos(a, b) / tau), always in [e^(-1/t), e^(1/t)]."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return float(np.exp(cosine_sim(a, b) / tau))


def build_masks(labels: np.ndarray) -> MaskPair:
    """Same-label / different-label indicator matrices (diagonal is positive)."""
    labels = np.asarray(labels)
    if np.any(labels < 0):
        raise ValueError("missing label: every node needs a class id")
    pos = (labels[:, None] == labels[None, :]).astype(np.float64)
    return MaskPair(mask_pos=pos, mask_neg=1.0 - pos)


def _normalize_rows_np(z: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    return z / np.where(norms == 0, 1.0, norms)


def similarity_bundle(z1: np.ndarray, z2: np.ndarray, masks: MaskPair,
                      config: HarConfig) -> SimilarityBundle:
    """Dense kernel sums s_ij = f(z1_i, z1_j) + f(z1_i, z2_j), split by mask.

    The anchor view is z1; the symmetrized loss resolves the asymmetry.
    """
    if z1.shape != z2.shape:
        raise ValueError(f"view shapes differ: {z1.shape} vs {z2.shape}")
    n1, n2 = _normalize_rows_np(z1), _normalize_rows_np(z2)
    intra = np.exp(n1 @ n1.T / config.tau)
    inter = np.exp(n1 @ n2.T / config.tau)
    if config.exclude_intra_self:
        np.fill_diagonal(intra, 0.0)
    s = intra + inter
    return SimilarityBundle(s=s, s_pos=s * masks.mask_pos, s_neg=s * masks.mask_neg)


def _support_minmax(s_pos: np.ndarray, mask_pos: np.ndarray, per_row: bool):
    """Min/max of s_pos over the positive-mask support (masked zeros excluded
    from the min)."""
    big = s_pos.max(initial=1.0) + 1.0
    shifted = s_pos + big * (1.0 - mask_pos)
    if per_row:
        return shifted.min(axis=1, keepdims=True), s_pos.max(axis=1, keepdims=True)
    return shifted.min(), s_pos.max()


def positive_term(s_pos: np.ndarray, alpha: float, mask_pos: np.ndarray,
                  per_row: bool = False) -> np.ndarray:
    """Reweighted positive mass per node.

    Similarities are min-max normalized over the positive support and
    inverted, so the least similar positives weigh the most; the diagonal
    (same-origin pair) always gets one extra unit of weight.
    """
    smin, smax = _support_minmax(s_pos, mask_pos, per_row)
    denom = smax - smin
    scale = np.where(denom == 0, 1.0, denom)
    sbar = np.where(denom == 0, 0.0, (smax - s_pos) / scale)
    w_pos = alpha * sbar + np.eye(s_pos.shape[0])
    return (w_pos * s_pos).sum(axis=1)


def negative_term(s_pos: np.ndarray, s_neg: np.ndarray, masks: MaskPair,
                  beta: float, tau_plus: float, tau: float,
                  mean_negatives_only: bool = False) -> np.ndarray:
    """Debias-corrected, hardness-weighted negative mass, clamped from below
    at exp(-1/tau)."""
    n = s_neg.shape[0]
    cnt_pos = masks.mask_pos.sum(axis=1)
    cnt_neg = masks.mask_neg.sum(axis=1)
    q = cnt_neg / cnt_pos
    denom_count = np.where(cnt_neg == 0, 1.0, cnt_neg) if mean_negatives_only else float(n)
    mean_neg = s_neg.sum(axis=1) / denom_count
    safe_mean = np.where(mean_neg == 0, 1.0, mean_neg)
    w_neg = beta * s_neg / safe_mean[:, None]
    raw = (-q * tau_plus * s_pos.sum(axis=1) + (w_neg * s_neg).sum(axis=1)) / (1.0 - tau_plus)
    return np.maximum(raw, np.exp(-1.0 / tau))


def har_node_losses_np(z1: np.ndarray, z2: np.ndarray, labels: np.ndarray,
                       config: HarConfig, num_classes: int | None = None) -> np.ndarray:
    """Per-node loss -log(POS / (POS + NEG)) with z1 as the anchor view
    (plain-array twin of the differentiable path)."""
    masks = build_masks(labels)
    bundle = similarity_bundle(z1, z2, masks, config)
    pos = positive_term(bundle.s_pos, config.alpha, masks.mask_pos, config.per_row_minmax)
    neg = negative_term(bundle.s_pos, bundle.s_neg, masks, config.beta,
                        config.resolve_tau_plus(labels, num_classes), config.tau,
                        config.neg_mean_negatives_only)
    return np.log(pos + neg) - np.log(pos)


def har_loss_np(z1: np.ndarray, z2: np.ndarray, labels: np.ndarray,
                config: HarConfig, num_classes: int | None = None) -> float:
    l12 = har_node_losses_np(z1, z2, labels, config, num_classes)
    l21 = har_node_losses_np(z2, z1, labels, config, num_classes)
    return float(0.5 * (l12.mean() + l21.mean()))


# ---------------------------------------------------------------------------
# Differentiable paths
# ---------------------------------------------------------------------------

def _kernel_matrices(z1: Tensor, z2: Tensor, tau: float):
    """Shared gram kernels: exp(cos/tau) within and across views."""
    n1 = ad.row_l2_normalize(z1)
    n2 = ad.row_l2_normalize(z2)
    f11 = ad.exp(ad.scalar_mul(ad.matmul(n1, ad.transpose(n1)), 1.0 / tau))
    f22 = ad.exp(ad.scalar_mul(ad.matmul(n2, ad.transpose(n2)), 1.0 / tau))
    f12 = ad.exp(ad.scalar_mul(ad.matmul(n1, ad.transpose(n2)), 1.0 / tau))
    return f11, f22, f12


def _har_direction(f_intra: Tensor, f_inter: Tensor, masks: MaskPair,
                   config: HarConfig, tau_plus: float) -> Tensor:
    n = f_intra.shape[0]
    eye = np.eye(n)
    mask_pos, mask_neg = masks.mask_pos, masks.mask_neg

    if config.exclude_intra_self:
        f_intra = ad.mul(f_intra, 1.0 - eye)
    s = ad.add(f_intra, f_inter)
    s_pos = ad.mul(s, mask_pos)
    s_neg = ad.mul(s, mask_neg)

    # min-max over the positive support; masked zeros pushed above the max
    big = float(s_pos.value.max(initial=1.0)) + 1.0
    off_support = big * (1.0 - mask_pos)
    shifted = ad.add(s_pos, off_support)
    if config.per_row_minmax:
        smax = ad.row_max(s_pos)
        smin = ad.scalar_mul(ad.row_max(ad.scalar_mul(shifted, -1.0)), -1.0)
    else:
        smax = ad.max_all(s_pos)
        smin = ad.min_all(shifted)
    denom_val = smax.value - smin.value
    live = (denom_val != 0).astype(np.float64)
    denom = ad.add(ad.sub(smax, smin), 1.0 - live)
    sbar = ad.mul(ad.div(ad.sub(smax, s_pos), denom), live)
    w_pos = ad.add(ad.scalar_mul(sbar, config.alpha), eye)
    pos = ad.row_sum(ad.mul(w_pos, s_pos))

    cnt_pos = mask_pos.sum(axis=1, keepdims=True)
    cnt_neg = mask_neg.sum(axis=1, keepdims=True)
    q = cnt_neg / cnt_pos
    neg_rowsum = ad.row_sum(s_neg)
    if config.neg_mean_negatives_only:
        mean_neg = ad.mul(neg_rowsum, 1.0 / np.where(cnt_neg == 0, 1.0, cnt_neg))
    else:
        mean_neg = ad.scalar_mul(neg_rowsum, 1.0 / n)
    dead = (neg_rowsum.value == 0).astype(np.float64)
    w_neg = ad.div(ad.scalar_mul(s_neg, config.beta), ad.add(mean_neg, dead))
    neg_mass = ad.row_sum(ad.mul(w_neg, s_neg))
    pos_correction = ad.mul(ad.row_sum(s_pos), q * tau_plus)
    raw = ad.scalar_mul(ad.sub(neg_mass, pos_correction), 1.0 / (1.0 - tau_plus))
    neg = ad.clamp_min(raw, float(np.exp(-1.0 / config.tau)))

    return ad.sub(ad.log(ad.add(pos, neg)), ad.log(pos))


def har_node_losses(z1, z2, labels: np.ndarray, config: HarConfig,
                    num_classes: int | None = None) -> Tensor:
    """Differentiable per-node losses, z1 anchoring."""
    z1, z2 = ad.as_tensor(z1), ad.as_tensor(z2)
    masks = build_masks(labels)
    tau_plus = config.resolve_tau_plus(labels, num_classes)
    f11, _, f12 = _kernel_matrices(z1, z2, config.tau)
    return _har_direction(f11, f12, masks, config, tau_plus)


def har_loss(z1, z2, labels: np.ndarray, config: HarConfig,
             num_classes: int | None = None) -> Tensor:
    """Symmetrized loss (1/2N) sum_i [l_i(z1, z2) + l_i(z2, z1)]."""
    z1, z2 = ad.as_tensor(z1), ad.as_tensor(z2)
    masks = build_masks(labels)
    tau_plus = config.resolve_tau_plus(labels, num_classes)
    f11, f22, f12 = _kernel_matrices(z1, z2, config.tau)
    l12 = _har_direction(f11, f12, masks, config, tau_plus)
    l21 = _har_direction(f22, ad.transpose(f12), masks, config, tau_plus)
    return ad.scalar_mul(ad.add(ad.mean_all(l12), ad.mean_all(l21)), 0.5)


def _grace_direction(f_intra: Tensor, f_inter: Tensor) -> Tensor:
    n = f_intra.shape[0]
    eye = np.eye(n)
    pos = ad.row_sum(ad.mul(f_inter, eye))
    denom = ad.add(ad.row_sum(f_inter), ad.row_sum(ad.mul(f_intra, 1.0 - eye)))
    return ad.sub(ad.log(denom), ad.log(pos))


def grace_loss(z1, z2, tau: float) -> Tensor:
    """Single-positive InfoNCE over both views, symmetrized and averaged."""
    z1, z2 = ad.as_tensor(z1), ad.as_tensor(z2)
    f11, f22, f12 = _kernel_matrices(z1, z2, tau)
    l12 = _grace_direction(f11, f12)
    l21 = _grace_direction(f22, ad.transpose(f12))
    return ad.scalar_mul(ad.add(ad.mean_all(l12), ad.mean_all(l21)), 0.5)


def scl_loss(z1, z2, labels: np.ndarray, tau: float) -> Tensor:
    """Supervised contrastive loss over the 2N multiview batch.

    Every same-label sample (either view, excluding the anchor itself) is a
    positive; anchors average log-probabilities over their positive set.
    """
    z1, z2 = ad.as_tensor(z1), ad.as_tensor(z2)
    labels = np.asarray(labels)
    if np.any(labels < 0):
        raise ValueError("missing label: every node needs a class id")
    both = ad.concat_rows(ad.row_l2_normalize(z1), ad.row_l2_normalize(z2))
    m = both.shape[0]
    logits = ad.scalar_mul(ad.matmul(both, ad.transpose(both)), 1.0 / tau)
    f = ad.exp(logits)
    lab2 = np.concatenate([labels, labels])
    eye = np.eye(m)
    pos_mask = (lab2[:, None] == lab2[None, :]).astype(np.float64) * (1.0 - eye)
    cnt = pos_mask.sum(axis=1, keepdims=True)
    if np.any(cnt == 0):
        log.warning("scl: %d anchors have no positives and contribute 0", int((cnt == 0).sum()))
    denom = ad.row_sum(ad.mul(f, 1.0 - eye))
    pos_avg = ad.mul(ad.row_sum(ad.mul(logits, pos_mask)), 1.0 / np.where(cnt == 0, 1.0, cnt))
    per_anchor = ad.mul(ad.sub(ad.log(denom), pos_avg), (cnt > 0).astype(np.float64))
    return ad.mean_all(per_anchor)


def _debias_direction(f_intra: Tensor, f_inter: Tensor, tau: float, tau_plus: float) -> Tensor:
    n = f_intra.shape[0]
    eye = np.eye(n)
    pos = ad.row_sum(ad.mul(f_inter, eye))
    n_neg = 2 * n - 2
    if n_neg == 0:
        return ad.scalar_mul(pos, 0.0)
    neg_sum = ad.add(ad.row_sum(ad.mul(f_inter, 1.0 - eye)),
                     ad.row_sum(ad.mul(f_intra, 1.0 - eye)))
    mean_neg = ad.scalar_mul(neg_sum, 1.0 / n_neg)
    raw = ad.scalar_mul(ad.sub(mean_neg, ad.scalar_mul(pos, tau_plus)), 1.0 / (1.0 - tau_plus))
    est = ad.clamp_min(raw, float(np.exp(-1.0 / tau)))
    denom = ad.add(pos, ad.scalar_mul(est, float(n_neg)))
    return ad.sub(ad.log(denom), ad.log(pos))


def debias_loss(z1, z2, tau: float, tau_plus: float) -> Tensor:
    """InfoNCE with the debiased negative estimator: the negative mean is
    corrected by tau_plus times the positive kernel and clamped at
    exp(-1/tau). tau_plus = 0 recovers the uniform-negative objective."""
    if not (0 <= tau_plus < 1):
        raise ValueError("tau_plus must lie in [0, 1)")
    z1, z2 = ad.as_tensor(z1), ad.as_tensor(z2)
    f11, f22, f12 = _kernel_matrices(z1, z2, tau)
    l12 = _debias_direction(f11, f12, tau, tau_plus)
    l21 = _debias_direction(f22, ad.transpose(f12), tau, tau_plus)
    return ad.scalar_mul(ad.add(ad.mean_all(l12), ad.mean_all(l21)), 0.5)


def top_k_hard_negatives(s_row: np.ndarray, neg_mask_row: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest negative similarities in one row; ties break
    toward the smaller index; fewer than k negatives returns all of them."""
    if k < 1:
        raise ValueError("k must be at least 1")
    candidates = np.flatnonzero(neg_mask_row)
    if candidates.size == 0:
        return candidates
    order = np.lexsort((candidates, -s_row[candidates]))
    return candidates[order[:min(k, candidates.size)]]
