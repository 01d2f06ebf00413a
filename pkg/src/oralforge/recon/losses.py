"""Dice losses for segmentation (2D, per category) and reconstruction (3D).

dice = (2 sum(p*g) + eps) / (sum(p) + sum(g) + eps) with eps = 1.0, so an
absent category (p ~ 0, g = 0) contributes dice 1 / loss 0 instead of 0/0.
Both losses live in [0, 1]; loss is 0 only when the prediction equals a
binary ground truth up to the eps-induced bound eps/(2|G|+eps).
"""
from __future__ import annotations

import numpy as np

from .types import LossReport

__all__ = ["dice_loss", "dice_loss_grad", "seg_loss", "seg_loss_grad",
           "recon_loss", "recon_loss_grad", "LossReport"]

DICE_EPS = 1.0


def dice_loss(pred: np.ndarray, gt: np.ndarray, eps: float = DICE_EPS) -> float:
    """1 - dice for a single prediction/target pair of any shape."""
    p = pred.reshape(-1)
    g = gt.reshape(-1)
    num = 2.0 * float(p @ g) + eps
    den = float(p.sum()) + float(g.sum()) + eps
    return 1.0 - num / den


def dice_loss_grad(pred: np.ndarray, gt: np.ndarray, eps: float = DICE_EPS) -> np.ndarray:
    """d(1 - dice)/d pred, same shape as pred."""
    p = pred.reshape(-1)
    g = gt.reshape(-1)
    num = 2.0 * float(p @ g) + eps
    den = float(p.sum()) + float(g.sum()) + eps
    grad = -(2.0 * g * den - num) / (den * den)
    return grad.reshape(pred.shape).astype(pred.dtype)


def seg_loss(pred: np.ndarray, gt: np.ndarray, eps: float = DICE_EPS) -> float:
    """Mean over the K category planes of (1 - dice).

    pred, gt: (H, W, K) (or batched (N, H, W, K)); gt binary.
    """
    if pred.shape != gt.shape:
        raise ValueError(f"segmentation shapes differ: {pred.shape} vs {gt.shape}")
    k = pred.shape[-1]
    p = pred.reshape(-1, k)
    g = gt.reshape(-1, k)
    num = 2.0 * np.einsum("ik,ik->k", p, g.astype(p.dtype)) + eps
    den = p.sum(axis=0) + g.sum(axis=0) + eps
    return float(np.mean(1.0 - num / den))


def seg_loss_grad(pred: np.ndarray, gt: np.ndarray, eps: float = DICE_EPS) -> np.ndarray:
    if pred.shape != gt.shape:
        raise ValueError(f"segmentation shapes differ: {pred.shape} vs {gt.shape}")
    k = pred.shape[-1]
    p = pred.reshape(-1, k)
    g = gt.reshape(-1, k).astype(pred.dtype)
    num = 2.0 * np.einsum("ik,ik->k", p, g) + eps
    den = p.sum(axis=0) + g.sum(axis=0) + eps
    grad = -(2.0 * g * den[None, :] - num[None, :]) / (den * den)[None, :]
    return (grad / k).reshape(pred.shape).astype(pred.dtype)


def recon_loss(pred_vols: np.ndarray, gt_vols: np.ndarray, eps: float = DICE_EPS) -> float:
    """Mean over teeth of the 3D dice loss; inputs (N, D, D, D), gt binary."""
    if pred_vols.shape != gt_vols.shape:
        raise ValueError(f"volume shapes differ: {pred_vols.shape} vs {gt_vols.shape}")
    n = pred_vols.shape[0]
    p = pred_vols.reshape(n, -1)
    g = gt_vols.reshape(n, -1).astype(pred_vols.dtype)
    num = 2.0 * np.einsum("ni,ni->n", p, g) + eps
    den = p.sum(axis=1) + g.sum(axis=1) + eps
    return float(np.mean(1.0 - num / den))


def recon_loss_grad(pred_vols: np.ndarray, gt_vols: np.ndarray, eps: float = DICE_EPS) -> np.ndarray:
    n = pred_vols.shape[0]
    p = pred_vols.reshape(n, -1)
    g = gt_vols.reshape(n, -1).astype(pred_vols.dtype)
    num = 2.0 * np.einsum("ni,ni->n", p, g) + eps
    den = p.sum(axis=1) + g.sum(axis=1) + eps
    grad = -(2.0 * g * den[:, None] - num[:, None]) / (den * den)[:, None]
    return (grad / n).reshape(pred_vols.shape).astype(pred_vols.dtype)
