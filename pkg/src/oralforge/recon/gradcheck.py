"""Finite-difference verification of the analytic gradients.

Runs the exact training-loss code path (both dice losses, end to end
through patch sampling) in float64. Numeric derivatives use Richardson-
extrapolated central differences (evaluations at +-eps and +-eps/2), which
cancels the quadratic curvature term of the dice losses. Weights whose
perturbation flips a ReLU mask or a pooling argmax inside the stencil are
resampled: the loss is not differentiable there, so neither side of the
comparison is defined.
"""
from __future__ import annotations

import hashlib

import numpy as np

from . import layers as L
from .losses import recon_loss, recon_loss_grad, seg_loss, seg_loss_grad
from .net import (NetParams, feature_backward, feature_forward, recon_backward,
                  recon_forward, seg_backward, seg_forward)

__all__ = ["grad_check", "total_loss_and_grads"]


def _sample_patches(fmap: np.ndarray, centers, half: float, patch: int):
    outs, caches = [], []
    for cx, cy in centers:
        out, cache = L.bilinear_patch(fmap, cx, cy, half, patch)
        outs.append(out)
        caches.append(cache)
    return np.stack(outs), caches


def _forward_all(p: NetParams, x, gt_mask, gt_vols, centers):
    cfg = p.config
    half = cfg.patch_size / 2.0
    fmap, fcache = feature_forward(x[None, :, :, None], p)
    probs, scache = seg_forward(fmap, p)
    l_seg = seg_loss(probs[0], gt_mask)
    patches, pcaches = _sample_patches(fmap[0], centers, half, cfg.patch_size)
    vols, rcache = recon_forward(patches, p)
    l_rec = recon_loss(vols, gt_vols)
    return l_seg, l_rec, fmap, probs, vols, fcache, scache, pcaches, rcache


def _selection_signature(fcache, scache, rcache) -> bytes:
    """Digest of every ReLU mask and pooling argmax in the caches."""
    h = hashlib.sha256()
    for cache in (fcache, scache, rcache):
        for key in sorted(cache):
            val = cache[key]
            if key.startswith("r") and isinstance(val, np.ndarray) and val.dtype == bool:
                h.update(val.tobytes())
            elif key.startswith("p") and isinstance(val, tuple):
                arg = val[0]
                if isinstance(arg, np.ndarray):
                    h.update(arg.tobytes())
    return h.digest()


def total_loss_and_grads(p: NetParams, x: np.ndarray, gt_mask: np.ndarray,
                         gt_vols: np.ndarray, centers) -> tuple[float, dict]:
    """L_seg + L_recon and analytic gradients for one image.

    x: (H, W); gt_mask: (H, W, K); gt_vols: (T, D, D, D); centers: T patch
    centers in (x, y) pixel coordinates.
    """
    l_seg, l_rec, fmap, probs, vols, fcache, scache, pcaches, rcache = \
        _forward_all(p, x, gt_mask, gt_vols, centers)

    grads: dict[str, np.ndarray] = {}
    dprobs = seg_loss_grad(probs[0], gt_mask)[None]
    dfmap_seg = seg_backward(dprobs, scache, p, grads)

    dvols = recon_loss_grad(vols, gt_vols)
    dpatches = recon_backward(dvols, rcache, p, grads)
    dfmap_rec = np.zeros_like(fmap[0])
    for dp, cache in zip(dpatches, pcaches):
        dfmap_rec += L.bilinear_patch_back(dp, cache)

    feature_backward(dfmap_seg + dfmap_rec[None], fcache, p, grads)
    return l_seg + l_rec, grads


def grad_check(p: NetParams, x: np.ndarray, gt_mask: np.ndarray,
               gt_vols: np.ndarray, centers, epsilon: float = 1e-3,
               n_samples: int = 200, seed: int = 0) -> float:
    """Max relative error |analytic - numeric| / max(|a|, |n|, 1e-8)
    over weights sampled from every tensor of all three subnets."""
    p64 = p.astype(np.float64)
    x = x.astype(np.float64)
    gt_mask = gt_mask.astype(np.float64)
    gt_vols = gt_vols.astype(np.float64)

    _loss, grads = total_loss_and_grads(p64, x, gt_mask, gt_vols, centers)

    def loss_and_sig():
        out = _forward_all(p64, x, gt_mask, gt_vols, centers)
        l_seg, l_rec, fcache, scache, rcache = out[0], out[1], out[5], out[6], out[8]
        return l_seg + l_rec, _selection_signature(fcache, scache, rcache)

    _base_loss, base_sig = loss_and_sig()

    rng = np.random.default_rng(seed)
    names = sorted(p64.tensors)
    per_tensor = max(1, int(np.ceil(n_samples / len(names))))
    worst = 0.0
    for name in names:
        flat = p64.tensors[name].reshape(-1)
        order = rng.permutation(flat.size)
        checked = 0
        for i in order:
            if checked >= per_tensor:
                break
            keep = flat[i]
            vals = {}
            flipped = False
            for h in (epsilon, -epsilon, epsilon / 2, -epsilon / 2):
                flat[i] = keep + h
                loss_h, sig = loss_and_sig()
                vals[h] = loss_h
                if sig != base_sig:
                    flipped = True
                    break
            flat[i] = keep
            if flipped:
                continue   # non-differentiable inside the stencil; resample
            d_full = (vals[epsilon] - vals[-epsilon]) / (2.0 * epsilon)
            d_half = (vals[epsilon / 2] - vals[-epsilon / 2]) / epsilon
            numeric = (4.0 * d_half - d_full) / 3.0
            analytic = float(np.asarray(grads[name]).reshape(-1)[i])
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
            worst = max(worst, rel)
            checked += 1
    return worst
