"""Minimal numpy layer primitives with explicit forward/backward passes.

All activations are (N, H, W, C) for 2D and (N, D, D, D, C) for 3D, kept in
the input dtype (float32 for training, float64 for gradient checking).
Convolutions are same-padding stride-1 via im2col; each forward returns
(y, cache) and the matching backward consumes (dy, cache).
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "conv2d", "conv2d_back", "conv3d", "conv3d_back",
    "maxpool2", "maxpool2_back", "upsample2", "upsample2_back",
    "zero_upsample3", "zero_upsample3_back",
    "dense", "dense_back", "relu", "relu_back", "sigmoid", "sigmoid_back",
    "bilinear_patch", "bilinear_patch_back",
]


def _im2col2d(x: np.ndarray) -> np.ndarray:
    n, h, w, c = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    cols = [xp[:, i:i + h, j:j + w, :] for i in range(3) for j in range(3)]
    return np.concatenate(cols, axis=-1)           # (n, h, w, 9c)


def _col2im2d(dcols: np.ndarray, x_shape) -> np.ndarray:
    n, h, w, c = x_shape
    dxp = np.zeros((n, h + 2, w + 2, c), dtype=dcols.dtype)
    for k, (i, j) in enumerate((i, j) for i in range(3) for j in range(3)):
        dxp[:, i:i + h, j:j + w, :] += dcols[..., k * c:(k + 1) * c]
    return dxp[:, 1:-1, 1:-1, :]


def conv2d(x, W, b):
    """W: (9*cin, cout); 3x3 same-padding convolution."""
    cols = _im2col2d(x)
    y = cols @ W + b
    return y, (cols, x.shape)


def conv2d_back(dy, cache, W):
    cols, x_shape = cache
    n, h, w, _ = dy.shape
    dW = cols.reshape(-1, cols.shape[-1]).T @ dy.reshape(-1, dy.shape[-1])
    db = dy.sum(axis=(0, 1, 2))
    dcols = dy @ W.T
    dx = _col2im2d(dcols, x_shape)
    return dx, dW, db


def _im2col3d(x: np.ndarray) -> np.ndarray:
    n, d1, d2, d3, c = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (1, 1), (0, 0)))
    cols = [xp[:, i:i + d1, j:j + d2, k:k + d3, :]
            for i in range(3) for j in range(3) for k in range(3)]
    return np.concatenate(cols, axis=-1)           # (n, d1, d2, d3, 27c)


def _col2im3d(dcols: np.ndarray, x_shape) -> np.ndarray:
    n, d1, d2, d3, c = x_shape
    dxp = np.zeros((n, d1 + 2, d2 + 2, d3 + 2, c), dtype=dcols.dtype)
    idx = 0
    for i in range(3):
        for j in range(3):
            for k in range(3):
                dxp[:, i:i + d1, j:j + d2, k:k + d3, :] += dcols[..., idx * c:(idx + 1) * c]
                idx += 1
    return dxp[:, 1:-1, 1:-1, 1:-1, :]


def conv3d(x, W, b):
    """W: (27*cin, cout); 3x3x3 same-padding convolution."""
    cols = _im2col3d(x)
    y = cols @ W + b
    return y, (cols, x.shape)


def conv3d_back(dy, cache, W):
    cols, x_shape = cache
    dW = cols.reshape(-1, cols.shape[-1]).T @ dy.reshape(-1, dy.shape[-1])
    db = dy.sum(axis=(0, 1, 2, 3))
    dcols = dy @ W.T
    dx = _col2im3d(dcols, x_shape)
    return dx, dW, db


def maxpool2(x):
    n, h, w, c = x.shape
    r = x.reshape(n, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 2, 4, 5).reshape(n, h // 2, w // 2, 4, c)
    arg = r.argmax(axis=3)
    y = np.take_along_axis(r, arg[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    return y, (arg, x.shape)


def maxpool2_back(dy, cache):
    arg, x_shape = cache
    n, h, w, c = x_shape
    dr = np.zeros((n, h // 2, w // 2, 4, c), dtype=dy.dtype)
    np.put_along_axis(dr, arg[:, :, :, None, :], dy[:, :, :, None, :], axis=3)
    dx = dr.reshape(n, h // 2, w // 2, 2, 2, c).transpose(0, 1, 3, 2, 4, 5).reshape(n, h, w, c)
    return dx


def upsample2(x):
    y = x.repeat(2, axis=1).repeat(2, axis=2)
    return y, x.shape


def upsample2_back(dy, x_shape):
    n, h, w, c = x_shape
    return dy.reshape(n, h, 2, w, 2, c).sum(axis=(2, 4))


def zero_upsample3(x):
    """Stride-2 zero insertion: value at even indices, zero elsewhere."""
    n, d1, d2, d3, c = x.shape
    y = np.zeros((n, 2 * d1, 2 * d2, 2 * d3, c), dtype=x.dtype)
    y[:, ::2, ::2, ::2, :] = x
    return y, x.shape


def zero_upsample3_back(dy, x_shape):
    return dy[:, ::2, ::2, ::2, :]


def dense(x, W, b):
    flat = x.reshape(x.shape[0], -1)
    return flat @ W + b, (flat, x.shape)


def dense_back(dy, cache, W):
    flat, x_shape = cache
    dW = flat.T @ dy
    db = dy.sum(axis=0)
    dx = (dy @ W.T).reshape(x_shape)
    return dx, dW, db


def relu(x):
    y = np.maximum(x, 0)
    return y, (x > 0)


def relu_back(dy, mask):
    return dy * mask


def sigmoid(x):
    y = 1.0 / (1.0 + np.exp(-x))
    return y, y


def sigmoid_back(dy, y):
    return dy * y * (1.0 - y)


def bilinear_patch(fmap: np.ndarray, cx: float, cy: float, half: float,
                   patch: int):
    """Square crop of side 2*half around (cx, cy), resampled to patch^2.

    fmap: (H, W, C) in (row=y, col=x) indexing. Out-of-bounds reads are
    zero-padded. Returns the patch plus the gather geometry for the
    backward scatter.
    """
    h, w, c = fmap.shape
    t = (np.arange(patch, dtype=np.float64) + 0.5) / patch
    xs = cx - half + t * 2 * half - 0.5
    ys = cy - half + t * 2 * half - 0.5
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = (xs - x0).astype(fmap.dtype)
    fy = (ys - y0).astype(fmap.dtype)

    out = np.zeros((patch, patch, c), dtype=fmap.dtype)
    corners = []
    for dy_c, wy in ((0, 1.0 - fy), (1, fy)):
        for dx_c, wx in ((0, 1.0 - fx), (1, fx)):
            yy = y0 + dy_c
            xx = x0 + dx_c
            oky = (yy >= 0) & (yy < h)
            okx = (xx >= 0) & (xx < w)
            yc = np.clip(yy, 0, h - 1)
            xc = np.clip(xx, 0, w - 1)
            wgt = (wy[:, None] * wx[None, :]) * (oky[:, None] & okx[None, :])
            out += fmap[yc[:, None], xc[None, :], :] * wgt[..., None].astype(fmap.dtype)
            corners.append((yc, xc, wgt.astype(fmap.dtype)))
    return out, (corners, fmap.shape)


def bilinear_patch_back(dpatch, cache):
    corners, fmap_shape = cache
    dfmap = np.zeros(fmap_shape, dtype=dpatch.dtype)
    for yc, xc, wgt in corners:
        contrib = dpatch * wgt[..., None]
        np.add.at(dfmap, (yc[:, None], xc[None, :]), contrib)
    return dfmap
