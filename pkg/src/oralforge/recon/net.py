"""The three subnets: shared features, segmentation head, tooth reconstruction.

Parameters live in a flat name -> array dict (NetParams); forward passes
return caches that the matching backward passes consume. Everything is
plain numpy so the finite-difference gradient checks exercise the exact
training code path.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import layers as L
from .types import FeatureMap, K_CATEGORIES, ReconConfig, SegmentationMask, ToothVolume, XRayImage

__all__ = ["NetParams", "init_params", "feature_extract", "segment", "reconstruct_tooth",
           "feature_forward", "feature_backward", "seg_forward", "seg_backward",
           "recon_forward", "recon_backward", "SUBNETS"]

SUBNETS = ("feature", "seg", "recon")


class ShapeError(ValueError):
    pass


@dataclass
class NetParams:
    """All trainable tensors, keyed 'subnet.layer.tensor'."""
    tensors: dict[str, np.ndarray]
    config: ReconConfig

    def __post_init__(self):
        for name, a in self.tensors.items():
            if not np.isfinite(a).all():
                raise ValueError(f"non-finite values in parameter {name}")

    def subnet(self, prefix: str) -> dict[str, np.ndarray]:
        return {k: v for k, v in self.tensors.items() if k.startswith(prefix + ".")}

    def layer_names(self, prefix: str) -> list[str]:
        seen = []
        for k in self.tensors:
            if k.startswith(prefix + "."):
                base = k.rsplit(".", 1)[0]
                if base not in seen:
                    seen.append(base)
        return seen

    def copy(self) -> "NetParams":
        return NetParams({k: v.copy() for k, v in self.tensors.items()}, self.config)

    def astype(self, dtype) -> "NetParams":
        return NetParams({k: v.astype(dtype) for k, v in self.tensors.items()}, self.config)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]


def _he(rng: np.random.Generator, shape, fan_in: int, dtype=np.float32) -> np.ndarray:
    return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)


def init_params(config: ReconConfig | None = None, seed: int | None = None) -> NetParams:
    cfg = config or ReconConfig()
    rng = np.random.default_rng(cfg.init_seed if seed is None else seed)
    t: dict[str, np.ndarray] = {}

    def add_conv2(name, cin, cout):
        t[f"{name}.W"] = _he(rng, (9 * cin, cout), 9 * cin)
        t[f"{name}.b"] = np.zeros(cout, dtype=np.float32)

    def add_conv1x1(name, cin, cout):
        t[f"{name}.W"] = _he(rng, (cin, cout), cin)
        t[f"{name}.b"] = np.zeros(cout, dtype=np.float32)

    def add_conv3(name, cin, cout):
        t[f"{name}.W"] = _he(rng, (27 * cin, cout), 27 * cin)
        t[f"{name}.b"] = np.zeros(cout, dtype=np.float32)

    c0, c1, c2 = cfg.enc_channels
    fc = cfg.feat_channels
    add_conv2("feature.enc0a", 1, c0)
    add_conv2("feature.enc0b", c0, c0)
    add_conv2("feature.enc1a", c0, c1)
    add_conv2("feature.enc1b", c1, c1)
    add_conv2("feature.enc2a", c1, c2)
    add_conv2("feature.enc2b", c2, c2)
    add_conv2("feature.bott", c2, c2)
    add_conv2("feature.dec2", c2 + c2, c2)
    add_conv2("feature.dec1", c2 + c1, c1)
    add_conv2("feature.dec0", c1 + c0, fc)

    add_conv2("seg.c1", fc, cfg.seg_head_channels)
    add_conv1x1("seg.out", cfg.seg_head_channels, K_CATEGORIES)

    r0, r1, r2 = cfg.recon_enc_channels
    add_conv2("recon.enc0", fc, r0)
    add_conv2("recon.enc1", r0, r1)
    add_conv2("recon.enc2", r1, r2)
    side = cfg.patch_size // 8
    seed_n = cfg.recon_seed_grid ** 3 * cfg.recon_seed_channels
    t["recon.fc.W"] = _he(rng, (side * side * r2, seed_n), side * side * r2)
    t["recon.fc.b"] = np.zeros(seed_n, dtype=np.float32)
    d0, d1, d2 = cfg.recon_dec_channels
    add_conv3("recon.dec0", cfg.recon_seed_channels, d0)
    add_conv3("recon.dec1", d0, d1)
    add_conv3("recon.dec2", d1, d2)
    add_conv1x1("recon.out", d2, 1)
    return NetParams(t, cfg)


def _conv(x, p: NetParams, name: str):
    W, b = p[f"{name}.W"], p[f"{name}.b"]
    try:
        return L.conv2d(x, W.astype(x.dtype), b.astype(x.dtype))
    except ValueError as e:
        raise ShapeError(f"layer {name}: {e}") from e


def _pad_to_multiple(x: np.ndarray, m: int = 8):
    n, h, w, c = x.shape
    ph = (-h) % m
    pw = (-w) % m
    if ph or pw:
        x = np.pad(x, ((0, 0), (0, ph), (0, pw), (0, 0)))
    return x, (h, w)


def feature_forward(x: np.ndarray, p: NetParams):
    """x: (N, H, W, 1) -> feature map (N, H, W, C) with caches."""
    if x.ndim != 4 or x.shape[-1] != 1:
        raise ShapeError(f"feature subnet expects (N, H, W, 1), got {x.shape}")
    x, hw = _pad_to_multiple(x)
    cache = {"hw": hw}

    h, cache["e0a"] = _conv(x, p, "feature.enc0a")
    h, cache["r0a"] = L.relu(h)
    h, cache["e0b"] = _conv(h, p, "feature.enc0b")
    f0, cache["r0b"] = L.relu(h)
    h, cache["p0"] = L.maxpool2(f0)

    h, cache["e1a"] = _conv(h, p, "feature.enc1a")
    h, cache["r1a"] = L.relu(h)
    h, cache["e1b"] = _conv(h, p, "feature.enc1b")
    f1, cache["r1b"] = L.relu(h)
    h, cache["p1"] = L.maxpool2(f1)

    h, cache["e2a"] = _conv(h, p, "feature.enc2a")
    h, cache["r2a"] = L.relu(h)
    h, cache["e2b"] = _conv(h, p, "feature.enc2b")
    f2, cache["r2b"] = L.relu(h)
    h, cache["p2"] = L.maxpool2(f2)

    h, cache["bott"] = _conv(h, p, "feature.bott")
    h, cache["rb"] = L.relu(h)

    h, cache["u2"] = L.upsample2(h)
    h = np.concatenate([h, f2], axis=-1)
    cache["cat2"] = f2.shape[-1]
    h, cache["d2"] = _conv(h, p, "feature.dec2")
    h, cache["rd2"] = L.relu(h)

    h, cache["u1"] = L.upsample2(h)
    h = np.concatenate([h, f1], axis=-1)
    cache["cat1"] = f1.shape[-1]
    h, cache["d1"] = _conv(h, p, "feature.dec1")
    h, cache["rd1"] = L.relu(h)

    h, cache["u0"] = L.upsample2(h)
    h = np.concatenate([h, f0], axis=-1)
    cache["cat0"] = f0.shape[-1]
    h, cache["d0"] = _conv(h, p, "feature.dec0")
    fmap, cache["rd0"] = L.relu(h)

    oh, ow = hw
    return fmap[:, :oh, :ow, :], cache


def feature_backward(dfmap: np.ndarray, cache, p: NetParams, grads: dict):
    def acc(name, dW, db):
        grads[f"{name}.W"] = grads.get(f"{name}.W", 0) + dW
        grads[f"{name}.b"] = grads.get(f"{name}.b", 0) + db

    oh, ow = cache["hw"]
    n = dfmap.shape[0]
    full_h = cache["rd0"].shape[1]
    full_w = cache["rd0"].shape[2]
    if (full_h, full_w) != (oh, ow):
        pad = np.zeros((n, full_h, full_w, dfmap.shape[-1]), dtype=dfmap.dtype)
        pad[:, :oh, :ow, :] = dfmap
        dfmap = pad

    d = L.relu_back(dfmap, cache["rd0"])
    d, dW, db = L.conv2d_back(d, cache["d0"], p["feature.dec0.W"].astype(d.dtype))
    acc("feature.dec0", dW, db)
    k0 = cache["cat0"]
    d_up, d_f0 = d[..., :-k0], d[..., -k0:]
    d = L.upsample2_back(d_up, cache["u0"])

    d = L.relu_back(d, cache["rd1"])
    d, dW, db = L.conv2d_back(d, cache["d1"], p["feature.dec1.W"].astype(d.dtype))
    acc("feature.dec1", dW, db)
    k1 = cache["cat1"]
    d_up, d_f1 = d[..., :-k1], d[..., -k1:]
    d = L.upsample2_back(d_up, cache["u1"])

    d = L.relu_back(d, cache["rd2"])
    d, dW, db = L.conv2d_back(d, cache["d2"], p["feature.dec2.W"].astype(d.dtype))
    acc("feature.dec2", dW, db)
    k2 = cache["cat2"]
    d_up, d_f2 = d[..., :-k2], d[..., -k2:]
    d = L.upsample2_back(d_up, cache["u2"])

    d = L.relu_back(d, cache["rb"])
    d, dW, db = L.conv2d_back(d, cache["bott"], p["feature.bott.W"].astype(d.dtype))
    acc("feature.bott", dW, db)

    d = L.maxpool2_back(d, cache["p2"])
    d = d + d_f2
    d = L.relu_back(d, cache["r2b"])
    d, dW, db = L.conv2d_back(d, cache["e2b"], p["feature.enc2b.W"].astype(d.dtype))
    acc("feature.enc2b", dW, db)
    d = L.relu_back(d, cache["r2a"])
    d, dW, db = L.conv2d_back(d, cache["e2a"], p["feature.enc2a.W"].astype(d.dtype))
    acc("feature.enc2a", dW, db)

    d = L.maxpool2_back(d, cache["p1"])
    d = d + d_f1
    d = L.relu_back(d, cache["r1b"])
    d, dW, db = L.conv2d_back(d, cache["e1b"], p["feature.enc1b.W"].astype(d.dtype))
    acc("feature.enc1b", dW, db)
    d = L.relu_back(d, cache["r1a"])
    d, dW, db = L.conv2d_back(d, cache["e1a"], p["feature.enc1a.W"].astype(d.dtype))
    acc("feature.enc1a", dW, db)

    d = L.maxpool2_back(d, cache["p0"])
    d = d + d_f0
    d = L.relu_back(d, cache["r0b"])
    d, dW, db = L.conv2d_back(d, cache["e0b"], p["feature.enc0b.W"].astype(d.dtype))
    acc("feature.enc0b", dW, db)
    d = L.relu_back(d, cache["r0a"])
    d, dW, db = L.conv2d_back(d, cache["e0a"], p["feature.enc0a.W"].astype(d.dtype))
    acc("feature.enc0a", dW, db)
    return d


def seg_forward(fmap: np.ndarray, p: NetParams):
    """fmap: (N, H, W, C) -> probabilities (N, H, W, K) with caches."""
    if fmap.shape[-1] != p.config.feat_channels:
        raise ShapeError(f"seg head expects C={p.config.feat_channels}, got {fmap.shape[-1]}")
    cache = {}
    h, cache["c1"] = _conv(fmap, p, "seg.c1")
    h, cache["r1"] = L.relu(h)
    W, b = p["seg.out.W"], p["seg.out.b"]
    logits = h @ W.astype(h.dtype) + b.astype(h.dtype)
    cache["h"] = h
    probs, cache["sig"] = L.sigmoid(logits)
    return probs, cache


def seg_backward(dprobs: np.ndarray, cache, p: NetParams, grads: dict):
    d = L.sigmoid_back(dprobs, cache["sig"])
    h = cache["h"]
    grads["seg.out.W"] = grads.get("seg.out.W", 0) + h.reshape(-1, h.shape[-1]).T @ d.reshape(-1, d.shape[-1])
    grads["seg.out.b"] = grads.get("seg.out.b", 0) + d.sum(axis=(0, 1, 2))
    d = d @ p["seg.out.W"].astype(d.dtype).T
    d = L.relu_back(d, cache["r1"])
    d, dW, db = L.conv2d_back(d, cache["c1"], p["seg.c1.W"].astype(d.dtype))
    grads["seg.c1.W"] = grads.get("seg.c1.W", 0) + dW
    grads["seg.c1.b"] = grads.get("seg.c1.b", 0) + db
    return d


def recon_forward(patches: np.ndarray, p: NetParams):
    """patches: (N, S, S, C) -> occupancy probabilities (N, D, D, D)."""
    cfg = p.config
    if patches.shape[1:] != (cfg.patch_size, cfg.patch_size, cfg.feat_channels):
        raise ShapeError(f"recon subnet expects (N, {cfg.patch_size}, {cfg.patch_size}, "
                         f"{cfg.feat_channels}), got {patches.shape}")
    cache = {}
    h, cache["e0"] = _conv(patches, p, "recon.enc0")
    h, cache["r0"] = L.relu(h)
    h, cache["p0"] = L.maxpool2(h)
    h, cache["e1"] = _conv(h, p, "recon.enc1")
    h, cache["r1"] = L.relu(h)
    h, cache["p1"] = L.maxpool2(h)
    h, cache["e2"] = _conv(h, p, "recon.enc2")
    h, cache["r2"] = L.relu(h)
    h, cache["p2"] = L.maxpool2(h)

    h, cache["fc"] = L.dense(h, p["recon.fc.W"].astype(h.dtype), p["recon.fc.b"].astype(h.dtype))
    h, cache["rfc"] = L.relu(h)
    g = cfg.recon_seed_grid
    h = h.reshape(h.shape[0], g, g, g, cfg.recon_seed_channels)
    cache["seed_shape"] = h.shape

    for i in range(3):
        h, cache[f"zu{i}"] = L.zero_upsample3(h)
        W = p[f"recon.dec{i}.W"].astype(h.dtype)
        b = p[f"recon.dec{i}.b"].astype(h.dtype)
        h, cache[f"d{i}"] = L.conv3d(h, W, b)
        h, cache[f"rd{i}"] = L.relu(h)

    W, b = p["recon.out.W"], p["recon.out.b"]
    logits = h @ W.astype(h.dtype) + b.astype(h.dtype)
    cache["hout"] = h
    probs, cache["sig"] = L.sigmoid(logits)
    return probs[..., 0], cache


def recon_backward(dvols: np.ndarray, cache, p: NetParams, grads: dict):
    def acc(name, dW, db):
        grads[f"{name}.W"] = grads.get(f"{name}.W", 0) + dW
        grads[f"{name}.b"] = grads.get(f"{name}.b", 0) + db

    d = L.sigmoid_back(dvols[..., None], cache["sig"])
    h = cache["hout"]
    acc("recon.out", h.reshape(-1, h.shape[-1]).T @ d.reshape(-1, d.shape[-1]),
        d.sum(axis=(0, 1, 2, 3)))
    d = d @ p["recon.out.W"].astype(d.dtype).T

    for i in (2, 1, 0):
        d = L.relu_back(d, cache[f"rd{i}"])
        d, dW, db = L.conv3d_back(d, cache[f"d{i}"], p[f"recon.dec{i}.W"].astype(d.dtype))
        acc(f"recon.dec{i}", dW, db)
        d = L.zero_upsample3_back(d, cache[f"zu{i}"])

    d = d.reshape(d.shape[0], -1)
    d = L.relu_back(d, cache["rfc"])
    d, dW, db = L.dense_back(d, cache["fc"], p["recon.fc.W"].astype(d.dtype))
    acc("recon.fc", dW, db)

    d = L.maxpool2_back(d, cache["p2"])
    d = L.relu_back(d, cache["r2"])
    d, dW, db = L.conv2d_back(d, cache["e2"], p["recon.enc2.W"].astype(d.dtype))
    acc("recon.enc2", dW, db)
    d = L.maxpool2_back(d, cache["p1"])
    d = L.relu_back(d, cache["r1"])
    d, dW, db = L.conv2d_back(d, cache["e1"], p["recon.enc1.W"].astype(d.dtype))
    acc("recon.enc1", dW, db)
    d = L.maxpool2_back(d, cache["p0"])
    d = L.relu_back(d, cache["r0"])
    d, dW, db = L.conv2d_back(d, cache["e0"], p["recon.enc0.W"].astype(d.dtype))
    acc("recon.enc0", dW, db)
    return d


# public single-sample wrappers (the spec-level operations)

def feature_extract(xray: XRayImage | np.ndarray, p: NetParams) -> FeatureMap:
    x = xray.intensity if isinstance(xray, XRayImage) else np.asarray(xray)
    fmap, _ = feature_forward(x[None, :, :, None].astype(np.float32), p)
    return FeatureMap(fmap[0])


def segment(fmap: FeatureMap | np.ndarray, p: NetParams) -> SegmentationMask:
    f = fmap.data if isinstance(fmap, FeatureMap) else np.asarray(fmap)
    probs, _ = seg_forward(f[None].astype(f.dtype), p)
    return SegmentationMask(probs[0])


def reconstruct_tooth(patch: np.ndarray, p: NetParams, category_index: int = 0) -> ToothVolume:
    vols, _ = recon_forward(patch[None].astype(patch.dtype), p)
    return ToothVolume(vols[0], category_index)
