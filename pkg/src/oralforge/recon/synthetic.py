"""Synthetic oral phantom generator.

Each case is a procedural jaw pair: 24-32 superellipsoid teeth with
randomized size, tilt and missing entries, laid out in panoramic order
inside a flat slab volume. The panoramic X-ray is an attenuation line
integral through the slab; ground-truth masks are per-tooth projections;
ground-truth volumes are per-tooth cube crops; occlusion photos are
top-down renders of each jaw's crowns along a randomized cubic arch, with
a synthetic operator sketch around the tooth band. Everything is a pure
function of the seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from ..arch.curve import ArchCurve
from .types import (ALL_FDI, K_CATEGORIES, ReconConfig, ToothBox, ToothVolume,
                    XRayImage, fdi_from_index, index_from_fdi)

__all__ = ["SynthConfig", "SynthCase", "synth_case", "crop_side_for_box",
           "gt_boxes_from_masks"]

# relative mesiodistal widths by position 1..8 (incisors .. wisdom)
_POS_WIDTH = (0.85, 0.80, 0.95, 1.00, 1.00, 1.35, 1.30, 1.15)


@dataclass(frozen=True)
class SynthConfig:
    height: int = 128
    width: int = 256
    slab_depth: int = 48
    mm_per_px: float = 0.4
    photo_height: int = 160
    photo_width: int = 192
    photo_mm_per_px: float = 0.25
    volume_dim: int = 32


@dataclass(frozen=True)
class SynthCase:
    seed: int
    config: SynthConfig
    xray: XRayImage
    masks: np.ndarray                     # (K, H, W) bool
    volumes: dict[int, ToothVolume]       # category index -> D^3 occupancy
    boxes: list[ToothBox]
    curves: dict[str, ArchCurve]
    photos: dict[str, np.ndarray]         # jaw -> (H', W') float in [0, 1]
    sketches: dict[str, np.ndarray]       # jaw -> (k, 2) polygon, (x, y) px

    @property
    def present_categories(self) -> list[int]:
        return sorted(self.volumes)


def crop_side_for_box(box: ToothBox) -> int:
    """Cube crop side (px) used for a tooth's volume, derived from its 2D box."""
    w, h = box.size
    return int(np.ceil(1.3 * max(w, h)))


@dataclass
class _Tooth:
    cat: int
    cx: float
    cy_crown: float
    width: float
    crown_h: float
    root_h: float
    depth: float
    tilt: float
    exponent: float
    root_dir: float      # -1 root grows upward (upper jaw), +1 downward


def _layout_row(rng: np.random.Generator, cats: list[int], width_px: float,
                jitter: np.ndarray) -> dict[int, tuple[float, float]]:
    """Slot centers along x for one jaw row; returns cat -> (center, width)."""
    rel = np.array([_POS_WIDTH[c % 8] for c in cats]) * jitter
    total = rel.sum()
    scale = width_px / total
    widths = rel * scale
    rights = np.cumsum(widths)
    centers = rights - widths / 2.0
    return {c: (float(cen), float(w)) for c, cen, w in zip(cats, centers, widths)}


def _tooth_occupancy(t: _Tooth, xs: np.ndarray, ys: np.ndarray, zs: np.ndarray,
                     z_mid: float) -> np.ndarray:
    """Evaluate the implicit crown+root solid on the given sample lattices."""
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    # tilt in the x-y plane around the crown center
    ca, sa = np.cos(t.tilt), np.sin(t.tilt)
    rx = ca * (gx - t.cx) - sa * (gy - t.cy_crown)
    ry = sa * (gx - t.cx) + ca * (gy - t.cy_crown)
    rz = gz - z_mid

    def spow(v, p):
        return np.abs(v) ** p

    p = t.exponent
    crown = (spow(rx / (t.width / 2), p) + spow(ry / (t.crown_h / 2), p)
             + spow(rz / (t.depth / 2), p)) <= 1.0

    # root: tapered ellipsoid stacked against the crown
    y0 = -t.root_dir * t.crown_h * 0.25          # root starts inside the crown
    span = t.root_h
    tt = np.clip((ry - y0) * t.root_dir / max(span, 1e-6), 0.0, 1.0) if t.root_dir > 0 \
        else np.clip((y0 - ry) / max(span, 1e-6), 0.0, 1.0)
    shrink = 1.0 - 0.65 * tt
    in_y = (tt > 0.0) & (tt < 1.0)
    root = in_y & ((spow(rx / (t.width * 0.30 * shrink + 1e-9), 2.0)
                    + spow(rz / (t.depth * 0.30 * shrink + 1e-9), 2.0)) <= 1.0)
    return crown | root


def _make_teeth(rng: np.random.Generator, cfg: SynthConfig,
                present: list[int]) -> list[_Tooth]:
    h, w = cfg.height, cfg.width
    y_occl = h / 2.0 + rng.uniform(-3, 3)
    teeth: list[_Tooth] = []
    # panoramic order: upper row Q1 reversed then Q2; lower row Q4 reversed then Q3
    upper_order = [index_from_fdi(10 + p) for p in range(8, 0, -1)] + \
                  [index_from_fdi(20 + p) for p in range(1, 9)]
    lower_order = [index_from_fdi(40 + p) for p in range(8, 0, -1)] + \
                  [index_from_fdi(30 + p) for p in range(1, 9)]
    for order, root_dir in ((upper_order, -1.0), (lower_order, +1.0)):
        jitter = rng.uniform(0.92, 1.08, size=len(order))
        slots = _layout_row(rng, order, w * 0.88, jitter)
        x_off = w * 0.06
        for cat in order:
            if cat not in present:
                continue
            cx, slot_w = slots[cat]
            cx += x_off + rng.uniform(-0.8, 0.8)
            width = slot_w * rng.uniform(0.84, 0.92)
            crown_h = np.clip(width * rng.uniform(1.05, 1.35), 8, 20)
            root_h = np.clip(crown_h * rng.uniform(1.0, 1.5), 8, 22)
            depth = np.clip(width * rng.uniform(0.75, 0.95), 6, cfg.slab_depth - 10)
            gap = rng.uniform(0.5, 2.0)
            cy = y_occl - root_dir * (crown_h / 2.0 + gap)
            teeth.append(_Tooth(cat, cx, cy, width, crown_h, root_h, depth,
                                np.deg2rad(rng.uniform(-8, 8)), rng.uniform(2.4, 3.4),
                                root_dir))
    return teeth


def _random_arch(rng: np.random.Generator, cfg: SynthConfig, jaw: str) -> ArchCurve:
    w = cfg.photo_width
    cx = w / 2.0 + rng.uniform(-4, 4)
    apex_y = cfg.photo_height * rng.uniform(0.24, 0.32)
    k = rng.uniform(0.0048, 0.0062)          # 1/px
    c1 = rng.uniform(-0.06, 0.06)
    c3 = rng.uniform(-1, 1) * 2e-6
    s = cfg.photo_mm_per_px
    # y = apex + c1 (x - cx) + k (x - cx)^2 + c3 (x - cx)^3, converted to mm
    a0 = (apex_y - c1 * cx + k * cx * cx - c3 * cx ** 3) * s
    a1 = c1 - 2 * k * cx + 3 * c3 * cx * cx
    a2 = (k - 3 * c3 * cx) / s
    a3 = c3 / (s * s)
    half_span = w * rng.uniform(0.37, 0.43)
    return ArchCurve((a0, a1, a2, a3), (cx - half_span) * s, (cx + half_span) * s,
                     jaw, s)


def _render_photo(rng: np.random.Generator, cfg: SynthConfig, curve: ArchCurve,
                  teeth: list[_Tooth], jaw: str) -> np.ndarray:
    hp, wp = cfg.photo_height, cfg.photo_width
    img = np.full((hp, wp), 0.30)
    # gum band along the arch
    length = curve.total_length()
    s_band = np.linspace(0, length, 400)
    band_xy = curve.point_at_arclen(s_band) / cfg.photo_mm_per_px
    yy, xx = np.mgrid[0:hp, 0:wp]
    for bx, by in band_xy[::16]:
        img += 0.11 * np.exp(-(((xx - bx) ** 2 + (yy - by) ** 2) / (2 * 9.0 ** 2)))
    img = np.clip(img, 0, 0.45)

    jaw_teeth = sorted((t for t in teeth if (t.root_dir < 0) == (jaw == "upper")),
                       key=lambda t: t.cx)
    if jaw_teeth:
        x_lo = min(t.cx - t.width / 2 for t in jaw_teeth)
        x_hi = max(t.cx + t.width / 2 for t in jaw_teeth)
        px_to_mm = cfg.mm_per_px
        for t in jaw_teeth:
            frac = (t.cx - x_lo) / max(x_hi - x_lo, 1e-9)
            s_t = frac * length
            cx_mm, cy_mm = curve.point_at_arclen(s_t)
            (tx, ty), (nx_, ny_) = curve.frame_at(s_t)
            cxp = cx_mm / cfg.photo_mm_per_px
            cyp = cy_mm / cfg.photo_mm_per_px
            ax = t.width * px_to_mm / cfg.photo_mm_per_px / 2.0
            az = t.depth * px_to_mm / cfg.photo_mm_per_px / 2.0
            u = (xx - cxp) * tx + (yy - cyp) * ty
            v = (xx - cxp) * nx_ + (yy - cyp) * ny_
            inside = (u / ax) ** 2 + (v / az) ** 2 <= 1.0
            img[inside] = 0.78 + 0.08 * np.sin(t.cat * 2.1)
    img += gaussian_filter(rng.standard_normal((hp, wp)), 3.0) * 0.02
    return np.clip(img, 0.0, 1.0)


def _sketch_around_curve(rng: np.random.Generator, cfg: SynthConfig,
                         curve: ArchCurve, band_px: float = 13.0) -> np.ndarray:
    length = curve.total_length()
    s = np.linspace(0, length, 12)
    pts = curve.point_at_arclen(s) / cfg.photo_mm_per_px
    _t, n = curve.frame_at(s)
    jig = rng.uniform(-1.5, 1.5, size=(len(s), 2))
    outer = pts + n * band_px + jig
    inner = (pts - n * band_px + jig[::-1])[::-1]
    poly = np.concatenate([outer, inner], axis=0)
    poly[:, 0] = np.clip(poly[:, 0], 1, cfg.photo_width - 2)
    poly[:, 1] = np.clip(poly[:, 1], 1, cfg.photo_height - 2)
    return poly


def gt_boxes_from_masks(masks: np.ndarray) -> list[ToothBox]:
    boxes = []
    for k in range(masks.shape[0]):
        plane = masks[k]
        if not plane.any():
            boxes.append(ToothBox(k, present=False))
            continue
        rows = np.any(plane, axis=1)
        cols = np.any(plane, axis=0)
        ymin, ymax = np.nonzero(rows)[0][[0, -1]]
        xmin, xmax = np.nonzero(cols)[0][[0, -1]]
        boxes.append(ToothBox(k, True, int(xmin), int(ymin), int(xmax), int(ymax)))
    return boxes


def synth_case(seed: int, config: SynthConfig | None = None) -> SynthCase:
    cfg = config or SynthConfig()
    rng = np.random.default_rng(seed)
    h, w, dz = cfg.height, cfg.width, cfg.slab_depth

    count = int(rng.integers(24, 33))
    missing = rng.choice(K_CATEGORIES, size=K_CATEGORIES - count, replace=False)
    present = sorted(set(range(K_CATEGORIES)) - set(int(m) for m in missing))

    teeth = _make_teeth(rng, cfg, present)

    density = np.zeros((h, w), dtype=np.float64)     # integrated along z
    masks = np.zeros((K_CATEGORIES, h, w), dtype=bool)
    volumes: dict[int, ToothVolume] = {}
    z_mid = dz / 2.0

    for t in teeth:
        # local slab crop bounds
        pad = 3
        half = max(t.width, t.crown_h + t.root_h, t.depth) / 2.0 + pad
        x0, x1 = int(max(0, t.cx - half)), int(min(w, t.cx + half + 1))
        y0, y1 = int(max(0, t.cy_crown - half - t.root_h)), int(min(h, t.cy_crown + half + t.root_h + 1))
        xs = np.arange(x0, x1) + 0.5
        ys = np.arange(y0, y1) + 0.5
        zs = np.arange(0, dz) + 0.5
        occ = _tooth_occupancy(t, xs, ys, zs, z_mid)
        proj = occ.any(axis=2)
        masks[t.cat, y0:y1, x0:x1] |= proj.T
        density[y0:y1, x0:x1] += occ.sum(axis=2).T * 1.0

    boxes = gt_boxes_from_masks(masks)
    for t in teeth:
        box = boxes[t.cat]
        if not box.present:
            continue
        side = crop_side_for_box(box)
        bcx, bcy = box.center
        d = cfg.volume_dim
        samp = (np.arange(d) + 0.5) * side / d
        xs = bcx - side / 2.0 + samp
        ys = bcy - side / 2.0 + samp
        zs = z_mid - side / 2.0 + samp
        occ = _tooth_occupancy(t, xs, ys, zs, z_mid)
        volumes[t.cat] = ToothVolume(occ.astype(np.float32), t.cat)

    # bone bands and soft tissue; attenuation line integral
    yy = np.arange(h)[:, None]
    y_occl = h / 2.0
    bone = (np.exp(-((yy - (y_occl - h * 0.27)) / (h * 0.16)) ** 2)
            + np.exp(-((yy - (y_occl + h * 0.27)) / (h * 0.16)) ** 2))
    path = density * 1.0 + bone * dz * 0.10 + dz * 0.03
    path = path + gaussian_filter(rng.standard_normal((h, w)), 6.0) * 1.2
    xray = 1.0 - np.exp(-path * 0.06)
    xray = np.clip(xray / max(xray.max(), 1e-9), 0.0, 1.0)

    curves: dict[str, ArchCurve] = {}
    photos: dict[str, np.ndarray] = {}
    sketches: dict[str, np.ndarray] = {}
    for jaw in ("upper", "lower"):
        curve = _random_arch(rng, cfg, jaw)
        curves[jaw] = curve
        photos[jaw] = _render_photo(rng, cfg, curve, teeth, jaw)
        sketches[jaw] = _sketch_around_curve(rng, cfg, curve)

    return SynthCase(seed, cfg, XRayImage(xray.astype(np.float32)), masks,
                     volumes, boxes, curves, photos, sketches)
