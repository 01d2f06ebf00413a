"""Brush deformation: scrape, fill and flatten strokes on triangle meshes.

Vertices inside the brush radius move along the frozen area-weighted normal
of the affected region (scrape: inward, fill: outward) or toward the local
least-squares plane (flatten), scaled by the smooth falloff
w(t) = (1 - t^2)^2. Topology never changes and vertices at or beyond the
radius keep their exact bytes.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..mesh.core import TriangleMesh

__all__ = ["BrushParams", "SculptStroke", "falloff", "sculpt_apply", "sculpt_stroke"]

RADIUS_RANGE = (0.5, 20.0)
INTENSITY_RANGE = (0.01, 2.0)
MODES = ("scrape", "fill", "flatten")


def falloff(t: np.ndarray | float) -> np.ndarray | float:
    """Smooth monotone falloff with w(0) = 1 and w(1) = 0."""
    t = np.clip(t, 0.0, 1.0)
    return (1.0 - t * t) ** 2


@dataclass(frozen=True)
class BrushParams:
    radius: float = 3.0
    intensity: float = 0.5
    profile: str = "smooth"

    def __post_init__(self):
        if not RADIUS_RANGE[0] <= self.radius <= RADIUS_RANGE[1]:
            raise ValueError(f"radius must lie in {RADIUS_RANGE}")
        if not INTENSITY_RANGE[0] <= self.intensity <= INTENSITY_RANGE[1]:
            raise ValueError(f"intensity must lie in {INTENSITY_RANGE}")


@dataclass(frozen=True)
class SculptStroke:
    mode: str
    centers: np.ndarray
    params: BrushParams = field(default_factory=BrushParams)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        c = np.asarray(self.centers, dtype=np.float64).reshape(-1, 3)
        if len(c) < 1:
            raise ValueError("a stroke needs at least one center")
        object.__setattr__(self, "centers", c)


def _region_normal(mesh: TriangleMesh, affected: np.ndarray) -> np.ndarray:
    """Area-weighted average normal over triangles touching affected vertices."""
    t = mesh.triangles
    touch = affected[t].any(axis=1)
    if not touch.any():
        return np.array([0.0, 0.0, 1.0])
    n = mesh.face_normals()[touch]         # length-scaled: area weighting built in
    avg = n.sum(axis=0)
    ln = np.linalg.norm(avg)
    if ln < 1e-30:
        return np.array([0.0, 0.0, 1.0])
    return avg / ln


def sculpt_apply(mesh: TriangleMesh, center, mode: str, params: BrushParams) -> TriangleMesh:
    """One brush application at `center`. Returns the deformed mesh.

    A center farther than 2x radius from every vertex is a no-op with a
    warning (nothing in reach).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    c = np.asarray(center, dtype=np.float64).reshape(3)
    v = mesh.vertices
    d = np.linalg.norm(v - c, axis=1)
    if d.min() > 2.0 * params.radius:
        warnings.warn("sculpt center is far from the surface; no-op")
        return mesh
    affected = d < params.radius
    if not affected.any():
        return mesh
    w = falloff(d[affected] / params.radius)
    nbar = _region_normal(mesh, affected)

    new_v = v.copy()
    if mode == "scrape":
        new_v[affected] = v[affected] - (params.intensity * w)[:, None] * nbar
    elif mode == "fill":
        new_v[affected] = v[affected] + (params.intensity * w)[:, None] * nbar
    else:  # flatten
        pts = v[affected]
        centroid = pts.mean(axis=0)
        q = pts - centroid
        # plane normal: smallest principal direction of the affected patch
        _u, _s, vt = np.linalg.svd(q, full_matrices=False)
        pn = vt[-1]
        dist = q @ pn
        pull = np.minimum(params.intensity, 1.0) * w
        new_v[affected] = pts - (pull * dist)[:, None] * pn
    return TriangleMesh(new_v, mesh.triangles, mesh.structure_id)


def resample_path(centers: np.ndarray, spacing: float) -> np.ndarray:
    """Points along a polyline at the given arc-length spacing (start included)."""
    c = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    if len(c) == 1:
        return c
    seg = np.linalg.norm(np.diff(c, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total < 1e-12:
        return c[:1]
    targets = np.arange(0.0, total + 1e-12, spacing)
    out = np.empty((len(targets), 3))
    for k in range(3):
        out[:, k] = np.interp(targets, s, c[:, k])
    return out


def sculpt_stroke(mesh: TriangleMesh, stroke: SculptStroke) -> TriangleMesh:
    """Sequential brush applications along the stroke path.

    Drag paths are resampled at radius/2 spacing; a single-center stroke is
    exactly one sculpt_apply.
    """
    centers = stroke.centers
    if len(centers) > 1:
        centers = resample_path(centers, stroke.params.radius / 2.0)
    out = mesh
    for c in centers:
        out = sculpt_apply(out, c, stroke.mode, stroke.params)
    return out
