"""Voxel-overlap evaluation: IoU and rigid pre-alignment."""
from __future__ import annotations

import numpy as np

from .core import RigidTransform, VoxelGrid

__all__ = ["iou", "rigid_align", "transform_grid"]


def iou(p: VoxelGrid, g: VoxelGrid) -> float:
    """Intersection over union of two binary grids on the same lattice.

    Defined as |P n G| / |P u G|; two empty grids have IoU 1.0 (identical
    occupied sets).
    """
    if not p.same_lattice(g):
        raise ValueError("iou: grids live on different lattices; resample first "
                         "(VoxelGrid.resample_like)")
    pm, gm = p.occupied_mask(), g.occupied_mask()
    inter = int(np.count_nonzero(pm & gm))
    union = int(np.count_nonzero(pm | gm))
    if union == 0:
        return 1.0
    return inter / union


def transform_grid(moving: VoxelGrid, transform: RigidTransform,
                   like: VoxelGrid | None = None) -> VoxelGrid:
    """Apply a rigid transform to a binary grid, resampled on `like`'s lattice
    (default: the moving grid's own lattice) by nearest-voxel rounding."""
    ref = like if like is not None else moving
    pts = moving.occupied_centers()
    if len(pts) == 0:
        return VoxelGrid(np.zeros(ref.dims, dtype=bool), ref.spacing, ref.origin)
    pts = transform.apply(pts)
    idx = np.floor((pts - ref.origin) / ref.spacing).astype(np.int64)
    ok = np.all((idx >= 0) & (idx < np.asarray(ref.dims)), axis=1)
    occ = np.zeros(ref.dims, dtype=bool)
    occ[tuple(idx[ok].T)] = True
    return VoxelGrid(occ, ref.spacing, ref.origin)


def _iou_points(pts: np.ndarray, fixed_mask: np.ndarray, origin: np.ndarray,
                spacing: float, fixed_count: int) -> float:
    dims = fixed_mask.shape
    idx = np.floor((pts - origin) / spacing).astype(np.int64)
    ok = np.all((idx >= 0) & (idx < np.asarray(dims)), axis=1)
    idx = idx[ok]
    flat = np.unique(idx[:, 0] * dims[1] * dims[2] + idx[:, 1] * dims[2] + idx[:, 2])
    hits = int(fixed_mask.reshape(-1)[flat].sum())
    moved_count = len(pts)  # distinct source voxels; collisions on target are rare and benign
    union = moved_count + fixed_count - hits
    return hits / union if union else 1.0


def rigid_align(moving: VoxelGrid, fixed: VoxelGrid,
                max_angle_deg: float = 15.0) -> RigidTransform:
    """Rigid transform (moving -> fixed frame) maximizing voxel IoU.

    Centroids are matched first; rotations are searched coarse-to-fine about
    the moving centroid over +-max_angle_deg per axis (1 degree at the finest
    level). The identity is always a candidate, so the returned transform
    never scores below it.
    """
    if moving.occupied_count() == 0 or fixed.occupied_count() == 0:
        raise ValueError("rigid_align requires non-empty grids")
    mpts = moving.occupied_centers()
    fixed_mask = fixed.occupied_mask()
    fixed_count = fixed.occupied_count()
    c_m = mpts.mean(axis=0)
    c_f = fixed.occupied_centers().mean(axis=0)

    def make_transform(angles_deg, extra_shift) -> RigidTransform:
        rot = RigidTransform.from_euler_xyz(angles_deg).rotation
        t = c_f + extra_shift - rot @ c_m
        return RigidTransform(rot, t)

    def score(tf: RigidTransform) -> float:
        return _iou_points(tf.apply(mpts), fixed_mask, fixed.origin, fixed.spacing, fixed_count)

    # candidates: centroid match + coarse-to-fine rotations + one-voxel jog
    best_angles = np.zeros(3)
    best_iou = score(make_transform(best_angles, np.zeros(3)))
    for step, half_range in ((5.0, max_angle_deg), (1.0, 4.0)):
        center = best_angles.copy()
        offs = np.arange(-half_range, half_range + 1e-9, step)
        for ax in offs:
            for ay in offs:
                for az in offs:
                    angles = center + (ax, ay, az)
                    if np.abs(angles).max() > max_angle_deg + 1e-9:
                        continue
                    s = score(make_transform(angles, np.zeros(3)))
                    if s > best_iou + 1e-12:
                        best_iou, best_angles = s, angles

    sp = fixed.spacing
    best_shift = np.zeros(3)
    for dx in (-sp, 0.0, sp):
        for dy in (-sp, 0.0, sp):
            for dz in (-sp, 0.0, sp):
                shift = np.array([dx, dy, dz])
                s = score(make_transform(best_angles, shift))
                if s > best_iou + 1e-12:
                    best_iou, best_shift = s, shift

    best_tf = make_transform(best_angles, best_shift)
    # never return anything that truly scores below identity
    identity = RigidTransform.identity()
    same = moving.same_lattice(fixed)
    if same:
        true_best = iou(transform_grid(moving, best_tf, like=fixed), fixed)
        true_id = iou(moving, fixed)
        if true_id >= true_best:
            return identity
    return best_tf
