"""Occupancy grid -> watertight surface via marching cubes."""
from __future__ import annotations

import warnings

import numpy as np
from skimage import measure

from .core import TriangleMesh, VoxelGrid

__all__ = ["mesh_from_voxels"]


def _weld(verts: np.ndarray, faces: np.ndarray, decimals: int = 9) -> tuple[np.ndarray, np.ndarray]:
    uniq, inv = np.unique(verts.round(decimals), axis=0, return_inverse=True)
    f = inv[faces.reshape(-1)].reshape(-1, 3)
    good = (f[:, 0] != f[:, 1]) & (f[:, 1] != f[:, 2]) & (f[:, 0] != f[:, 2])
    return uniq, f[good]


def mesh_from_voxels(grid: VoxelGrid, iso_level: float = 0.5,
                     structure_id: str = "") -> TriangleMesh:
    """Extract the iso_level surface of an occupancy grid as a triangle mesh.

    The grid is zero-padded before extraction, so the result is closed even
    when occupancy touches the grid boundary. All-empty (or all-full before
    padding was considered) grids yield an empty mesh with a warning.
    """
    if not 0.0 < iso_level < 1.0:
        raise ValueError("iso_level must lie strictly between 0 and 1")
    occ = grid.occupancy.astype(np.float32) if grid.binary else grid.occupancy.astype(np.float32)
    if occ.max() <= iso_level or occ.min() >= iso_level:
        warnings.warn("grid has no crossing of the iso level; returning empty mesh")
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int32), structure_id)
    padded = np.pad(occ, 1)
    verts, faces, _normals, _vals = measure.marching_cubes(padded, iso_level)
    # back to world coordinates: padded index i maps to origin + (i - 1 + 0.5)*spacing
    verts = grid.origin[None, :] + (verts - 0.5) * grid.spacing
    # outward orientation under the v0.(v1 x v2) convention
    faces = faces[:, [0, 2, 1]]
    verts, faces = _weld(verts, faces)
    return TriangleMesh(verts, faces.astype(np.int32), structure_id)
