"""Convex cutter solids from operator click loops."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..mesh.core import TriangleMesh
from .repair import weld

__all__ = ["CutterSolid", "loop_to_cutter", "convex_hull_mesh"]

CLOSE_TOLERANCE = 2.0  # mm; loop counts as closed when ends meet within this


class CutterError(ValueError):
    pass


def convex_hull_mesh(points: np.ndarray, structure_id: str = "") -> TriangleMesh:
    """Watertight, outward-oriented convex hull of a point set."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    try:
        hull = ConvexHull(pts)
    except QhullError as e:
        raise CutterError(f"degenerate point set for convex hull: {e}") from e
    verts = pts[hull.vertices]
    remap = {int(old): i for i, old in enumerate(hull.vertices)}
    faces = np.asarray([[remap[int(i)] for i in simplex] for simplex in hull.simplices],
                       dtype=np.int64)
    # orient every face away from the interior point
    center = verts.mean(axis=0)
    v0, v1, v2 = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    n = np.cross(v1 - v0, v2 - v0)
    flip = np.einsum("ij,ij->i", n, v0 - center) < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    verts, faces = weld(verts, faces)
    return TriangleMesh(verts, faces.astype(np.int32), structure_id)


@dataclass(frozen=True)
class CutterSolid:
    """Convex solid extruded from a closed surface loop."""

    mesh: TriangleMesh
    loop: np.ndarray
    depth: float

    def __post_init__(self):
        object.__setattr__(self, "loop", np.asarray(self.loop, dtype=np.float64).reshape(-1, 3))


def loop_to_cutter(surface_points: np.ndarray, depth: float,
                   inward: np.ndarray | None = None,
                   closed: bool = True,
                   close_tolerance: float = CLOSE_TOLERANCE) -> CutterSolid:
    """Convex solid spanned by a closed click loop and its inward extrusion.

    surface_points: ordered vertices of the loop polygon on one structure's
    surface. A trailing point that re-hits the first within close_tolerance
    (how the engine detects closure) is dropped. closed=False marks a
    sequence whose loop was never completed and is rejected. inward: unit
    direction pointing into the solid being cut; defaults to the loop's
    Newell normal flipped against the point order's CCW side.
    """
    if not closed:
        raise CutterError("loop not closed")
    pts = np.asarray(surface_points, dtype=np.float64).reshape(-1, 3)
    if len(pts) >= 4 and np.linalg.norm(pts[-1] - pts[0]) <= close_tolerance:
        pts = pts[:-1]
    if len(pts) < 3:
        raise CutterError("need at least 3 distinct loop points")
    if depth <= 0:
        raise CutterError("extrusion depth must be positive")

    if inward is None:
        # Newell normal of the loop; "inward" means against the CCW normal
        n = np.zeros(3)
        for i in range(len(pts)):
            u, v = pts[i], pts[(i + 1) % len(pts)]
            n += np.cross(u, v)
        ln = np.linalg.norm(n)
        if ln < 1e-12:
            raise CutterError("loop is degenerate (no well-defined plane)")
        inward = -n / ln
    else:
        inward = np.asarray(inward, dtype=np.float64)
        inward = inward / np.linalg.norm(inward)

    # slight outward lift so the cutter fully swallows the clicked surface
    lift = 0.05 * depth
    top = pts - inward * lift
    bottom = pts + inward * depth
    mesh = convex_hull_mesh(np.concatenate([top, bottom], axis=0), "cutter")
    return CutterSolid(mesh, pts, depth)


def is_loop_closed(points: np.ndarray, close_tolerance: float = CLOSE_TOLERANCE) -> bool:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    return len(pts) >= 4 and np.linalg.norm(pts[-1] - pts[0]) <= close_tolerance
