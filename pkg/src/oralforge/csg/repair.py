"""Mesh cleanup after boolean clipping: welding and T-junction removal.

Plane splits on the two operands subdivide the common seam differently, so
raw clip output has hairline cracks: vertices of one side lying on edge
interiors of the other. Welding merges coincident vertices; the T-junction
pass inserts stray vertices into the edges they sit on until every directed
edge is paired.
"""
from __future__ import annotations

import numpy as np

from ..mesh.core import TriangleMesh, validate_mesh

WELD_TOL = 1e-6


def weld(verts: np.ndarray, faces: np.ndarray, tol: float = WELD_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Merge vertices within tol (grid quantization) and drop degenerate faces."""
    if len(faces) == 0:
        return np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64)
    key = np.round(verts / tol).astype(np.int64)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    new_verts = verts[first]
    f = inv[faces.reshape(-1)].reshape(-1, 3)
    good = (f[:, 0] != f[:, 1]) & (f[:, 1] != f[:, 2]) & (f[:, 0] != f[:, 2])
    f = f[good]
    if len(f):
        v = new_verts
        areas = np.linalg.norm(np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]]), axis=1)
        f = f[areas > 1e-14]
    return new_verts, f


def _boundary_edges(faces: np.ndarray, n_verts: int) -> np.ndarray:
    """Directed edges whose reverse is absent, as an (m, 2) array."""
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    fwd = e[:, 0] * n_verts + e[:, 1]
    rev = e[:, 1] * n_verts + e[:, 0]
    lonely = ~np.isin(fwd, rev)
    return e[lonely]


def fix_tjunctions(verts: np.ndarray, faces: np.ndarray, tol: float = WELD_TOL,
                   max_rounds: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Split edges at vertices lying on their interior until no cracks remain."""
    verts = np.asarray(verts, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    for _ in range(max_rounds):
        verts, faces = weld(verts, faces, tol)
        if len(faces) == 0:
            break
        boundary = _boundary_edges(faces, len(verts))
        if len(boundary) == 0:
            break
        # candidate stray vertices: endpoints of boundary edges
        cand = np.unique(boundary.reshape(-1))
        cand_pts = verts[cand]
        # for every face edge, vertices within tol of the open segment interior
        insertions: dict[tuple[int, int], list[int]] = {}
        edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        edges = np.unique(np.sort(edges, axis=1), axis=0)
        a = verts[edges[:, 0]]
        b = verts[edges[:, 1]]
        ab = b - a
        ab2 = np.einsum("ij,ij->i", ab, ab)
        for ci, p in zip(cand, cand_pts):
            t = np.einsum("ij,ij->i", p[None, :] - a, ab) / np.maximum(ab2, 1e-30)
            near = (t > 1e-9) & (t < 1 - 1e-9)
            if not near.any():
                continue
            d2 = np.einsum("ij,ij->i", p - (a + t[:, None] * ab), p - (a + t[:, None] * ab))
            hit = near & (d2 < (2 * tol) ** 2)
            for ei in np.nonzero(hit)[0]:
                u, v = int(edges[ei, 0]), int(edges[ei, 1])
                if ci == u or ci == v:
                    continue
                insertions.setdefault((u, v), []).append(int(ci))
        if not insertions:
            break
        new_faces: list[list[int]] = []
        extra_verts: list[np.ndarray] = []
        n_orig = len(verts)
        for tri in faces:
            tri = [int(tri[0]), int(tri[1]), int(tri[2])]
            poly: list[int] = []
            split_edges = 0
            opposite = None
            for i in range(3):
                u, v = tri[i], tri[(i + 1) % 3]
                poly.append(u)
                ins = insertions.get((u, v) if u < v else (v, u))
                if ins:
                    ins = sorted(set(ins))
                    du = verts[ins] - verts[u]
                    order = np.argsort(np.einsum("ij,ij->i", du, du))
                    poly.extend(ins[k] for k in order)
                    split_edges += 1
                    opposite = tri[(i + 2) % 3]
            if split_edges == 0:
                new_faces.append(tri)
            elif split_edges == 1:
                # fan from the vertex opposite the subdivided edge
                k = poly.index(opposite)
                poly = poly[k:] + poly[:k]
                for i in range(1, len(poly) - 1):
                    new_faces.append([poly[0], poly[i], poly[i + 1]])
            else:
                # several subdivided edges: fan from an interior Steiner point
                center_idx = n_orig + len(extra_verts)
                extra_verts.append(verts[tri].mean(axis=0))
                for i in range(len(poly)):
                    new_faces.append([center_idx, poly[i], poly[(i + 1) % len(poly)]])
        if extra_verts:
            verts = np.concatenate([verts, np.asarray(extra_verts)], axis=0)
        faces = np.asarray(new_faces, dtype=np.int64)
    return weld(verts, faces, tol)


def polygons_to_mesh(polys, structure_id: str = "") -> TriangleMesh:
    """Fan-triangulate convex polygons, weld and repair into a TriangleMesh."""
    tris: list[np.ndarray] = []
    for p in polys:
        pts = p.pts
        for i in range(1, len(pts) - 1):
            tris.append(np.stack([pts[0], pts[i], pts[i + 1]]))
    if not tris:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int32), structure_id)
    soup = np.concatenate(tris, axis=0)
    faces = np.arange(len(soup), dtype=np.int64).reshape(-1, 3)
    verts, faces = fix_tjunctions(soup, faces)
    return TriangleMesh(verts, faces.astype(np.int32), structure_id)
