"""Boolean operations between watertight triangle meshes.

Two execution paths share one contract:

* generic: BSP clipping of both operands (handles coplanar contact);
* convex fast path: when one operand is convex and nowhere coplanar with
  the other, the big operand is clipped against the convex plane set
  directly and only triangles near the cutter are touched. Fragments of the
  convex operand are classified by parity rays against the big operand.

The fast path exists for interactive latency: instrument effects apply a
small convex cutter to a large structure, and rebuilding a full BSP of the
structure for every event would dominate the per-event budget.
"""
from __future__ import annotations

import numpy as np

from ..mesh.core import MeshError, TriangleMesh, validate_mesh
from . import bsp
from .repair import fix_tjunctions, polygons_to_mesh

__all__ = ["csg_subtract", "csg_union", "csg_intersect"]

_EPS = bsp.PLANE_EPS


def _require_watertight(mesh: TriangleMesh, name: str) -> None:
    report = validate_mesh(mesh)
    if mesh.is_empty or not report:
        raise MeshError(f"csg: operand {name} is not watertight: {'; '.join(report.issues) or 'empty'}")


def _mesh_polys(mesh: TriangleMesh) -> list[bsp.Polygon]:
    v = mesh.vertices
    out = []
    for t in mesh.triangles:
        try:
            out.append(bsp.Polygon(v[t].astype(np.float64)))
        except ValueError:
            continue  # zero-area triangle contributes nothing to a solid
    return out


def _face_planes(mesh: TriangleMesh) -> np.ndarray:
    """Deduplicated outward face planes as an (f, 4) array [nx, ny, nz, w]."""
    v = mesh.vertices
    t = mesh.triangles
    n = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
    ln = np.linalg.norm(n, axis=1)
    ok = ln > 1e-30
    n = n[ok] / ln[ok, None]
    w = np.einsum("ij,ij->i", n, v[t[ok, 0]])
    planes = np.concatenate([n, w[:, None]], axis=1)
    return np.unique(np.round(planes / 1e-9).astype(np.int64), axis=0) * 1e-9


def _is_convex(mesh: TriangleMesh, planes: np.ndarray, tol: float = 1e-6) -> bool:
    d = mesh.vertices @ planes[:, :3].T - planes[None, :, 3]
    return bool((d <= tol).all())


def _coplanar_contact(mesh: TriangleMesh, planes: np.ndarray, tol: float = _EPS) -> bool:
    """True if any triangle of mesh lies inside some plane of the set."""
    v = mesh.vertices
    t = mesh.triangles
    # distance of every vertex to every plane; triangle coplanar if all 3 within tol
    d = np.abs(v @ planes[:, :3].T - planes[None, :, 3]) <= tol
    tri_hit = d[t[:, 0]] & d[t[:, 1]] & d[t[:, 2]]
    return bool(tri_hit.any())


def _clip_poly_by_plane(pts: np.ndarray, normal: np.ndarray, w: float,
                        keep_front: bool) -> np.ndarray | None:
    """Sutherland-Hodgman clip of a convex polygon to one side of a plane."""
    d = pts @ normal - w
    if not keep_front:
        d = -d
    if (d >= -_EPS).all():
        return pts
    if (d <= _EPS).all():
        return None
    out: list[np.ndarray] = []
    k = len(pts)
    for i in range(k):
        j = (i + 1) % k
        di, dj = d[i], d[j]
        if di >= -_EPS:
            out.append(pts[i])
        if (di > _EPS and dj < -_EPS) or (di < -_EPS and dj > _EPS):
            t = di / (di - dj)
            out.append(pts[i] + t * (pts[j] - pts[i]))
    return np.asarray(out) if len(out) >= 3 else None


def _clip_triangle_outside_convex(pts: np.ndarray, planes: np.ndarray) -> list[np.ndarray]:
    """Pieces of a triangle outside a convex plane set (possibly the whole)."""
    outside: list[np.ndarray] = []
    current = pts
    for normal, w in zip(planes[:, :3], planes[:, 3]):
        d = current @ normal - w
        if (d > _EPS).any():
            piece = _clip_poly_by_plane(current, normal, w, keep_front=True)
            if piece is not None:
                outside.append(piece)
        remaining = _clip_poly_by_plane(current, normal, w, keep_front=False)
        if remaining is None:
            return outside
        current = remaining
    # `current` is inside every plane: not part of the outside set
    return outside


def _clip_triangle_inside_convex(pts: np.ndarray, planes: np.ndarray) -> np.ndarray | None:
    current = pts
    for normal, w in zip(planes[:, :3], planes[:, 3]):
        current = _clip_poly_by_plane(current, normal, w, keep_front=False)
        if current is None:
            return None
    return current


def _points_inside_batch(mesh: TriangleMesh, pts: np.ndarray) -> np.ndarray:
    """Vectorized parity inside-test of many points against one mesh.

    Only triangles whose (y, z) bounding box can meet a query's +x ray are
    considered, so clustered queries stay cheap on large meshes.
    """
    v = mesh.vertices
    tri = mesh.triangles
    q = np.asarray(pts, dtype=np.float64)
    t0, t1, t2 = v[tri[:, 0]], v[tri[:, 1]], v[tri[:, 2]]
    lo_yz = np.minimum(np.minimum(t0[:, 1:], t1[:, 1:]), t2[:, 1:])
    hi_yz = np.maximum(np.maximum(t0[:, 1:], t1[:, 1:]), t2[:, 1:])
    q_lo = q[:, 1:].min(axis=0) - 1e-5
    q_hi = q[:, 1:].max(axis=0) + 1e-5
    hit = np.all(hi_yz >= q_lo, axis=1) & np.all(lo_yz <= q_hi, axis=1)
    tri = tri[hit]
    p0, p1, p2 = v[tri[:, 0]], v[tri[:, 1]], v[tri[:, 2]]
    d = (p1[:, 1] - p0[:, 1]) * (p2[:, 2] - p0[:, 2]) - (p1[:, 2] - p0[:, 2]) * (p2[:, 1] - p0[:, 1])
    ok = np.abs(d) > 1e-300
    a0, a1, a2, dd = p0[ok], p1[ok], p2[ok], d[ok]
    nt = len(dd)
    out = np.zeros(len(q), dtype=bool)
    if nt == 0:
        return out
    chunk = max(1, int(4_000_000 // max(nt, 1)))
    for s in range(0, len(q), chunk):
        qq = q[s:s + chunk]
        # deterministic symbolic perturbation (see mesh.voxelize)
        y = qq[:, 1] + 1.3782971e-7
        z = qq[:, 2] + 2.9143867e-7
        ry = y[:, None] - a0[None, :, 1]
        rz = z[:, None] - a0[None, :, 2]
        w1 = (ry * (a2[None, :, 2] - a0[None, :, 2]) - rz * (a2[None, :, 1] - a0[None, :, 1])) / dd[None, :]
        w2 = ((a1[None, :, 1] - a0[None, :, 1]) * rz - (a1[None, :, 2] - a0[None, :, 2]) * ry) / dd[None, :]
        inside2d = (w1 >= 0.0) & (w2 >= 0.0) & (w1 + w2 <= 1.0)
        xhit = a0[None, :, 0] + w1 * (a1[None, :, 0] - a0[None, :, 0]) + w2 * (a2[None, :, 0] - a0[None, :, 0])
        crossing = inside2d & (xhit > qq[:, 0:1])
        out[s:s + chunk] = (crossing.sum(axis=1) % 2) == 1
    return out


def _fast_convex_op(a: TriangleMesh, b: TriangleMesh, planes_b: np.ndarray,
                    op: str) -> TriangleMesh:
    """Boolean result for op in {subtract, union, intersect} with convex b."""
    va, ta = a.vertices, a.triangles
    d = va @ planes_b[:, :3].T - planes_b[None, :, 3]
    out_v = d > _EPS   # (nv, F)
    in_v = d < -_EPS
    # triangle is clear of b if some single plane has all three vertices outside
    all_out = out_v[ta[:, 0]] & out_v[ta[:, 1]] & out_v[ta[:, 2]]   # (nt, F)
    tri_out = all_out.any(axis=1)
    tri_in = (in_v[ta[:, 0]] & in_v[ta[:, 1]] & in_v[ta[:, 2]]).all(axis=1)

    keep_clear = op in ("subtract", "union")
    kept_bulk = ta[tri_out] if keep_clear else ta[tri_in]
    straddle_idx = np.nonzero(~(tri_out | tri_in))[0]
    pieces: list[np.ndarray] = []   # convex polygons, CCW outward
    for i in straddle_idx:
        pts = va[ta[i]].astype(np.float64)
        if keep_clear:
            pieces.extend(_clip_triangle_outside_convex(pts, planes_b))
        else:
            piece = _clip_triangle_inside_convex(pts, planes_b)
            if piece is not None:
                pieces.append(piece)

    # b-side: cut each b face only by planes of a-triangles that mutually
    # straddle it (the tri-tri overlap prefilter), then classify fragments
    lo_b = b.vertices.min(axis=0) - 10 * _EPS
    hi_b = b.vertices.max(axis=0) + 10 * _EPS
    tmin = np.minimum(np.minimum(va[ta[:, 0]], va[ta[:, 1]]), va[ta[:, 2]])
    tmax = np.maximum(np.maximum(va[ta[:, 0]], va[ta[:, 1]]), va[ta[:, 2]])
    near_idx = np.nonzero(np.all(tmax >= lo_b, axis=1) & np.all(tmin <= hi_b, axis=1))[0]

    near_tris = va[ta[near_idx]].astype(np.float64)          # (m, 3, 3)
    if len(near_tris):
        n_a = np.cross(near_tris[:, 1] - near_tris[:, 0], near_tris[:, 2] - near_tris[:, 0])
        ln = np.linalg.norm(n_a, axis=1)
        ok = ln > 1e-30
        near_tris, n_a, ln = near_tris[ok], n_a[ok], ln[ok]
        n_a = n_a / ln[:, None]
        w_a = np.einsum("ij,ij->i", n_a, near_tris[:, 0])
        nlo = near_tris.min(axis=1)
        nhi = near_tris.max(axis=1)
    frags: list[np.ndarray] = []
    for t in b.triangles:
        face_frags = [b.vertices[t].astype(np.float64)]
        if len(near_tris) == 0:
            frags.extend(face_frags)
            continue
        fpts = face_frags[0]
        flo = fpts.min(axis=0) - 10 * _EPS
        fhi = fpts.max(axis=0) + 10 * _EPS
        cand = np.nonzero(np.all(nhi >= flo, axis=1) & np.all(nlo <= fhi, axis=1))[0]
        if len(cand):
            # mutual straddle: face spans tri plane and tri spans face plane
            nf = np.cross(fpts[1] - fpts[0], fpts[2] - fpts[0])
            nf = nf / max(np.linalg.norm(nf), 1e-30)
            wf = float(nf @ fpts[0])
            d_face = fpts @ n_a[cand].T - w_a[cand]          # (3, c)
            face_spans = (d_face > _EPS).any(axis=0) & (d_face < -_EPS).any(axis=0)
            d_tri = np.einsum("cij,j->ci", near_tris[cand], nf) - wf
            tri_spans = (d_tri > _EPS).any(axis=1) & (d_tri < -_EPS).any(axis=1)
            planes = {(round(float(n_a[i][0]) / 1e-9), round(float(n_a[i][1]) / 1e-9),
                       round(float(n_a[i][2]) / 1e-9), round(float(w_a[i]) / 1e-9)): i
                      for i in cand[face_spans & tri_spans]}
            for i in planes.values():
                n, w = n_a[i], float(w_a[i])
                nxt: list[np.ndarray] = []
                for f in face_frags:
                    df = f @ n - w
                    if (df > _EPS).any() and (df < -_EPS).any():
                        front = _clip_poly_by_plane(f, n, w, keep_front=True)
                        back = _clip_poly_by_plane(f, n, w, keep_front=False)
                        if front is not None:
                            nxt.append(front)
                        if back is not None:
                            nxt.append(back)
                    else:
                        nxt.append(f)
                face_frags = nxt
        frags.extend(face_frags)

    if frags:
        centroids = np.asarray([f.mean(axis=0) for f in frags])
        inside_a = _points_inside_batch(a, centroids)
        want_inside = op in ("subtract", "intersect")
        for f, ins in zip(frags, inside_a):
            if ins == want_inside:
                pieces.append(f[::-1].copy() if op == "subtract" else f)

    # seam repair runs only on the patch: pieces plus the ring of untouched
    # triangles sharing a vertex with any clipped triangle
    touched_verts = np.zeros(len(va), dtype=bool)
    if len(straddle_idx):
        touched_verts[ta[straddle_idx].reshape(-1)] = True
    ring_mask = touched_verts[kept_bulk].any(axis=1) if len(kept_bulk) else np.zeros(0, dtype=bool)
    ring_faces = kept_bulk[ring_mask]
    rest_faces = kept_bulk[~ring_mask]

    soup = [va[ring_faces].reshape(-1, 3)] if len(ring_faces) else []
    for pts in pieces:
        for i in range(1, len(pts) - 1):
            soup.append(np.stack([pts[0], pts[i], pts[i + 1]]))
    if not soup and not len(rest_faces):
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int32), a.structure_id)
    if soup:
        flat = np.concatenate(soup, axis=0)
        lfaces = np.arange(len(flat), dtype=np.int64).reshape(-1, 3)
        lverts, lfaces = fix_tjunctions(flat, lfaces)
    else:
        lverts = np.zeros((0, 3))
        lfaces = np.zeros((0, 3), dtype=np.int64)

    # merge patch into the untouched remainder; ring coordinates are exact
    # originals, so quantized keys map them back onto original indices
    from .repair import WELD_TOL
    key_of = {}
    ring_vids = np.unique(ring_faces.reshape(-1)) if len(ring_faces) else np.zeros(0, dtype=np.int64)
    for vid in ring_vids:
        key_of[tuple(np.round(va[vid] / WELD_TOL).astype(np.int64))] = int(vid)
    remap = np.empty(len(lverts), dtype=np.int64)
    new_pts = []
    n0 = len(va)
    for i, p in enumerate(lverts):
        k = tuple(np.round(p / WELD_TOL).astype(np.int64))
        j = key_of.get(k)
        if j is None:
            remap[i] = n0 + len(new_pts)
            new_pts.append(p)
        else:
            remap[i] = j
    all_verts = np.concatenate([va, np.asarray(new_pts).reshape(-1, 3)], axis=0)
    all_faces = np.concatenate([rest_faces.astype(np.int64), remap[lfaces]], axis=0)
    # drop vertices no longer referenced
    used = np.zeros(len(all_verts), dtype=bool)
    used[all_faces.reshape(-1)] = True
    newidx = np.cumsum(used) - 1
    return TriangleMesh(all_verts[used], newidx[all_faces].astype(np.int32), a.structure_id)


def _can_fast_path(a: TriangleMesh, b: TriangleMesh) -> np.ndarray | None:
    """Planes of b if b is convex and nowhere coplanar with a, else None."""
    if len(b.triangles) > 2000:
        return None
    planes = _face_planes(b)
    if len(planes) > 256 or not _is_convex(b, planes):
        return None
    if _coplanar_contact(a, planes):
        return None
    return planes


def _binary_op(a: TriangleMesh, b: TriangleMesh, op: str) -> TriangleMesh:
    _require_watertight(a, "A")
    _require_watertight(b, "B")
    sid = a.structure_id
    planes = _can_fast_path(a, b)
    if planes is not None:
        return _fast_convex_op(a, b, planes, op)
    fn = {"subtract": bsp.bsp_subtract, "union": bsp.bsp_union,
          "intersect": bsp.bsp_intersect}[op]
    polys = fn(_mesh_polys(a), _mesh_polys(b))
    return polygons_to_mesh(polys, sid)


def csg_subtract(a: TriangleMesh, b: TriangleMesh) -> TriangleMesh:
    """Watertight mesh of the solid A minus the solid B (possibly empty)."""
    return _binary_op(a, b, "subtract")


def csg_union(a: TriangleMesh, b: TriangleMesh) -> TriangleMesh:
    """Watertight mesh of the solid A united with B."""
    return _binary_op(a, b, "union")


def csg_intersect(a: TriangleMesh, b: TriangleMesh) -> TriangleMesh:
    """Watertight mesh of the common solid of A and B (possibly empty)."""
    return _binary_op(a, b, "intersect")
