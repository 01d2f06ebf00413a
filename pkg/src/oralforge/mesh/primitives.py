"""Watertight mesh primitives used by templates, artifacts and tests."""
from __future__ import annotations

import numpy as np

from .core import TriangleMesh

__all__ = ["box", "icosphere", "superellipsoid", "lathe", "sweep_profile"]


def _oriented_outward(mesh: TriangleMesh) -> TriangleMesh:
    """Flip winding if the raw signed volume is negative."""
    v, t = mesh.vertices, mesh.triangles
    vol = np.einsum("ij,ij->i", v[t[:, 0]], np.cross(v[t[:, 1]], v[t[:, 2]])).sum()
    if vol < 0:
        return TriangleMesh(v, t[:, [0, 2, 1]], mesh.structure_id)
    return mesh


def box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0), structure_id: str = "") -> TriangleMesh:
    """Axis-aligned box; size is the full edge length per axis."""
    s = np.asarray(size, dtype=np.float64) / 2.0
    c = np.asarray(center, dtype=np.float64)
    corners = np.array([[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)], dtype=np.float64)
    verts = corners * s + c
    # 12 triangles, outward CCW; corner index bit layout: x<<2 | y<<1 | z
    faces = np.array([
        [0, 1, 3], [0, 3, 2],  # -x
        [4, 6, 7], [4, 7, 5],  # +x
        [0, 4, 5], [0, 5, 1],  # -y
        [2, 3, 7], [2, 7, 6],  # +y
        [0, 2, 6], [0, 6, 4],  # -z
        [1, 5, 7], [1, 7, 3],  # +z
    ], dtype=np.int32)
    return TriangleMesh(verts, faces, structure_id)


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int32)
    return v, f


def icosphere(radius: float = 1.0, subdivisions: int = 2,
              center=(0.0, 0.0, 0.0), structure_id: str = "") -> TriangleMesh:
    """Geodesic sphere from a subdivided icosahedron."""
    verts, faces = _icosahedron()
    for _ in range(subdivisions):
        edge_mid: dict[tuple[int, int], int] = {}
        new_faces = []
        vlist = list(verts)

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in edge_mid:
                m = vlist[a] + vlist[b]
                m = m / np.linalg.norm(m)
                edge_mid[key] = len(vlist)
                vlist.append(m)
            return edge_mid[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.asarray(vlist)
        faces = np.asarray(new_faces, dtype=np.int32)
    verts = verts * radius + np.asarray(center, dtype=np.float64)
    return TriangleMesh(verts, faces, structure_id)


def superellipsoid(radii=(1.0, 1.0, 1.0), exponents=(2.0, 2.0), subdivisions: int = 2,
                   center=(0.0, 0.0, 0.0), structure_id: str = "") -> TriangleMesh:
    """Superellipsoid |x/a|^(2/e1) + ... style blob, built by remapping an icosphere.

    exponents (e_xy, e_z) control squareness: 2 gives an ellipsoid, larger
    values bulge toward a rounded box. Stays watertight for any parameters.
    """
    base = icosphere(1.0, subdivisions)
    v = base.vertices.copy()
    e_xy, e_z = exponents
    # spherical coordinates
    xy = np.hypot(v[:, 0], v[:, 1])
    theta = np.arctan2(xy, v[:, 2])
    phi = np.arctan2(v[:, 1], v[:, 0])

    def spow(s, e):
        return np.sign(s) * np.abs(s) ** e

    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    x = spow(st, 2.0 / e_xy) * spow(cp, 2.0 / e_xy)
    y = spow(st, 2.0 / e_xy) * spow(sp, 2.0 / e_xy)
    z = spow(ct, 2.0 / e_z)
    pts = np.stack([x, y, z], axis=1) * np.asarray(radii, dtype=np.float64)
    return TriangleMesh(pts + np.asarray(center, dtype=np.float64), base.triangles, structure_id)


def _fan_cap(indices: list[int], flip: bool) -> list[list[int]]:
    faces = []
    for i in range(1, len(indices) - 1):
        tri = [indices[0], indices[i], indices[i + 1]]
        if flip:
            tri = tri[::-1]
        faces.append(tri)
    return faces


def lathe(profile: np.ndarray, segments: int = 24, axis: int = 2,
          structure_id: str = "") -> TriangleMesh:
    """Solid of revolution around a coordinate axis.

    profile: (k, 2) points (r, h) with r >= 0, h strictly increasing at the
    ends; first and last points may have r == 0 (apex) or are closed by flat
    caps. Produces a watertight mesh.
    """
    prof = np.asarray(profile, dtype=np.float64)
    if len(prof) < 2:
        raise ValueError("profile needs at least 2 points")
    angles = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)
    verts: list[np.ndarray] = []
    rings: list[list[int] | int] = []
    for r, h in prof:
        if r <= 1e-12:
            rings.append(len(verts))
            verts.append(np.array([0.0, 0.0, h]))
        else:
            ring = []
            for a in angles:
                ring.append(len(verts))
                verts.append(np.array([r * np.cos(a), r * np.sin(a), h]))
            rings.append(ring)
    faces: list[list[int]] = []
    for lo, hi in zip(rings[:-1], rings[1:]):
        if isinstance(lo, int) and isinstance(hi, int):
            raise ValueError("profile collapses to a line")
        if isinstance(lo, int):
            for i in range(segments):
                j = (i + 1) % segments
                faces.append([lo, hi[j], hi[i]])
        elif isinstance(hi, int):
            for i in range(segments):
                j = (i + 1) % segments
                faces.append([hi, lo[i], lo[j]])
        else:
            for i in range(segments):
                j = (i + 1) % segments
                faces.append([lo[i], lo[j], hi[j]])
                faces.append([lo[i], hi[j], hi[i]])
    if not isinstance(rings[0], int):
        faces += _fan_cap(list(rings[0]), flip=True)
    if not isinstance(rings[-1], int):
        faces += _fan_cap(list(rings[-1]), flip=False)
    v = np.asarray(verts)
    if axis != 2:
        order = {0: [2, 0, 1], 1: [1, 2, 0]}[axis]
        v = v[:, order]
    return _oriented_outward(TriangleMesh(v, np.asarray(faces, dtype=np.int32), structure_id))


def sweep_profile(profile2d: np.ndarray, frames: list[tuple[np.ndarray, np.ndarray, np.ndarray]],
                  structure_id: str = "") -> TriangleMesh:
    """Sweep a closed CCW 2D profile along a sequence of frames.

    Each frame is (position, u_axis, v_axis); profile point (a, b) maps to
    position + a*u + b*v. End cross-sections are capped (profile must be
    convex for the fan caps to be valid). Watertight by construction.
    """
    prof = np.asarray(profile2d, dtype=np.float64)
    k = len(prof)
    if k < 3:
        raise ValueError("profile needs at least 3 points")
    verts = []
    for pos, u, v in frames:
        ring = pos[None, :] + prof[:, 0:1] * u[None, :] + prof[:, 1:2] * v[None, :]
        verts.append(ring)
    verts = np.concatenate(verts, axis=0)
    faces: list[list[int]] = []
    nseg = len(frames)
    for s in range(nseg - 1):
        base0, base1 = s * k, (s + 1) * k
        for i in range(k):
            j = (i + 1) % k
            faces.append([base0 + i, base0 + j, base1 + j])
            faces.append([base0 + i, base1 + j, base1 + i])
    faces += _fan_cap(list(range(k)), flip=True)
    faces += _fan_cap(list(range((nseg - 1) * k, nseg * k)), flip=False)
    return _oriented_outward(TriangleMesh(verts, np.asarray(faces, dtype=np.int32), structure_id))
