"""Serialization: ASCII OBJ, binary STL, and the OVGR/OVSG grid formats.

OVGR (voxel grid): 32-byte header -- magic ``OVGR``, u32 nx, ny, nz,
f32 spacing, f32 origin x/y/z -- followed by bit-packed occupancy in
x-fastest order. OVSG stores a stack of K bit-packed H x W mask planes with
the same header style (magic ``OVSG``, u32 K, H, W).

All binary values are little-endian. Canonical hashing of models is built
on `mesh_digest`.
"""
from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .core import TriangleMesh, VoxelGrid

__all__ = [
    "write_obj", "read_obj", "write_stl", "read_stl", "stl_bytes",
    "write_ovgr", "read_ovgr", "write_ovsg", "read_ovsg", "mesh_digest",
]


def write_obj(mesh: TriangleMesh, path: str | Path) -> None:
    lines = [f"# oralforge mesh: {mesh.structure_id}\n"]
    for x, y, z in mesh.vertices:
        lines.append(f"v {x:.9g} {y:.9g} {z:.9g}\n")
    for a, b, c in mesh.triangles + 1:
        lines.append(f"f {a} {b} {c}\n")
    Path(path).write_text("".join(lines))


def read_obj(path: str | Path, structure_id: str = "") -> TriangleMesh:
    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(p) for p in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(p.split("/")[0]) for p in parts[1:]]
            if len(idx) != 3:
                raise ValueError("OBJ reader accepts triangular faces only")
            faces.append([i - 1 for i in idx])
    return TriangleMesh(np.asarray(verts, dtype=np.float64).reshape(-1, 3),
                        np.asarray(faces, dtype=np.int32).reshape(-1, 3), structure_id)


def stl_bytes(mesh: TriangleMesh) -> bytes:
    """Binary STL: 80-byte header, u32 count, 50 bytes per triangle."""
    header = f"oralforge {mesh.structure_id}".encode()[:80].ljust(80, b"\0")
    tri = mesh.triangles
    v = mesh.vertices.astype(np.float32)
    n = len(tri)
    buf = bytearray(header + struct.pack("<I", n))
    if n:
        normals = np.cross(v[tri[:, 1]] - v[tri[:, 0]], v[tri[:, 2]] - v[tri[:, 0]])
        lens = np.linalg.norm(normals, axis=1, keepdims=True)
        normals = np.where(lens > 1e-30, normals / np.maximum(lens, 1e-30), 0.0).astype(np.float32)
        rec = np.zeros((n, 50), dtype=np.uint8)
        block = np.concatenate([normals, v[tri[:, 0]], v[tri[:, 1]], v[tri[:, 2]]], axis=1)
        rec[:, :48] = block.astype("<f4").view(np.uint8).reshape(n, 48)
        buf += rec.tobytes()
    return bytes(buf)


def write_stl(mesh: TriangleMesh, path: str | Path) -> None:
    Path(path).write_bytes(stl_bytes(mesh))


def read_stl(path: str | Path, structure_id: str = "", weld: bool = True) -> TriangleMesh:
    raw = Path(path).read_bytes()
    n = struct.unpack_from("<I", raw, 80)[0]
    rec = np.frombuffer(raw, dtype=np.uint8, count=n * 50, offset=84).reshape(n, 50)
    block = rec[:, :48].copy().view("<f4").reshape(n, 12).astype(np.float64)
    tri_pts = block[:, 3:12].reshape(n * 3, 3)
    if weld and n:
        uniq, inv = np.unique(tri_pts, axis=0, return_inverse=True)
        faces = inv.reshape(n, 3)
        return TriangleMesh(uniq, faces.astype(np.int32), structure_id)
    return TriangleMesh(tri_pts, np.arange(n * 3, dtype=np.int32).reshape(n, 3), structure_id)


def mesh_digest(mesh: TriangleMesh) -> str:
    """Canonical content hash of a mesh (exact float64 bytes)."""
    h = hashlib.sha256()
    h.update(mesh.structure_id.encode())
    h.update(np.ascontiguousarray(mesh.vertices, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(mesh.triangles, dtype="<i4").tobytes())
    return h.hexdigest()


def _pack_bits(flat_bool: np.ndarray) -> bytes:
    return np.packbits(flat_bool.astype(np.uint8), bitorder="little").tobytes()


def _unpack_bits(data: bytes, count: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8),
                         count=count, bitorder="little").astype(bool)


def write_ovgr(grid: VoxelGrid, path: str | Path) -> None:
    nx, ny, nz = grid.dims
    header = struct.pack("<4sIIIffff", b"OVGR", nx, ny, nz, grid.spacing,
                         grid.origin[0], grid.origin[1], grid.origin[2])
    # x-fastest order: index = x + nx*(y + ny*z)
    flat = np.transpose(grid.occupied_mask(), (2, 1, 0)).reshape(-1)
    Path(path).write_bytes(header + _pack_bits(flat))


def read_ovgr(path: str | Path) -> VoxelGrid:
    raw = Path(path).read_bytes()
    magic, nx, ny, nz, spacing, ox, oy, oz = struct.unpack_from("<4sIIIffff", raw, 0)
    if magic != b"OVGR":
        raise ValueError("not an OVGR file")
    flat = _unpack_bits(raw[32:], nx * ny * nz)
    occ = np.transpose(flat.reshape(nz, ny, nx), (2, 1, 0))
    return VoxelGrid(occ, float(spacing), np.array([ox, oy, oz]), binary=True)


def write_ovsg(masks: np.ndarray, path: str | Path) -> None:
    """masks: (K, H, W) boolean planes."""
    m = np.asarray(masks).astype(bool)
    k, h, w = m.shape
    header = struct.pack("<4sIII", b"OVSG", k, h, w)
    Path(path).write_bytes(header + _pack_bits(m.reshape(-1)))


def read_ovsg(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    magic, k, h, w = struct.unpack_from("<4sIII", raw, 0)
    if magic != b"OVSG":
        raise ValueError("not an OVSG file")
    return _unpack_bits(raw[16:], k * h * w).reshape(k, h, w)
