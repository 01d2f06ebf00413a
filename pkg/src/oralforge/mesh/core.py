"""Core geometry types: triangle meshes, voxel grids, rigid transforms.

All coordinates are in millimeters. Voxel grids are isotropic. Meshes and
grids are value-like: their arrays are frozen on construction, and every
operation returns a new object.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

__all__ = [
    "TriangleMesh",
    "VoxelGrid",
    "RigidTransform",
    "ValidationReport",
    "MeshError",
    "validate_mesh",
    "mesh_volume",
]


class MeshError(ValueError):
    """Raised when a mesh violates a precondition (open, degenerate, ...)."""


def _frozen(a: np.ndarray, dtype) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle surface for one dental structure.

    vertices: (n, 3) float64 positions in mm.
    triangles: (m, 3) int32 vertex indices, counter-clockwise seen from
        outside for a closed, outward-oriented surface.
    structure_id: opaque identifier (e.g. "tooth_21", "gum_upper").
    """

    vertices: np.ndarray
    triangles: np.ndarray
    structure_id: str = ""

    def __post_init__(self):
        v = _frozen(np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3), np.float64)
        t = _frozen(np.asarray(self.triangles, dtype=np.int32).reshape(-1, 3), np.int32)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if len(t):
            if t.min() < 0 or t.max() >= len(v):
                raise MeshError("triangle index out of range")
            if (np.diff(np.sort(t, axis=1), axis=1) == 0).any():
                raise MeshError("degenerate triangle (repeated vertex index)")

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    def with_structure_id(self, structure_id: str) -> "TriangleMesh":
        return replace(self, structure_id=structure_id)

    def translated(self, offset) -> "TriangleMesh":
        return replace(self, vertices=self.vertices + np.asarray(offset, dtype=np.float64))

    def transformed(self, transform: "RigidTransform") -> "TriangleMesh":
        return replace(self, vertices=transform.apply(self.vertices))

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if len(self.vertices) == 0:
            raise MeshError("empty mesh has no bounds")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def face_normals(self) -> np.ndarray:
        v = self.vertices
        t = self.triangles
        n = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
        return n

    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_normals(), axis=1)

    def area(self) -> float:
        return float(self.face_areas().sum())


@dataclass(frozen=True)
class ValidationReport:
    watertight: bool
    issues: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.watertight


def validate_mesh(mesh: TriangleMesh) -> ValidationReport:
    """Check the watertightness contract.

    A watertight mesh has every undirected edge shared by exactly two
    triangles with opposite orientation, i.e. every directed edge occurs
    exactly once. The empty mesh is vacuously watertight.
    """
    t = mesh.triangles
    if len(t) == 0:
        return ValidationReport(True, ("empty mesh",))
    issues = []
    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    n = len(mesh.vertices)
    fwd = np.sort(edges[:, 0].astype(np.int64) * n + edges[:, 1])
    if (np.diff(fwd) == 0).any():
        issues.append(f"{int((np.diff(fwd) == 0).sum())} directed edges repeated")
    # watertight iff the directed-edge multiset equals its own reversal
    rev = np.sort(edges[:, 1].astype(np.int64) * n + edges[:, 0])
    if not np.array_equal(fwd, rev):
        issues.append(f"{int((fwd != rev).sum())} unpaired directed edges (open or flipped)")
    areas = mesh.face_areas()
    if (areas < 1e-14).any():
        issues.append(f"{int((areas < 1e-14).sum())} zero-area triangles")
    return ValidationReport(not issues, tuple(issues))


def mesh_volume(mesh: TriangleMesh) -> float:
    """Signed-tetrahedron volume of a watertight, outward-oriented mesh (mm^3).

    The empty mesh has volume 0. Open meshes are rejected.
    """
    if mesh.is_empty:
        return 0.0
    report = validate_mesh(mesh)
    if not report:
        raise MeshError(f"mesh_volume requires a watertight mesh: {'; '.join(report.issues)}")
    v = mesh.vertices
    t = mesh.triangles
    # anchor at centroid for numerical stability under translation
    c = v.mean(axis=0)
    a, b, d = v[t[:, 0]] - c, v[t[:, 1]] - c, v[t[:, 2]] - c
    vol = float(np.einsum("ij,ij->i", a, np.cross(b, d)).sum() / 6.0)
    return vol


@dataclass(frozen=True)
class VoxelGrid:
    """Isotropic occupancy grid.

    dims: (nx, ny, nz); spacing: mm per voxel; origin: position of the
    (0,0,0) voxel corner; occupancy: (nx, ny, nz) float array in [0, 1].
    A grid flagged binary holds only {0, 1}.
    """

    occupancy: np.ndarray
    spacing: float
    origin: np.ndarray
    binary: bool = True

    def __post_init__(self):
        occ = np.asarray(self.occupancy)
        if occ.ndim != 3 or min(occ.shape) < 1:
            raise ValueError("occupancy must be a non-degenerate 3D array")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if self.binary:
            occ = occ.astype(bool)
        else:
            occ = occ.astype(np.float64)
            if occ.min() < 0 or occ.max() > 1:
                raise ValueError("occupancy values must lie in [0, 1]")
        occ = occ.copy()
        occ.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "origin", _frozen(np.asarray(self.origin, np.float64).reshape(3), np.float64))
        object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.occupancy.shape

    def occupied_count(self) -> int:
        return int(np.count_nonzero(self.occupancy if self.binary else self.occupancy >= 0.5))

    def occupied_mask(self) -> np.ndarray:
        return self.occupancy if self.binary else self.occupancy >= 0.5

    def voxel_volume(self) -> float:
        return self.spacing ** 3

    def centers(self) -> np.ndarray:
        """(nx, ny, nz, 3) voxel-center coordinates (expensive; test use)."""
        nx, ny, nz = self.dims
        ax = [self.origin[i] + (np.arange(n) + 0.5) * self.spacing for i, n in enumerate((nx, ny, nz))]
        g = np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1)
        return g

    def occupied_centers(self) -> np.ndarray:
        """(k, 3) coordinates of occupied voxel centers."""
        idx = np.argwhere(self.occupied_mask())
        return self.origin + (idx + 0.5) * self.spacing

    def same_lattice(self, other: "VoxelGrid", tol: float = 1e-9) -> bool:
        return (
            self.dims == other.dims
            and abs(self.spacing - other.spacing) <= tol
            and bool(np.all(np.abs(self.origin - other.origin) <= tol))
        )

    def resample_like(self, ref: "VoxelGrid") -> "VoxelGrid":
        """Nearest-neighbor resample onto ref's lattice (binary grids)."""
        nx, ny, nz = ref.dims
        ax = [ref.origin[i] + (np.arange(n) + 0.5) * ref.spacing for i, n in enumerate((nx, ny, nz))]
        idx = [np.floor((ax[i] - self.origin[i]) / self.spacing).astype(np.int64) for i in range(3)]
        valid = [np.clip(ii, 0, d - 1) for ii, d in zip(idx, self.dims)]
        inb = [(ii >= 0) & (ii < d) for ii, d in zip(idx, self.dims)]
        occ = self.occupied_mask()[np.ix_(*valid)]
        occ = occ & inb[0][:, None, None] & inb[1][None, :, None] & inb[2][None, None, :]
        return VoxelGrid(occ, ref.spacing, ref.origin, binary=True)


@dataclass(frozen=True)
class RigidTransform:
    """p' = rotation @ p + translation, with rotation in SO(3)."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-9):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation determinant must be +1")
        object.__setattr__(self, "rotation", _frozen(r, np.float64))
        object.__setattr__(self, "translation", _frozen(t, np.float64))

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_euler_xyz(cls, angles_deg, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        """Rotation about fixed x, then y, then z axes (degrees)."""
        ax, ay, az = np.deg2rad(np.asarray(angles_deg, dtype=np.float64))
        cx, sx = np.cos(ax), np.sin(ax)
        cy, sy = np.cos(ay), np.sin(ay)
        cz, sz = np.cos(az), np.sin(az)
        rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
        ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
        rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
        return cls(rz @ ry @ rx, translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return p @ self.rotation.T + self.translation

    def compose(self, inner: "RigidTransform") -> "RigidTransform":
        """self o inner: applies inner first."""
        return RigidTransform(self.rotation @ inner.rotation,
                              self.rotation @ inner.translation + self.translation)

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -(rt @ self.translation))

    def is_identity(self, tol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.rotation, np.eye(3), atol=tol)
            and np.allclose(self.translation, 0.0, atol=tol)
        )
