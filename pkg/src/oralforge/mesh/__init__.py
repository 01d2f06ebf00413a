"""Geometry substrate: meshes, voxel grids, transforms, metrics, I/O."""
from .core import (MeshError, RigidTransform, TriangleMesh, ValidationReport,
                   VoxelGrid, mesh_volume, validate_mesh)
from .io import (mesh_digest, read_obj, read_ovgr, read_ovsg, read_stl, stl_bytes,
                 write_obj, write_ovgr, write_ovsg, write_stl)
from .isosurface import mesh_from_voxels
from .metrics import iou, rigid_align, transform_grid
from .primitives import box, icosphere, lathe, superellipsoid, sweep_profile
from .voxelize import points_inside, voxelize

__all__ = [
    "TriangleMesh", "VoxelGrid", "RigidTransform", "ValidationReport", "MeshError",
    "validate_mesh", "mesh_volume", "voxelize", "points_inside", "mesh_from_voxels",
    "iou", "rigid_align", "transform_grid",
    "box", "icosphere", "superellipsoid", "lathe", "sweep_profile",
    "write_obj", "read_obj", "write_stl", "read_stl", "stl_bytes",
    "write_ovgr", "read_ovgr", "write_ovsg", "read_ovsg", "mesh_digest",
]
