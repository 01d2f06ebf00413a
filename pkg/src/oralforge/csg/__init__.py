"""Boolean solid operations and cutter construction."""
from .booleans import csg_intersect, csg_subtract, csg_union
from .cutter import (CLOSE_TOLERANCE, CutterError, CutterSolid, convex_hull_mesh,
                     is_loop_closed, loop_to_cutter)

__all__ = [
    "csg_subtract", "csg_union", "csg_intersect",
    "CutterSolid", "CutterError", "loop_to_cutter", "convex_hull_mesh",
    "is_loop_closed", "CLOSE_TOLERANCE",
]
