"""Dental arch estimation: snake, skeleton, cubic fit, arc-length tools."""
from .curve import ArchCurve, fit_cubic
from .extract import extract_arch_curve, load_photo, load_sketch, rasterize_polygon
from .skeleton import (BranchedSkeletonError, order_skeleton_path, prune_spurs,
                       sample_uniform, skeleton_endpoints, skeletonize)
from .snake import SnakeResult, SnakeWeights, active_contour, gradient_magnitude_sq

__all__ = [
    "ArchCurve", "fit_cubic", "active_contour", "SnakeWeights", "SnakeResult",
    "gradient_magnitude_sq", "skeletonize", "prune_spurs", "order_skeleton_path",
    "sample_uniform", "skeleton_endpoints", "BranchedSkeletonError",
    "extract_arch_curve", "rasterize_polygon", "load_photo", "load_sketch",
]
