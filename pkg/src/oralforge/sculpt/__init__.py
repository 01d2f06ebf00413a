"""Brush-based mesh deformation."""
from .brush import (INTENSITY_RANGE, MODES, RADIUS_RANGE, BrushParams, SculptStroke,
                    falloff, resample_path, sculpt_apply, sculpt_stroke)

__all__ = [
    "BrushParams", "SculptStroke", "falloff", "sculpt_apply", "sculpt_stroke",
    "resample_path", "RADIUS_RANGE", "INTENSITY_RANGE", "MODES",
]
