"""End-to-end arch extraction: photo + sketch prior -> fitted cubic curve."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .curve import ArchCurve, fit_cubic
from .skeleton import order_skeleton_path, prune_spurs, sample_uniform, skeletonize
from .snake import SnakeResult, SnakeWeights, active_contour

__all__ = ["rasterize_polygon", "extract_arch_curve", "load_photo", "load_sketch"]


def rasterize_polygon(points_xy: np.ndarray, shape_hw: tuple[int, int]) -> np.ndarray:
    """Filled polygon mask (boolean, indexed [row, col])."""
    h, w = shape_hw
    img = Image.new("1", (w, h), 0)
    draw = ImageDraw.Draw(img)
    draw.polygon([(float(x), float(y)) for x, y in points_xy], fill=1, outline=1)
    return np.asarray(img, dtype=bool)


def load_photo(path: str | Path) -> np.ndarray:
    """8-bit grayscale PNG -> float image in [0, 1]."""
    img = Image.open(path).convert("L")
    return np.asarray(img, dtype=np.float64) / 255.0


def load_sketch(path: str | Path) -> np.ndarray:
    """JSON list of [x, y] pixel pairs."""
    pts = np.asarray(json.loads(Path(path).read_text()), dtype=np.float64)
    return pts.reshape(-1, 2)


def extract_arch_curve(photo: np.ndarray, sketch: np.ndarray, jaw: str,
                       scale_mm_per_px: float = 0.25,
                       weights: SnakeWeights = SnakeWeights(),
                       max_iters: int = 200,
                       n_snake_points: int = 120,
                       n_samples: int = 40) -> tuple[ArchCurve, SnakeResult]:
    """Fig-4 style pipeline: snake -> region mask -> skeleton -> cubic fit.

    Points enter fit_cubic as (x, y) = (col, row) so the curve opens along
    the photo's vertical axis, matching an occlusal view with the arch
    spanning left-right.
    """
    snake = active_contour(photo, sketch, weights, max_iters, n_points=n_snake_points)
    mask = rasterize_polygon(snake.points, photo.shape)
    skel = prune_spurs(skeletonize(mask))
    path_rc = order_skeleton_path(skel)
    samples_rc = sample_uniform(path_rc, n_samples)
    pts_xy = samples_rc[:, ::-1]
    curve = fit_cubic(pts_xy, scale_mm_per_px, jaw)
    return curve, snake
