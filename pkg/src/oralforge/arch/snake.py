"""Greedy active contour over a pixel lattice.

Per sweep, each contour point may hop to the best position in its 3x3
neighborhood; a hop is accepted only when it strictly lowers the local
energy, so the recorded total-energy trace never increases. The energy is

    E = alpha * sum |v_i - v_{i-1}|^2          (continuity / tension)
      + beta  * sum |v_{i-1} - 2 v_i + v_{i+1}|^2   (curvature)
      - gamma * sum G(v_i)                      (image attraction)

with G the squared gradient magnitude of the (smoothed) photo, so the
contour is pulled toward strong edges.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

__all__ = ["SnakeWeights", "SnakeResult", "active_contour", "gradient_magnitude_sq",
           "resample_closed_polyline"]

MIN_PRIOR_AREA_PX = 100.0


@dataclass(frozen=True)
class SnakeWeights:
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 2.0

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("snake weights must be non-negative")


@dataclass(frozen=True)
class SnakeResult:
    points: np.ndarray            # (n, 2) integer pixel positions, closed loop
    energy_trace: tuple[float, ...]
    iterations: int


def gradient_magnitude_sq(image: np.ndarray, sigma: float = 1.0) -> np.ndarray:
    sm = gaussian_filter(image.astype(np.float64), sigma)
    gy, gx = np.gradient(sm)
    return gx * gx + gy * gy


def polygon_area(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def resample_closed_polyline(points: np.ndarray, n: int) -> np.ndarray:
    """n points at equal arc length around a closed polyline."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    closed = np.concatenate([pts, pts[:1]], axis=0)
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, s[-1], n, endpoint=False)
    out = np.empty((n, 2))
    for k in range(2):
        out[:, k] = np.interp(targets, s, closed[:, k])
    return out


def _total_energy(pts: np.ndarray, g: np.ndarray, w: SnakeWeights) -> float:
    prev = np.roll(pts, 1, axis=0)
    nxt = np.roll(pts, -1, axis=0)
    cont = ((pts - prev) ** 2).sum()
    curv = ((prev - 2 * pts + nxt) ** 2).sum()
    img = g[pts[:, 1], pts[:, 0]].sum()
    return float(w.alpha * cont + w.beta * curv - w.gamma * img)


def active_contour(photo: np.ndarray, prior: np.ndarray,
                   weights: SnakeWeights = SnakeWeights(),
                   max_iters: int = 200,
                   n_points: int | None = None,
                   move_fraction_stop: float = 0.02) -> SnakeResult:
    """Greedy snake seeded by a sketched prior polygon.

    photo: grayscale image in [0, 1], indexed [row, col]. prior: (k, 2)
    polygon in (x, y) pixel coordinates with at least 8 points enclosing an
    area of >= 100 px^2. With n_points the prior is resampled to that many
    equally spaced points first; by default its vertices are used verbatim
    (so zero iterations returns the prior). Returns integer contour points
    plus the per-sweep total-energy trace (recomputed from scratch each
    sweep).
    """
    img = np.asarray(photo, dtype=np.float64)
    h_img, w_img = img.shape
    prior = np.asarray(prior, dtype=np.float64).reshape(-1, 2)
    if len(prior) < 8:
        raise ValueError("sketch prior needs at least 8 points")
    if polygon_area(prior) < MIN_PRIOR_AREA_PX:
        raise ValueError("degenerate prior (area < 100 px)")
    if (prior[:, 0].min() < 0 or prior[:, 1].min() < 0
            or prior[:, 0].max() > w_img - 1 or prior[:, 1].max() > h_img - 1):
        raise ValueError("prior extends outside the image")

    g = gradient_magnitude_sq(img)
    init = resample_closed_polyline(prior, n_points) if n_points else prior
    pts = np.rint(init).astype(np.int64)
    pts[:, 0] = np.clip(pts[:, 0], 1, w_img - 2)
    pts[:, 1] = np.clip(pts[:, 1], 1, h_img - 2)

    n = len(pts)
    w = weights
    trace = [_total_energy(pts, g, w)]

    def local_energy(i: int, p: np.ndarray) -> float:
        pm2, pm1 = pts[(i - 2) % n], pts[(i - 1) % n]
        pp1, pp2 = pts[(i + 1) % n], pts[(i + 2) % n]
        cont = ((p - pm1) ** 2).sum() + ((pp1 - p) ** 2).sum()
        curv = (((pm2 - 2 * pm1 + p) ** 2).sum()
                + ((pm1 - 2 * p + pp1) ** 2).sum()
                + ((p - 2 * pp1 + pp2) ** 2).sum())
        return float(w.alpha * cont + w.beta * curv - w.gamma * g[p[1], p[0]])

    iterations = 0
    for _sweep in range(max_iters):
        iterations += 1
        moved = 0
        for i in range(n):
            cur = pts[i].copy()
            best = cur
            best_e = local_energy(i, cur)
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    if dx == 0 and dy == 0:
                        continue
                    cand = cur + (dx, dy)
                    if not (1 <= cand[0] <= w_img - 2 and 1 <= cand[1] <= h_img - 2):
                        continue
                    e = local_energy(i, cand)
                    if e < best_e - 1e-9:
                        best, best_e = cand, e
            if not np.array_equal(best, cur):
                pts[i] = best
                moved += 1
        trace.append(_total_energy(pts, g, w))
        if moved < move_fraction_stop * n:
            break
    return SnakeResult(pts.copy(), tuple(trace), iterations)
