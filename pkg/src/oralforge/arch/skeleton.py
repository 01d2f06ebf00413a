"""Region thinning, spur pruning, path ordering and uniform sampling.

Thinning is Zhang-Suen: alternating sub-iterations delete boundary pixels
that keep the region 8-connected, leaving a one-pixel-wide skeleton that is
always a subset of the input region.
"""
from __future__ import annotations

import numpy as np

__all__ = ["skeletonize", "prune_spurs", "order_skeleton_path", "sample_uniform",
           "skeleton_endpoints", "BranchedSkeletonError"]


class BranchedSkeletonError(ValueError):
    def __init__(self, branch_pixels):
        self.branch_pixels = branch_pixels
        super().__init__(f"skeleton has branch pixels: {branch_pixels[:8]}"
                         + ("..." if len(branch_pixels) > 8 else ""))


def _neighbors8(img: np.ndarray) -> list[np.ndarray]:
    """P2..P9 planes (N, NE, E, SE, S, SW, W, NW) for interior pixels."""
    p = np.pad(img, 1)
    c = p[1:-1, 1:-1]
    n = p[:-2, 1:-1]
    s = p[2:, 1:-1]
    w = p[1:-1, :-2]
    e = p[1:-1, 2:]
    nw = p[:-2, :-2]
    ne = p[:-2, 2:]
    sw = p[2:, :-2]
    se = p[2:, 2:]
    del c
    return [n, ne, e, se, s, sw, w, nw]


def _zs_pass(img: np.ndarray, step: int) -> np.ndarray:
    nb = _neighbors8(img)
    p2, p3, p4, p5, p6, p7, p8, p9 = [x.astype(np.uint8) for x in nb]
    ring = [p2, p3, p4, p5, p6, p7, p8, p9, p2]
    b = sum(x.astype(np.int32) for x in ring[:8])
    a = sum(((ring[i] == 0) & (ring[i + 1] == 1)).astype(np.int32) for i in range(8))
    if step == 0:
        cond = (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
    else:
        cond = (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
    deletable = img & (b >= 2) & (b <= 6) & (a == 1) & cond
    return img & ~deletable


def _remove_redundant(skel: np.ndarray) -> np.ndarray:
    """Strip staircase pixels whose neighbors stay mutually 8-connected.

    Zhang-Suen can leave two-wide diagonal steps; a pixel is redundant when
    (a) it is not an endpoint and (b) the subgraph of its set neighbors is
    connected without it. Removal is sequential in scan order, so the result
    is deterministic.
    """
    skel = skel.copy()
    changed = True
    while changed:
        changed = False
        for r, c in np.argwhere(skel):
            nbrs = _nbrs(skel, (int(r), int(c)))
            if len(nbrs) < 2:
                continue
            # connectivity of the neighbor set without the center pixel
            seen = {nbrs[0]}
            frontier = [nbrs[0]]
            while frontier:
                cur = frontier.pop()
                for other in nbrs:
                    if other not in seen and max(abs(other[0] - cur[0]),
                                                 abs(other[1] - cur[1])) <= 1:
                        seen.add(other)
                        frontier.append(other)
            if len(seen) == len(nbrs):
                skel[r, c] = False
                changed = True
    return skel


def skeletonize(region_mask: np.ndarray, max_iters: int = 10000) -> np.ndarray:
    """Morphological thinning to a 1-px-wide 8-connected skeleton."""
    img = np.asarray(region_mask).astype(bool)
    if not img.any():
        raise ValueError("empty region mask")
    for _ in range(max_iters):
        before = img
        img = _zs_pass(img, 0)
        img = _zs_pass(img, 1)
        if np.array_equal(img, before):
            break
    return _remove_redundant(img)


def _degree_map(skel: np.ndarray) -> np.ndarray:
    p = np.pad(skel.astype(np.int32), 1)
    deg = (p[:-2, :-2] + p[:-2, 1:-1] + p[:-2, 2:]
           + p[1:-1, :-2] + p[1:-1, 2:]
           + p[2:, :-2] + p[2:, 1:-1] + p[2:, 2:])
    return np.where(skel, deg, 0)


def skeleton_endpoints(skel: np.ndarray) -> list[tuple[int, int]]:
    deg = _degree_map(skel)
    return [tuple(p) for p in np.argwhere(deg == 1)]


def _nbrs(skel: np.ndarray, rc: tuple[int, int]) -> list[tuple[int, int]]:
    r, c = rc
    h, w = skel.shape
    out = []
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            rr, cc = r + dr, c + dc
            if 0 <= rr < h and 0 <= cc < w and skel[rr, cc]:
                out.append((rr, cc))
    return out


def prune_spurs(skel: np.ndarray, min_fraction: float = 0.05) -> np.ndarray:
    """Remove branches shorter than min_fraction of the skeleton pixel count."""
    skel = skel.copy()
    total = int(skel.sum())
    threshold = max(2, int(np.ceil(min_fraction * total)))
    for _ in range(64):
        deg = _degree_map(skel)
        branch_pts = {tuple(p) for p in np.argwhere(deg >= 3)}
        if not branch_pts:
            break
        removed_any = False
        for ep in skeleton_endpoints(skel):
            path = [ep]
            prev = None
            cur = ep
            while True:
                if cur in branch_pts or len(path) > threshold + 1:
                    break
                nxt = [p for p in _nbrs(skel, cur) if p != prev]
                if len(nxt) != 1:
                    break
                prev, cur = cur, nxt[0]
                path.append(cur)
            if path and path[-1] in branch_pts and len(path) - 1 < threshold:
                for p in path[:-1]:
                    skel[p] = False
                removed_any = True
        if not removed_any:
            break
    return skel


def order_skeleton_path(skel: np.ndarray) -> np.ndarray:
    """Ordered (row, col) pixels of a single open 8-connected curve.

    Branch pixels (more than 2 neighbors after staircase resolution) are an
    error; callers prune spurs first.
    """
    deg = _degree_map(skel)
    branches = [tuple(p) for p in np.argwhere(deg >= 3)]
    endpoints = skeleton_endpoints(skel)
    if len(endpoints) != 2:
        raise BranchedSkeletonError(branches or endpoints)
    start = min(endpoints)
    visited = {start}
    path = [start]
    cur = start
    while True:
        cands = [p for p in _nbrs(skel, cur) if p not in visited]
        if not cands:
            break
        if len(cands) > 1:
            # prefer 4-adjacency to resolve diagonal staircase duplicates
            four = [p for p in cands if abs(p[0] - cur[0]) + abs(p[1] - cur[1]) == 1]
            if len(four) == 1:
                cands = four
            else:
                raise BranchedSkeletonError([cur] + cands)
        cur = cands[0]
        visited.add(cur)
        path.append(cur)
    if len(path) != int(skel.sum()):
        leftover = [tuple(p) for p in np.argwhere(skel) if tuple(p) not in visited]
        raise BranchedSkeletonError(leftover[:16])
    return np.asarray(path, dtype=np.int64)


def sample_uniform(skel_or_path: np.ndarray, n: int) -> np.ndarray:
    """n points at equal arc length along the skeleton path, endpoints included.

    Accepts either a boolean skeleton image or an already ordered (k, 2)
    path. Returns (n, 2) float (row, col) positions; n >= 2.
    """
    if n < 2:
        raise ValueError("need n >= 2 samples")
    arr = np.asarray(skel_or_path)
    path = order_skeleton_path(arr) if arr.dtype == bool else arr.astype(np.float64)
    pts = path.astype(np.float64)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, s[-1], n)
    out = np.empty((n, 2))
    for k in range(2):
        out[:, k] = np.interp(targets, s, pts[:, k])
    return out
