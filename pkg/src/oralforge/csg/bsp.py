"""BSP-tree boolean kernel on convex polygon soup.

The clip/invert construction follows the classic BSP CSG scheme: to combine
two solids, each tree removes the parts of the other that lie inside it;
complements of union give subtraction and intersection. Coplanar polygons
are routed by normal agreement. All tree walks are iterative so polygon
counts are not limited by the interpreter recursion depth.
"""
from __future__ import annotations

import numpy as np

PLANE_EPS = 1e-5

_COPLANAR, _FRONT, _BACK, _SPANNING = 0, 1, 2, 3


class Polygon:
    """Planar convex polygon; pts is a (k, 3) float64 array, CCW from outside."""

    __slots__ = ("pts", "normal", "w")

    def __init__(self, pts: np.ndarray, normal: np.ndarray | None = None, w: float | None = None):
        self.pts = pts
        if normal is None:
            n = np.cross(pts[1] - pts[0], pts[2] - pts[0])
            ln = np.linalg.norm(n)
            if ln < 1e-30:
                raise ValueError("degenerate polygon")
            n = n / ln
            self.normal = n
            self.w = float(n @ pts[0])
        else:
            self.normal = normal
            self.w = w

    def flipped(self) -> "Polygon":
        return Polygon(self.pts[::-1].copy(), -self.normal, -self.w)


def split_polygon(normal: np.ndarray, w: float, poly: Polygon,
                  coplanar_front: list, coplanar_back: list,
                  front: list, back: list) -> None:
    d = poly.pts @ normal - w
    types = np.where(d < -PLANE_EPS, _BACK, np.where(d > PLANE_EPS, _FRONT, _COPLANAR))
    poly_type = int(np.bitwise_or.reduce(types))

    if poly_type == _COPLANAR:
        (coplanar_front if normal @ poly.normal > 0 else coplanar_back).append(poly)
    elif poly_type == _FRONT:
        front.append(poly)
    elif poly_type == _BACK:
        back.append(poly)
    else:
        pts = poly.pts
        k = len(pts)
        f_pts: list[np.ndarray] = []
        b_pts: list[np.ndarray] = []
        for i in range(k):
            j = (i + 1) % k
            ti, tj = types[i], types[j]
            vi, vj = pts[i], pts[j]
            if ti != _BACK:
                f_pts.append(vi)
            if ti != _FRONT:
                b_pts.append(vi)
            if (ti | tj) == _SPANNING:
                t = (w - normal @ vi) / (normal @ (vj - vi))
                v = vi + t * (vj - vi)
                f_pts.append(v)
                b_pts.append(v)
        if len(f_pts) >= 3:
            front.append(Polygon(np.asarray(f_pts), poly.normal, poly.w))
        if len(b_pts) >= 3:
            back.append(Polygon(np.asarray(b_pts), poly.normal, poly.w))


class Node:
    """BSP node: splitting plane, coplanar polygons, front/back children."""

    __slots__ = ("normal", "w", "polygons", "front", "back")

    def __init__(self, polygons: list[Polygon] | None = None):
        self.normal: np.ndarray | None = None
        self.w = 0.0
        self.polygons: list[Polygon] = []
        self.front: Node | None = None
        self.back: Node | None = None
        if polygons:
            self.build(polygons)

    def build(self, polygons: list[Polygon]) -> None:
        stack = [(self, polygons)]
        while stack:
            node, polys = stack.pop()
            if not polys:
                continue
            if node.normal is None:
                node.normal = polys[0].normal
                node.w = polys[0].w
                node.polygons.append(polys[0])
                rest = polys[1:]
            else:
                rest = polys
            front: list[Polygon] = []
            back: list[Polygon] = []
            for p in rest:
                split_polygon(node.normal, node.w, p, node.polygons, node.polygons, front, back)
            if front:
                if node.front is None:
                    node.front = Node()
                stack.append((node.front, front))
            if back:
                if node.back is None:
                    node.back = Node()
                stack.append((node.back, back))

    def invert(self) -> None:
        stack = [self]
        while stack:
            node = stack.pop()
            node.polygons = [p.flipped() for p in node.polygons]
            if node.normal is not None:
                node.normal = -node.normal
                node.w = -node.w
            node.front, node.back = node.back, node.front
            if node.front:
                stack.append(node.front)
            if node.back:
                stack.append(node.back)

    def clip_polygons(self, polygons: list[Polygon]) -> list[Polygon]:
        """Remove the parts of `polygons` inside the solid this tree bounds."""
        result: list[Polygon] = []
        stack = [(self, polygons)]
        while stack:
            node, polys = stack.pop()
            if node.normal is None:
                result.extend(polys)
                continue
            front: list[Polygon] = []
            back: list[Polygon] = []
            for p in polys:
                split_polygon(node.normal, node.w, p, front, back, front, back)
            if node.front is not None:
                stack.append((node.front, front))
            else:
                result.extend(front)
            if node.back is not None:
                stack.append((node.back, back))
            # polygons reaching a missing back child are inside: dropped
        return result

    def clip_to(self, other: "Node") -> None:
        stack = [self]
        while stack:
            node = stack.pop()
            node.polygons = other.clip_polygons(node.polygons)
            if node.front:
                stack.append(node.front)
            if node.back:
                stack.append(node.back)

    def all_polygons(self) -> list[Polygon]:
        out: list[Polygon] = []
        stack = [self]
        while stack:
            node = stack.pop()
            out.extend(node.polygons)
            if node.front:
                stack.append(node.front)
            if node.back:
                stack.append(node.back)
        return out


def bsp_union(a_polys: list[Polygon], b_polys: list[Polygon]) -> list[Polygon]:
    a, b = Node(list(a_polys)), Node(list(b_polys))
    a.clip_to(b)
    b.clip_to(a)
    b.invert()
    b.clip_to(a)
    b.invert()
    a.build(b.all_polygons())
    return a.all_polygons()


def bsp_subtract(a_polys: list[Polygon], b_polys: list[Polygon]) -> list[Polygon]:
    a, b = Node(list(a_polys)), Node(list(b_polys))
    a.invert()
    a.clip_to(b)
    b.clip_to(a)
    b.invert()
    b.clip_to(a)
    b.invert()
    a.build(b.all_polygons())
    a.invert()
    return a.all_polygons()


def bsp_intersect(a_polys: list[Polygon], b_polys: list[Polygon]) -> list[Polygon]:
    a, b = Node(list(a_polys)), Node(list(b_polys))
    a.invert()
    b.clip_to(a)
    b.invert()
    a.clip_to(b)
    b.clip_to(a)
    a.build(b.all_polygons())
    a.invert()
    return a.all_polygons()
