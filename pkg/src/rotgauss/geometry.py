"""Exact rectangle geometry: vertices, convex clipping, SkewIoU, 3-D IoU."""

from __future__ import annotations

import math

import numpy as np

from .boxes import RBox2D, RBox3D, rotation_2d

# points this close to a clip edge count as inside
CLIP_TOL = 1e-12


def box_vertices(box: RBox2D) -> np.ndarray:
    """Corners as a ``(4, 2)`` array in counter-clockwise order."""
    half = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=float) * [box.w / 2, box.h / 2]
    return half @ rotation_2d(box.theta).T + [box.x, box.y]


def polygon_area(poly: np.ndarray) -> float:
    """Signed shoelace area (positive for CCW); 0 for fewer than 3 vertices."""
    poly = np.asarray(poly, dtype=float)
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def is_convex(poly: np.ndarray, tol: float = 1e-12) -> bool:
    poly = np.asarray(poly, dtype=float)
    if len(poly) < 3:
        return True
    e = np.roll(poly, -1, axis=0) - poly
    cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
    return bool(np.all(cross >= -tol))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def clip_convex(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clipping of a convex polygon by a convex CCW polygon.

    Returns an ``(n, 2)`` array; ``n == 0`` when the polygons do not overlap.
    """
    output = [tuple(p) for p in np.asarray(subject, dtype=float)]
    clip = np.asarray(clip, dtype=float)
    n = len(clip)
    for i in range(n):
        if not output:
            break
        a, b = clip[i], clip[(i + 1) % n]
        scale = max(1.0, math.hypot(b[0] - a[0], b[1] - a[1]))
        inputs, output = output, []
        prev = inputs[-1]
        prev_in = _cross(a, b, prev) >= -CLIP_TOL * scale
        for cur in inputs:
            cur_in = _cross(a, b, cur) >= -CLIP_TOL * scale
            if cur_in != prev_in:
                output.append(_intersect(prev, cur, a, b))
            if cur_in:
                output.append(cur)
            prev, prev_in = cur, cur_in
    if len(output) < 3:
        return np.zeros((0, 2))
    return _dedupe(np.array(output))


def _intersect(p, q, a, b):
    # point on segment p->q crossing the infinite line a->b
    dp = _cross(a, b, p)
    dq = _cross(a, b, q)
    t = dp / (dp - dq)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


def _dedupe(poly: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    keep = []
    for i, p in enumerate(poly):
        if not keep or np.max(np.abs(p - poly[keep[-1]])) > tol:
            keep.append(i)
    if len(keep) > 1 and np.max(np.abs(poly[keep[0]] - poly[keep[-1]])) <= tol:
        keep.pop()
    if len(keep) < 3:
        return np.zeros((0, 2))
    return poly[keep]


def intersection_area(a: RBox2D, b: RBox2D) -> float:
    inter = clip_convex(box_vertices(a), box_vertices(b))
    return max(polygon_area(inter), 0.0)


def skew_iou_2d(a: RBox2D, b: RBox2D) -> float:
    """Exact IoU of two rotated rectangles."""
    inter = intersection_area(a, b)
    union = a.w * a.h + b.w * b.h - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def iou_3d_yaw(a: RBox3D, b: RBox3D) -> float:
    """IoU of yaw-only cuboids: BEV overlap area times vertical overlap."""
    dz = min(a.z + a.l / 2, b.z + b.l / 2) - max(a.z - a.l / 2, b.z - b.l / 2)
    if dz <= 0.0:
        return 0.0
    inter = intersection_area(a.bev(), b.bev()) * dz
    union = a.w * a.h * a.l + b.w * b.h * b.l - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def same_vertex_set(a: RBox2D, b: RBox2D, atol: float = 1e-9) -> bool:
    """True when both boxes have the same corners, in any order."""
    va, vb = box_vertices(a), box_vertices(b)
    for p in va:
        if np.min(np.max(np.abs(vb - p), axis=1)) > atol:
            return False
    return True
