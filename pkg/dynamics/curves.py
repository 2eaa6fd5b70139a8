"""Closed-polyline geometry on complex128 arrays."""

import numpy as np


def _close(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.complex128)
    if points.size and points[0] != points[-1]:
        points = np.append(points, points[0])
    return points


def winding_number(points: np.ndarray, point: complex) -> int:
    """Winding number of the closed polyline around ``point``.

    Crossing rule: every edge crossing the horizontal ray through the point
    upward with the point on its left counts +1, downward with the point on
    its right counts -1. Works for self-intersecting curves.
    """
    rel = _close(points) - point
    x0, y0 = rel[:-1].real, rel[:-1].imag
    x1, y1 = rel[1:].real, rel[1:].imag
    is_left = x0 * y1 - x1 * y0
    upward = (y0 <= 0) & (y1 > 0) & (is_left > 0)
    downward = (y0 > 0) & (y1 <= 0) & (is_left < 0)
    return int(np.count_nonzero(upward)) - int(np.count_nonzero(downward))


def distance_to_polyline(points: np.ndarray, point: complex) -> float:
    """Euclidean distance from ``point`` to the closed polyline."""
    closed = _close(points)
    start = closed[:-1]
    edge = closed[1:] - start
    length2 = edge.real ** 2 + edge.imag ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        t = ((point - start) * np.conj(edge)).real / length2
    t = np.clip(np.nan_to_num(t, nan=0.0), 0.0, 1.0)
    return float(np.min(np.abs(start + t * edge - point)))


def diameter(points: np.ndarray) -> float:
    """Diagonal of the bounding box; within a factor sqrt(2) of the diameter."""
    points = np.asarray(points, dtype=np.complex128)
    return float(np.hypot(np.ptp(points.real), np.ptp(points.imag)))


def _cross(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return (np.conj(b - a) * (c - a)).imag


def polylines_intersect(first: np.ndarray, second: np.ndarray, chunk: int = 1024) -> bool:
    """True if any edge of one closed polyline meets an edge of the other.

    Touching edges count as meeting.
    """
    a = _close(first)
    b = _close(second)
    p1, p2 = a[:-1, None], a[1:, None]
    q1, q2 = b[None, :-1], b[None, 1:]
    for lo in range(0, p1.shape[0], chunk):
        s1, s2 = p1[lo:lo + chunk], p2[lo:lo + chunk]
        o1 = _cross(s1, s2, q1)
        o2 = _cross(s1, s2, q2)
        o3 = _cross(q1, q2, s1)
        o4 = _cross(q1, q2, s2)
        if np.any((o1 * o2 <= 0) & (o3 * o4 <= 0)):
            return True
    return False
