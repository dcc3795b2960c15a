"""Exact 2-D primitives shared by sensing, experts, planners and the collision metrics.

Points and vectors are float64 numpy arrays of shape ``(2,)``; batched helpers accept any
leading shape. Every routine is a pure function of its inputs.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from matplotlib.path import Path

from .errors import ValidationError

EPS = 1e-9

Vec2 = np.ndarray


def vec2(x, y=None) -> Vec2:
    """Builds a finite 2-vector from ``(x, y)`` or a length-2 sequence."""
    value = np.asarray((x, y) if y is not None else x, dtype=np.float64).reshape(2)
    if not np.all(np.isfinite(value)):
        raise ValidationError(f'non-finite vector {value}')
    return value


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def norm(a: np.ndarray) -> np.ndarray:
    return np.hypot(a[..., 0], a[..., 1])


def unit(a: Vec2) -> Vec2:
    length = float(norm(a))
    if length < EPS:
        return np.zeros(2)
    return a / length


def clamp_norm(a: np.ndarray, limit: float) -> np.ndarray:
    """Scales vectors (last axis) longer than `limit` down to exactly `limit`."""
    length = norm(a)
    scale = np.where(length > limit, limit / np.maximum(length, EPS), 1.0)
    return a * scale[..., None]


def heading(angle: float) -> Vec2:
    return np.array([np.cos(angle), np.sin(angle)])


class Segment(NamedTuple):
    a: Vec2
    b: Vec2

    @classmethod
    def of(cls, a, b) -> 'Segment':
        return cls(vec2(a), vec2(b))


@dataclass(frozen=True, eq=False)
class Polygon:
    """Simple polygon, stored counter-clockwise."""
    vertices: np.ndarray

    def __post_init__(self) -> None:
        vertices = np.asarray(self.vertices, dtype=np.float64)
        if vertices.ndim != 2 or vertices.shape[1] != 2 or len(vertices) < 3:
            raise ValidationError('a polygon needs at least 3 two-dimensional vertices')
        if not np.all(np.isfinite(vertices)):
            raise ValidationError('polygon vertices must be finite')
        area = _signed_area(vertices)
        if abs(area) < EPS:
            raise ValidationError('polygon is degenerate (zero area)')
        if area < 0:
            vertices = vertices[::-1].copy()
        vertices.setflags(write=False)
        object.__setattr__(self, 'vertices', vertices)
        if not self._is_simple():
            raise ValidationError('polygon edges self-intersect')

    @classmethod
    def rectangle(cls, xmin: float, ymin: float, xmax: float, ymax: float) -> 'Polygon':
        return cls(np.array([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]]))

    @property
    def edges(self) -> np.ndarray:
        return np.stack([self.vertices, np.roll(self.vertices, -1, axis=0)], axis=1)

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    @property
    def bbox(self) -> Tuple[float, float, float, float]:
        lo, hi = self.vertices.min(0), self.vertices.max(0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    @cached_property
    def path(self) -> Path:
        return Path(self.vertices, closed=False)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Interior test over any leading shape; points on the boundary may go either way."""
        points = np.asarray(points, dtype=np.float64)
        inside = self.path.contains_points(points.reshape(-1, 2))
        return inside.reshape(points.shape[:-1])

    def _is_simple(self) -> bool:
        edges = self.edges
        n = len(edges)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if seg_intersect(Segment(*edges[i]), Segment(*edges[j])) is not None:
                    return False
        return True


def _signed_area(vertices: np.ndarray) -> float:
    return 0.5 * float(np.sum(cross(vertices, np.roll(vertices, -1, axis=0))))


class ObstacleSet(object):
    """Flattened edge table over a list of polygons, built once per scenario."""

    def __init__(self, polygons: Sequence[Polygon]) -> None:
        self.polygons = tuple(polygons)
        if self.polygons:
            self.edges = np.concatenate([p.edges for p in self.polygons])
            self.owner = np.concatenate([np.full(len(p.vertices), k) for k, p in enumerate(self.polygons)])
        else:
            self.edges = np.zeros((0, 2, 2))
            self.owner = np.zeros(0, dtype=int)

    def __len__(self) -> int:
        return len(self.polygons)

    def inside(self, point: np.ndarray) -> int:
        """Index of the polygon whose interior holds `point`, or -1."""
        for k, polygon in enumerate(self.polygons):
            if polygon.contains(point):
                return k
        return -1

    def clearance(self, points: np.ndarray) -> np.ndarray:
        """Distance from each point to the nearest edge; 0 for points inside an obstacle."""
        points = np.atleast_2d(points)
        if not len(self.edges):
            return np.full(len(points), np.inf)
        dist = point_segment_distances(points[:, None, :], self.edges[None, :, 0], self.edges[None, :, 1]).min(-1)
        inside = np.zeros(len(points), dtype=bool)
        for polygon in self.polygons:
            inside |= polygon.contains(points)
        return np.where(inside, 0.0, dist)

    @cached_property
    def bbox(self) -> Optional[Tuple[float, float, float, float]]:
        if not self.polygons:
            return None
        points = self.edges.reshape(-1, 2)
        lo, hi = points.min(0), points.max(0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])


def seg_intersect(s1: Segment, s2: Segment) -> Optional[Vec2]:
    """Intersection point of two closed segments.

    Collinear overlaps report the overlap point nearest ``s1.a``; returns None when the
    segments are disjoint.
    """
    p, q = np.asarray(s1.a, float), np.asarray(s2.a, float)
    r, s = np.asarray(s1.b, float) - p, np.asarray(s2.b, float) - q
    qp = q - p
    r_len2, s_len2 = float(r @ r), float(s @ s)
    if r_len2 < EPS ** 2 and s_len2 < EPS ** 2:
        return p.copy() if float(norm(qp)) <= EPS else None
    if r_len2 < EPS ** 2:
        return p.copy() if point_seg_distance(p, s2) <= EPS else None
    if s_len2 < EPS ** 2:
        return q.copy() if point_seg_distance(q, s1) <= EPS else None

    rxs = float(cross(r, s))
    if abs(rxs) <= EPS * np.sqrt(r_len2 * s_len2):
        if abs(float(cross(qp, r))) > EPS * np.sqrt(r_len2):
            return None
        t0 = float(qp @ r) / r_len2
        t1 = t0 + float(s @ r) / r_len2
        lo, hi = min(t0, t1), max(t0, t1)
        if hi < -EPS or lo > 1 + EPS:
            return None
        return p + min(max(lo, 0.0), 1.0) * r

    t = float(cross(qp, s)) / rxs
    u = float(cross(qp, r)) / rxs
    if -EPS <= t <= 1 + EPS and -EPS <= u <= 1 + EPS:
        return p + min(max(t, 0.0), 1.0) * r
    return None


def point_segment_distances(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Broadcasting distance from points `p` to segments ``a-b``."""
    d = b - a
    length2 = np.sum(d * d, axis=-1)
    t = np.sum((p - a) * d, axis=-1) / np.where(length2 < EPS ** 2, 1.0, length2)
    t = np.where(length2 < EPS ** 2, 0.0, np.clip(t, 0.0, 1.0))
    return norm(p - (a + t[..., None] * d))


def point_seg_distance(p: Vec2, s: Segment) -> float:
    return float(point_segment_distances(np.asarray(p, float), np.asarray(s.a, float), np.asarray(s.b, float)))


def segment_distances(p0: np.ndarray, p1: np.ndarray, q0: np.ndarray, q1: np.ndarray) -> np.ndarray:
    """Broadcasting minimum distance between closed segments ``p0-p1`` and ``q0-q1``."""
    r, s = p1 - p0, q1 - q0
    o1 = cross(r, q0 - p0)
    o2 = cross(r, q1 - p0)
    o3 = cross(s, p0 - q0)
    o4 = cross(s, p1 - q0)
    crossing = (o1 * o2 < 0) & (o3 * o4 < 0)
    dist = np.minimum(
        np.minimum(point_segment_distances(p0, q0, q1), point_segment_distances(p1, q0, q1)),
        np.minimum(point_segment_distances(q0, p0, p1), point_segment_distances(q1, p0, p1)))
    return np.where(crossing, 0.0, dist)


class RayHits(NamedTuple):
    distance: np.ndarray
    # 0: nothing within range, 1: obstacle, 2: disc
    kind: np.ndarray
    # disc index for kind 2, obstacle index for kind 1
    index: np.ndarray


def cast_rays(origin: Vec2, angles: np.ndarray, obstacles: ObstacleSet,
              disc_centers: Optional[np.ndarray] = None, disc_radii: Optional[np.ndarray] = None,
              max_range: float = 10.0) -> RayHits:
    """Casts one ray per angle and reports the first surface hit, clamped to `max_range`.

    A ray starting inside an obstacle or a disc reports distance 0 against it.
    """
    assert max_range > 0
    origin = np.asarray(origin, dtype=np.float64)
    angles = np.asarray(angles, dtype=np.float64)
    d = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    n = len(angles)
    distance = np.full(n, float(max_range))
    kind = np.zeros(n, dtype=np.int64)
    index = np.full(n, -1, dtype=np.int64)

    if len(obstacles):
        containing = obstacles.inside(origin)
        if containing >= 0:
            return RayHits(np.zeros(n), np.ones(n, dtype=np.int64), np.full(n, containing, dtype=np.int64))
        a = obstacles.edges[:, 0]
        e = obstacles.edges[:, 1] - a
        ao = a - origin
        denom = cross(d[:, None, :], e[None, :, :])
        safe = np.where(np.abs(denom) > EPS, denom, 1.0)
        t = cross(ao, e)[None, :] / safe
        u = cross(ao[None, :, :], d[:, None, :]) / safe
        valid = (np.abs(denom) > EPS) & (t >= -EPS) & (u >= -EPS) & (u <= 1 + EPS)
        t = np.where(valid, np.maximum(t, 0.0), np.inf)
        nearest = t.argmin(axis=1)
        best = t[np.arange(n), nearest]
        closer = best < distance
        distance = np.where(closer, best, distance)
        kind = np.where(closer, 1, kind)
        index = np.where(closer, obstacles.owner[nearest], index)

    if disc_centers is not None and len(disc_centers):
        oc = np.asarray(disc_centers, dtype=np.float64) - origin
        radii = np.asarray(disc_radii, dtype=np.float64)
        proj = d @ oc.T
        c2 = np.sum(oc * oc, axis=-1) - radii ** 2
        disc = proj ** 2 - c2[None, :]
        entry = proj - np.sqrt(np.maximum(disc, 0.0))
        valid = (disc >= 0) & (entry >= 0)
        t = np.where(c2[None, :] <= 0, 0.0, np.where(valid, entry, np.inf))
        nearest = t.argmin(axis=1)
        best = t[np.arange(n), nearest]
        closer = best < distance
        distance = np.where(closer, best, distance)
        kind = np.where(closer, 2, kind)
        index = np.where(closer, nearest, index)

    return RayHits(np.minimum(distance, max_range), kind, index)


def raycast(origin: Vec2, angle: float, obstacles: Sequence[Polygon] = (),
            disc_centers: Optional[np.ndarray] = None, disc_radii: Optional[np.ndarray] = None,
            max_range: float = 10.0) -> float:
    """Distance from `origin` along `angle` to the first obstacle edge or disc surface."""
    if not isinstance(obstacles, ObstacleSet):
        obstacles = ObstacleSet(obstacles)
    hits = cast_rays(origin, np.array([angle]), obstacles, disc_centers, disc_radii, max_range)
    return float(hits.distance[0])


def _smallest_unit_root(a: float, b: float, c: float) -> Optional[float]:
    """Smallest root in [0, 1] of ``a t^2 + b t + c``."""
    if abs(a) < EPS ** 2:
        if abs(b) < EPS ** 2:
            return None
        t = -c / b
        return t if 0.0 <= t <= 1.0 else None
    disc = b * b - 4 * a * c
    if disc < 0:
        # tangency lost to rounding
        if disc > -EPS * max(1.0, b * b):
            disc = 0.0
        else:
            return None
    root = np.sqrt(disc)
    for t in sorted(((-b - root) / (2 * a), (-b + root) / (2 * a))):
        if 0.0 <= t <= 1.0:
            return float(t)
    return None


def swept_circle_vs_segment(center0: Vec2, center1: Vec2, radius: float, edge: Segment) -> Optional[float]:
    """First time fraction in [0, 1] at which a disc moving linearly touches the closed edge.

    Solved exactly: contact either starts against the interior of the edge (the signed distance
    to its supporting line is linear in time) or against one of its endpoints (a quadratic).
    """
    assert radius > 0
    c0 = np.asarray(center0, dtype=np.float64)
    m = np.asarray(center1, dtype=np.float64) - c0
    a, b = np.asarray(edge.a, dtype=np.float64), np.asarray(edge.b, dtype=np.float64)
    if point_seg_distance(c0, Segment(a, b)) <= radius:
        return 0.0

    candidates = []
    mm = float(m @ m)
    for p in (a, b):
        w = c0 - p
        t = _smallest_unit_root(mm, 2 * float(m @ w), float(w @ w) - radius ** 2)
        if t is not None:
            candidates.append(t)

    e = b - a
    length = float(norm(e))
    if length > EPS:
        normal = np.array([-e[1], e[0]]) / length
        s0 = float(normal @ (c0 - a))
        ds = float(normal @ m)
        if abs(ds) > EPS ** 2:
            for target in (radius, -radius):
                t = (target - s0) / ds
                if 0.0 <= t <= 1.0:
                    u = float((c0 + t * m - a) @ e) / length ** 2
                    if 0.0 <= u <= 1.0:
                        candidates.append(t)
    return min(candidates) if candidates else None


def swept_contacts(center0: np.ndarray, center1: np.ndarray, radius: float, edges: np.ndarray) -> np.ndarray:
    """Batched contact test: ``(S,)`` moves against ``(E, 2, 2)`` edges gives an ``(S, E)`` mask.

    A moving disc touches an edge during the move iff the centre's path comes within `radius`
    of it, so this agrees with :func:`swept_circle_vs_segment` on contact presence.
    """
    c0 = np.asarray(center0, dtype=np.float64)[:, None, :]
    c1 = np.asarray(center1, dtype=np.float64)[:, None, :]
    return segment_distances(c0, c1, edges[None, :, 0], edges[None, :, 1]) <= radius
