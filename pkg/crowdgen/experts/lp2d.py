"""Incremental 2-D linear programming over half-planes and a speed disc.

A half-plane is valid on the left of its directed line: ``cross(direction, point - v) <= 0``.
"""
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..errors import Infeasible
from ..geometry import EPS, Vec2, cross, unit


class HalfPlane(NamedTuple):
    point: Vec2
    direction: Vec2

    def violation(self, v: Vec2) -> float:
        """Signed distance by which `v` lies outside; <= 0 inside."""
        return float(cross(self.direction, self.point - v))


def _solve_on_line(lines: Sequence[HalfPlane], i: int, radius: float, optimum: Vec2,
                   direction_opt: bool) -> Optional[Vec2]:
    line = lines[i]
    dot = float(line.point @ line.direction)
    disc = dot * dot + radius * radius - float(line.point @ line.point)
    if disc < 0:
        # the line misses the speed disc
        return None
    root = np.sqrt(disc)
    t_left, t_right = -dot - root, -dot + root
    for j in range(i):
        denom = float(cross(line.direction, lines[j].direction))
        numer = float(cross(lines[j].direction, line.point - lines[j].point))
        if abs(denom) <= EPS:
            if numer < 0:
                return None
            continue
        t = numer / denom
        if denom >= 0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return None
    if direction_opt:
        t = t_right if float(optimum @ line.direction) > 0 else t_left
    else:
        t = min(max(float(line.direction @ (optimum - line.point)), t_left), t_right)
    return line.point + t * line.direction


def _solve(lines: Sequence[HalfPlane], radius: float, optimum: Vec2, direction_opt: bool) -> Tuple[int, Vec2]:
    """Returns (number of constraints satisfied in order, result so far)."""
    if direction_opt:
        result = optimum * radius
    elif float(optimum @ optimum) > radius * radius:
        result = unit(optimum) * radius
    else:
        result = np.array(optimum, dtype=np.float64)
    for i, line in enumerate(lines):
        if line.violation(result) > 0:
            candidate = _solve_on_line(lines, i, radius, optimum, direction_opt)
            if candidate is None:
                return i, result
            result = candidate
    return len(lines), result


def solve_lp2d(constraints: Sequence[HalfPlane], preferred: Vec2, radius: float) -> Vec2:
    """Point of the disc and every half-plane closest to `preferred`; raises Infeasible otherwise."""
    assert radius > 0
    count, result = _solve(constraints, radius, np.asarray(preferred, dtype=np.float64), False)
    if count < len(constraints):
        raise Infeasible(count, result)
    return result


def safest_velocity(constraints: Sequence[HalfPlane], num_hard: int, begin: int, partial: Vec2,
                    radius: float) -> Vec2:
    """Minimises the largest violation over constraints ``num_hard..`` starting from `begin`.

    The first `num_hard` constraints (obstacles) are kept strictly.
    """
    result = np.array(partial, dtype=np.float64)
    distance = 0.0
    for i in range(begin, len(constraints)):
        line = constraints[i]
        if line.violation(result) <= distance:
            continue
        projected: List[HalfPlane] = list(constraints[:num_hard])
        for j in range(num_hard, i):
            other = constraints[j]
            determinant = float(cross(line.direction, other.direction))
            if abs(determinant) <= EPS:
                if float(line.direction @ other.direction) > 0:
                    continue
                point = 0.5 * (line.point + other.point)
            else:
                t = float(cross(other.direction, line.point - other.point)) / determinant
                point = line.point + t * line.direction
            projected.append(HalfPlane(point, unit(other.direction - line.direction)))
        fallback = result
        count, result = _solve(projected, radius, np.array([-line.direction[1], line.direction[0]]), True)
        if count < len(projected):
            result = fallback
        distance = line.violation(result)
    return result
