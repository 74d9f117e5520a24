"""Two-stage discretization grid of the backward time interval [delta, T].

The grid runs uniform steps of size h from T down to h, then geometrically
halving steps h/2, h/4, ... until the next halving would land within 2*delta
of the origin, and finally the early-stopping time delta itself.  The first
step h_1 = t_2 - delta is therefore at most delta.  When T is not an integer
multiple of h the remainder is absorbed in the step adjacent to the stage
boundary, kept <= h.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

_REL_TOL = 1e-12


class GridRangeError(ValueError):
    """Raised when (delta, h, T) violate 0 < delta < h/2 <= T/2."""


@dataclass(frozen=True)
class TimeGrid:
    """Increasing times t_1 = delta < ... < t_N = T.

    stage_boundary is the 0-based index of the point where the uniform
    stage begins (the point with value ~h, the paper-style index N_1).
    """

    delta: float
    h: float
    T: float
    points: np.ndarray
    stage_boundary: int

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.points)

    @property
    def h1(self) -> float:
        """First (remainder) step t_2 - delta."""
        return float(self.points[1] - self.points[0])

    def to_json(self) -> str:
        return json.dumps(
            {
                "delta": self.delta,
                "h": self.h,
                "T": self.T,
                "stage_boundary": self.stage_boundary,
                "points": self.points.tolist(),
            }
        )


def expected_point_count(delta: float, h: float, T: float) -> int:
    """Closed-form N for build_grid; documented invariant
    N = O(T/h + log2(h/delta)).

    Uniform stage: 1 + ceil((T - h)/h) points (one extra when the division
    leaves a remainder).  Halving stage: all h/2^j with j >= 1 that exceed
    2*delta, plus the first one at or below 2*delta when it still exceeds
    delta, plus the final point delta.
    """
    tol = _REL_TOL * max(1.0, T) * 4
    n_full = int(math.floor((T - h) / h + _REL_TOL * 4))
    n_uniform = n_full + 1
    if (T - h) - n_full * h > tol:
        n_uniform += 1
    n_halving = 0
    q = h / 2.0
    while q > 2.0 * delta * (1 + _REL_TOL):
        n_halving += 1
        q /= 2.0
    if q > delta * (1 + _REL_TOL):
        n_halving += 1
    return n_uniform + n_halving + 1


def build_grid(delta: float, h: float, T: float) -> TimeGrid:
    """Construct the two-stage grid.  Requires 0 < delta < h/2 <= T/2."""
    if not (0 < delta and delta < h / 2.0 and h <= T):
        raise GridRangeError(
            f"need 0 < delta < h/2 <= T/2, got delta={delta}, h={h}, T={T}"
        )
    tol = _REL_TOL * max(1.0, T)

    # uniform stage, descending from T; snap or append the boundary point h
    n_full = int(math.floor((T - h) / h + _REL_TOL * 4))
    descending = [T - j * h for j in range(n_full + 1)]
    if descending[-1] > h + tol:
        descending.append(h)
    else:
        descending[-1] = h
    stage1_len = len(descending)

    # halving stage: h/2, h/4, ... while still above 2*delta, then the first
    # value at or below 2*delta (this makes h_1 <= delta), then delta
    q = h / 2.0
    while q > 2.0 * delta * (1 + _REL_TOL):
        descending.append(q)
        q /= 2.0
    if q > delta * (1 + _REL_TOL):
        descending.append(q)
    descending.append(delta)

    points = np.asarray(descending[::-1], dtype=float)
    stage_boundary = points.shape[0] - stage1_len
    return TimeGrid(delta=float(delta), h=float(h), T=float(T),
                    points=points, stage_boundary=stage_boundary)


def uniform_grid(delta: float, h: float, T: float) -> TimeGrid:
    """Plain uniform grid from T down in steps of h, ending at delta.

    Escape hatch for step sizes h <= 2*delta where the two-stage
    construction's precondition cannot hold; the final step (into delta)
    has length <= h, so the grid is still a valid solver schedule even
    though it does not satisfy the two-stage invariants.
    """
    if not (0 < delta < h <= T):
        raise GridRangeError(
            f"need 0 < delta < h <= T, got delta={delta}, h={h}, T={T}"
        )
    tol = _REL_TOL * max(1.0, T)
    descending = [T]
    while descending[-1] - h > delta + tol:
        descending.append(descending[-1] - h)
    descending.append(delta)
    points = np.asarray(descending[::-1], dtype=float)
    return TimeGrid(delta=float(delta), h=float(h), T=float(T),
                    points=points, stage_boundary=0)


def grid_diagnostics(grid: TimeGrid) -> list[str]:
    """List of violated invariants (empty when the grid is valid)."""
    out: list[str] = []
    p = grid.points
    tol = _REL_TOL * max(1.0, grid.T) * 8
    if p.ndim != 1 or p.shape[0] < 2:
        return ["grid must contain at least 2 points"]
    if not np.all(np.diff(p) > 0):
        out.append("points are not strictly increasing")
    if abs(p[0] - grid.delta) > tol:
        out.append(f"t_1 = {p[0]} != delta = {grid.delta}")
    if abs(p[-1] - grid.T) > tol:
        out.append(f"t_N = {p[-1]} != T = {grid.T}")
    n1 = grid.stage_boundary
    if not (0 <= n1 < p.shape[0]):
        return out + [f"stage_boundary {n1} out of range"]
    if p[n1] > grid.h + tol:
        out.append(f"t_N1 = {p[n1]} exceeds h = {grid.h}")
    if p[1] - p[0] > grid.delta + tol:
        out.append(f"first step {p[1] - p[0]} exceeds delta = {grid.delta}")
    steps = np.diff(p)
    # uniform stage: all steps h except possibly the one leaving t_N1
    for k in range(n1, steps.shape[0]):
        if k == n1:
            if steps[k] > grid.h + tol:
                out.append(f"step {k} after boundary exceeds h")
        elif abs(steps[k] - grid.h) > tol:
            out.append(f"uniform-stage step {k} = {steps[k]} != h")
    # halving stage: each step doubles the previous one, first step exempt
    for k in range(1, n1 - 1):
        if abs(steps[k + 1] - 2.0 * steps[k]) > tol:
            out.append(
                f"halving-stage step ratio at {k}: "
                f"{steps[k + 1]} != 2 * {steps[k]}"
            )
    return out


def validate_grid(grid: TimeGrid) -> bool:
    """True iff every grid invariant holds within 1e-12 tolerance."""
    return not grid_diagnostics(grid)
