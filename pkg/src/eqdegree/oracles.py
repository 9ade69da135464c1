"""Independent brute-force degree oracles (sign changes and winding numbers).

These never look at zeros or Jacobians, so they cross-check the Newton-based
engine from the outside.
"""
from __future__ import annotations

import math

import numpy as np

from . import kernels
from .domain import ComponentChart
from .errors import BoundaryTooClose, StepTooCoarse, ZeroAtEndpoint
from .options import DEFAULT


def _sgn(v: float) -> int:
    return 1 if v > 0 else -1


def oracle_degree_1d(g, intervals, eta: float = 0.0) -> int:
    """Sum over intervals (a, b) of (sgn g(b) - sgn g(a)) / 2."""
    total = 0
    for a, b in intervals:
        ga, gb = float(g(a)), float(g(b))
        for x, v in ((a, ga), (b, gb)):
            if abs(v) <= eta:
                raise ZeroAtEndpoint(f"g vanishes at interval endpoint {x}")
        total += (_sgn(gb) - _sgn(ga)) // 2
    return total


def polygon_points(vertices, steps: int) -> np.ndarray:
    """``steps`` points spread along a closed polygon proportionally to edge length."""
    V = np.asarray(vertices, dtype=float)
    W = np.vstack([V, V[:1]])
    lengths = np.linalg.norm(np.diff(W, axis=0), axis=1)
    total = lengths.sum()
    pts = []
    for k in range(len(V)):
        m = max(1, int(round(steps * lengths[k] / total)))
        s = np.arange(m) / m
        pts.append(W[k] + s[:, None] * (W[k + 1] - W[k]))
    P = np.vstack(pts)
    return np.vstack([P, P[:1]])


def oracle_degree_2d(g, polygon, steps: int = 4096, eta: float = DEFAULT.eta_loc) -> int:
    """Winding number of g along a closed polygon (counter-clockwise positive).

    ``g`` maps an (N, 2) array to an (N, 2) array.
    """
    P = polygon_points(polygon, steps)
    vals = np.asarray(g(P), dtype=float)
    norms = np.linalg.norm(vals, axis=1)
    if norms.min() < eta:
        k = int(np.argmin(norms))
        raise BoundaryTooClose(f"|g| = {norms[k]:.3g} at boundary point {P[k].tolist()}")
    inc = kernels.angle_increments(vals)
    if np.abs(inc).max() >= math.pi / 2:
        raise StepTooCoarse(f"angle increment {np.abs(inc).max():.3f} >= pi/2; increase steps")
    return int(round(inc.sum() / (2 * math.pi)))


def square(center, half):
    cx, cy = center
    return [(cx - half, cy - half), (cx + half, cy - half), (cx + half, cy + half), (cx - half, cy + half)]


def component_intervals(chart: ComponentChart, alpha: int, pre_label=None):
    """Maximal runs of consecutive 1-d cells in one quotient component.

    With ``pre_label`` set, only that pre-quotient component is returned.
    """
    if chart.dim != 1:
        raise ValueError("component_intervals needs a 1-dimensional chart")
    sel = chart.quot_labels == alpha
    if pre_label is not None:
        sel &= chart.pre_labels == pre_label
    ks = np.sort(chart.index[sel, 0])
    out = []
    if ks.size == 0:
        return out
    start = prev = ks[0]
    for k in ks[1:]:
        if k != prev + 1:
            out.append((start * chart.delta, (prev + 1) * chart.delta))
            start = k
        prev = k
    out.append((start * chart.delta, (prev + 1) * chart.delta))
    return out
