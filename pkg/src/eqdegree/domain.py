"""Invariant domains as saturated box unions, and stratum component charts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import ndimage

from . import exact as ex
from . import kernels
from .errors import DimensionMismatch, EmptyDomain, OutsideChart, ResolutionTooCoarse
from .group import (
    FiniteGroup,
    OrbitTypeEntry,
    OrbitTypeTable,
    Subgroup,
    SubspaceBasis,
    fixed_subspace,
    isotropy_types,
)
from .options import DEFAULT, Options


def _num(v):
    try:
        return ex.to_fraction(v)
    except (ValueError, TypeError):
        return float(v)


def _parse_box(box, n):
    box = [tuple(axis) for axis in box]
    if len(box) != n or any(len(a) != 2 for a in box):
        raise DimensionMismatch(f"box {box!r} does not have {n} [lo, hi] axes")
    lo = tuple(_num(a[0]) for a in box)
    hi = tuple(_num(a[1]) for a in box)
    if any(not (a < b) for a, b in zip(lo, hi)):
        raise DimensionMismatch(f"box {box!r} has an empty axis")
    return lo, hi


class InvariantDomain:
    """Open G-invariant set stored as (g, box) pairs meaning g * box.

    Membership is ``g^-1 x in box`` for some stored pair; boxes are open.
    """

    def __init__(self, group: FiniteGroup, boxes, pairs):
        self.group = group
        self.boxes = list(boxes)
        self.pairs = list(pairs)
        n = group.dim
        P = len(self.pairs)
        self.inv_mats = np.array(
            [group.mats[group.inverse[g]] for g, _ in self.pairs]
        ).reshape(P, n, n)
        self.lo = np.array([[float(v) for v in self.boxes[b][0]] for _, b in self.pairs]).reshape(P, n)
        self.hi = np.array([[float(v) for v in self.boxes[b][1]] for _, b in self.pairs]).reshape(P, n)
        self.exact = group.is_exact and all(
            isinstance(v, Fraction) for lo, hi in self.boxes for v in lo + hi
        )
        self._shell_cache = {}

    @property
    def dim(self) -> int:
        return self.group.dim

    @property
    def is_empty(self) -> bool:
        return not self.pairs

    def contains(self, x) -> bool:
        if self.exact and isinstance(x, (tuple, list)) and all(
            isinstance(v, (Fraction, int)) for v in x
        ):
            xs = tuple(Fraction(v) for v in x)
            G = self.group
            for g, b in self.pairs:
                z = ex.matvec(G.exact[G.inverse[g]], xs)
                lo, hi = self.boxes[b]
                if all(a < v < c for a, v, c in zip(lo, z, hi)):
                    return True
            return False
        return bool(self.contains_batch(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def contains_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.dim)
        if self.is_empty:
            return np.zeros(X.shape[0], dtype=bool)
        return kernels.contains_boxes(X, self.inv_mats, self.lo, self.hi)

    def bounding_box(self):
        corners = []
        n = self.dim
        for p in range(len(self.pairs)):
            g = self.inv_mats[p].T
            for bits in range(2**n):
                c = np.where([(bits >> i) & 1 for i in range(n)], self.hi[p], self.lo[p])
                corners.append(g @ c)
        C = np.array(corners)
        return C.min(axis=0), C.max(axis=0)

    def radius(self) -> float:
        r = 0.0
        for lo, hi in zip(self.lo, self.hi):
            far = np.maximum(np.abs(lo), np.abs(hi))
            r = max(r, float(np.linalg.norm(far)))
        return r

    def smallest_edge(self):
        return min(h - l for lo, hi in self.boxes for l, h in zip(lo, hi))

    def default_delta(self):
        return self.smallest_edge() / 16

    def default_margin(self):
        return self.smallest_edge() / 10

    def boundary_distance(self, X) -> np.ndarray:
        """Lower bound on dist(x, complement) for each row of X (0 outside)."""
        X = np.asarray(X, dtype=float).reshape(-1, self.dim)
        best = np.zeros(X.shape[0])
        for p in range(len(self.pairs)):
            Z = X @ self.inv_mats[p].T
            m = np.minimum(Z - self.lo[p], self.hi[p] - Z).min(axis=1)
            best = np.maximum(best, m)
        return best

    def distance_to(self, X) -> np.ndarray:
        """Euclidean distance from each row of X to the domain's closure."""
        X = np.asarray(X, dtype=float).reshape(-1, self.dim)
        best = np.full(X.shape[0], np.inf)
        for p in range(len(self.pairs)):
            Z = X @ self.inv_mats[p].T
            gap = Z - np.clip(Z, self.lo[p], self.hi[p])
            best = np.minimum(best, np.linalg.norm(gap, axis=1))
        return best

    def shell_samples(self, margin, oversample: int = 8):
        """Grid points of the closed shell {x in domain : dist(x, boundary) <= margin}.

        Grid step is margin/oversample; returns (points, step).
        """
        key = (float(margin), oversample)
        if key in self._shell_cache:
            return self._shell_cache[key]
        margin = float(margin)
        step = margin / oversample
        lo, hi = self.bounding_box()
        axes = [np.arange(a - margin, b + margin + step, step) for a, b in zip(lo, hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        inside = self.contains_batch(pts).reshape(mesh[0].shape)
        rad = oversample
        span = np.arange(-rad, rad + 1)
        offs = np.meshgrid(*([span] * self.dim), indexing="ij")
        ball = sum(o.astype(float) ** 2 for o in offs) <= rad**2
        eroded = ndimage.binary_erosion(inside, structure=ball, border_value=0)
        shell = (inside & ~eroded).ravel()
        out = (pts[shell], step)
        self._shell_cache[key] = out
        return out

    def sample(self, rng, count: int, exact: bool = False):
        """Random points of the domain; rational tuples when ``exact``."""
        out = []
        G = self.group
        for _ in range(count):
            g, b = self.pairs[int(rng.integers(len(self.pairs)))]
            lo, hi = self.boxes[b]
            if exact and self.exact:
                z = tuple(
                    l + (h - l) * Fraction(int(rng.integers(1, 1024)), 1024)
                    for l, h in zip(lo, hi)
                )
                out.append(ex.matvec(G.exact[g], z))
            else:
                u = rng.uniform(0.01, 0.99, size=self.dim)
                z = np.array([float(l) + (float(h) - float(l)) * t for l, h, t in zip(lo, hi, u)])
                out.append(G.mats[g] @ z)
        return out

    def union(self, other: "InvariantDomain") -> "InvariantDomain":
        if other.group is not self.group:
            raise DimensionMismatch("domains over different groups")
        k = len(self.boxes)
        return InvariantDomain(
            self.group,
            self.boxes + other.boxes,
            self.pairs + [(g, b + k) for g, b in other.pairs],
        )

    def __repr__(self):
        return f"InvariantDomain(dim={self.dim}, boxes={len(self.boxes)}, pairs={len(self.pairs)})"


def _is_signed_permutation(M) -> bool:
    A = np.abs(np.asarray(M))
    return bool(np.all((A < 1e-12) | (np.abs(A - 1) < 1e-12)))


def saturate(boxes, G: FiniteGroup) -> InvariantDomain:
    """Omega = union over g of g * box for every box; duplicates collapsed."""
    if not boxes:
        raise EmptyDomain("no boxes given")
    parsed = [_parse_box(b, G.dim) for b in boxes]
    pairs = []
    seen = set()
    for b, (lo, hi) in enumerate(parsed):
        lo_f = np.array([float(v) for v in lo])
        hi_f = np.array([float(v) for v in hi])
        for g in range(G.order):
            M = G.mats[g]
            if _is_signed_permutation(M):
                a, c = M @ lo_f, M @ hi_f
                key = tuple(np.round(np.minimum(a, c), 12)) + tuple(np.round(np.maximum(a, c), 12))
                if key in seen:
                    continue
                seen.add(key)
            pairs.append((g, b))
    return InvariantDomain(G, parsed, pairs)


@dataclass(frozen=True)
class HypothesisStatus:
    holds: bool
    zero_in_domain: bool
    fixed_dim: int

    def describe(self) -> str:
        if not self.zero_in_domain:
            return "holds (0 not in domain)"
        if self.fixed_dim > 0:
            return f"holds (dim V^G = {self.fixed_dim})"
        return "violated (0 in domain and V^G = 0)"


def hypothesis_check(omega: InvariantDomain, G: Optional[FiniteGroup] = None) -> HypothesisStatus:
    G = G or omega.group
    zero = tuple(Fraction(0) for _ in range(G.dim)) if omega.exact else np.zeros(G.dim)
    inside = omega.contains(zero)
    k = fixed_subspace(G, G.whole()).dim
    return HypothesisStatus(holds=(not inside) or k > 0, zero_in_domain=inside, fixed_dim=k)


@dataclass(frozen=True, eq=False)
class CellGrid:
    delta: float
    offset: int
    index: np.ndarray
    centers: np.ndarray

    @property
    def count(self) -> int:
        return self.index.shape[0]


def classify_cells(omega: InvariantDomain, H: Subgroup, basis: SubspaceBasis, smaller, delta) -> CellGrid:
    """Grid cells of V^H whose centers lie in omega, have isotropy exactly H
    and are clear of every lattice subspace strictly inside V^H."""
    G = omega.group
    d = basis.dim
    dl = float(delta)
    if d == 0:
        origin = np.zeros((1, G.dim))
        ok = bool(omega.contains_batch(origin)[0]) and H.order == G.order
        idx = np.zeros((1 if ok else 0, 0), dtype=np.int64)
        return CellGrid(dl, 0, idx, np.zeros((idx.shape[0], 0)))
    R = omega.radius()
    K = int(math.ceil(R / dl))
    axis = np.arange(-K, K, dtype=np.int64)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    idx = np.stack([m.ravel() for m in mesh], axis=1)
    centers = (idx + 0.5) * dl
    X = centers @ basis.matrix.T
    keep = omega.contains_batch(X)
    others = np.array([g for g in range(G.order) if g not in H], dtype=np.int64)
    if others.size:
        sub = np.nonzero(keep)[0]
        dfx = kernels.orbit_defects(X[sub], G.mats[others])
        scale = np.maximum(1.0, np.linalg.norm(X[sub], axis=1))
        keep[sub] = np.all(dfx > 10 * G.tol * scale[:, None], axis=1)
    if smaller:
        sub = np.nonzero(keep)[0]
        projs = np.array([L.basis.projector() for L in smaller])
        dist = kernels.subspace_distances(X[sub], projs)
        half_diag = dl * math.sqrt(d) / 2
        keep[sub] = ~np.any(dist <= half_diag, axis=1)
    return CellGrid(dl, K, idx[keep], centers[keep])


@dataclass(eq=False)
class ComponentChart:
    entry_id: int
    delta: float
    basis: np.ndarray
    index: np.ndarray
    centers: np.ndarray
    pre_labels: np.ndarray
    quot_labels: np.ndarray
    reps: list
    offset: int
    lookup: Optional[np.ndarray]
    warnings: list = field(default_factory=list)

    @property
    def n_cells(self) -> int:
        return self.index.shape[0]

    @property
    def n_pre(self) -> int:
        return int(self.pre_labels.max()) + 1 if self.n_cells else 0

    @property
    def n_quot(self) -> int:
        return int(self.quot_labels.max()) + 1 if self.n_cells else 0

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def cells_of(self, alpha: int) -> np.ndarray:
        return np.nonzero(self.quot_labels == alpha)[0]

    def ambient(self, rows=None) -> np.ndarray:
        C = self.centers if rows is None else self.centers[rows]
        return C @ self.basis.T


def _cell_lookup(index, offset, d):
    shape = (2 * offset,) * d
    grid = np.full(shape, -1, dtype=np.int64)
    if index.shape[0]:
        grid[tuple((index + offset).T)] = np.arange(index.shape[0])
    return grid


def _lookup(grid, offset, k):
    """Vectorized grid lookup returning -1 for out-of-range indices."""
    k = np.asarray(k) + offset
    ok = np.all((k >= 0) & (k < grid.shape[0]), axis=1)
    out = np.full(k.shape[0], -1, dtype=np.int64)
    if ok.any():
        out[ok] = grid[tuple(k[ok].T)]
    return out


def stratum_chart(omega: InvariantDomain, table: OrbitTypeTable, entry: OrbitTypeEntry, delta) -> ComponentChart:
    """Cells of the stratum Omega_H with components before and after the WH quotient."""
    G = omega.group
    smaller = table.smaller_subspaces(entry)
    cells = classify_cells(omega, entry.H, entry.basis, smaller, delta)
    d = entry.dim
    B = entry.basis.matrix
    N = cells.count
    if N == 0:
        raise ResolutionTooCoarse(f"stratum {entry.id} has no cells at delta={float(delta):g}")
    if d == 0:
        return ComponentChart(
            entry.id, float(delta), B, cells.index, cells.centers,
            np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64),
            [np.zeros(G.dim)], 0, None,
        )
    K = cells.offset
    grid = _cell_lookup(cells.index, K, d)
    face = []
    for a in range(d):
        step = np.zeros(d, dtype=np.int64)
        step[a] = 1
        nb = _lookup(grid, K, cells.index + step)
        have = nb >= 0
        face.append(np.stack([np.nonzero(have)[0], nb[have]], axis=1))
    face = np.concatenate(face) if face else np.zeros((0, 2), dtype=np.int64)
    pre = kernels.label_components(N, face)

    warnings = []
    dl = cells.delta
    images = []
    for w, M in zip(entry.weyl.coset_reps, entry.weyl.action_on_fixed):
        if w == 0:
            continue
        img = cells.centers @ M.T
        kf = img / dl - 0.5
        k = np.rint(kf).astype(np.int64)
        frac = np.abs(kf - k)
        if np.any(frac > 1e-9):
            warnings.append(f"WH image of grid off-lattice by up to {frac.max() * dl:.3g}; snapped")
        if np.any(np.abs(frac - 0.5) < 1e-9):
            warnings.append("ambiguous snap of a WH image (exactly between cells)")
        j = _lookup(grid, K, k)
        missing = int(np.sum(j < 0))
        if missing:
            warnings.append(f"{missing} WH images fell outside the chart")
        have = j >= 0
        images.append(np.stack([np.nonzero(have)[0], j[have]], axis=1))
        fixed = np.linalg.norm(img - cells.centers, axis=1) <= 10 * G.tol
        if fixed.any():
            warnings.append("WH element fixes a stratum cell center (action not free)")
    edges = np.concatenate([face] + images) if images else face
    quot = kernels.label_components(N, edges)
    n_quot = int(quot.max()) + 1
    counts = np.bincount(quot, minlength=n_quot)
    if np.any(counts < 2):
        raise ResolutionTooCoarse(
            f"stratum {entry.id}: a quotient component has {int(counts.min())} cell(s) at delta={dl:g}"
        )
    reps = [cells.centers[np.argmax(quot == a)] @ B.T for a in range(n_quot)]
    return ComponentChart(entry.id, dl, B, cells.index, cells.centers, pre, quot, reps, K, grid, warnings)


def component_of(chart: ComponentChart, x) -> int:
    x = np.asarray(x, dtype=float)
    B = chart.basis
    u = B.T @ x
    if np.linalg.norm(x - B @ u) > 1e-6 * max(1.0, float(np.linalg.norm(x))):
        raise OutsideChart(f"point {x.tolist()} is not in the fixed subspace of stratum {chart.entry_id}")
    if chart.dim == 0:
        return 0
    k = np.floor(u / chart.delta).astype(np.int64).reshape(1, -1)
    j = int(_lookup(chart.lookup, chart.offset, k)[0])
    if j < 0:
        raise OutsideChart(f"point {x.tolist()} is not in a charted cell of stratum {chart.entry_id}")
    return int(chart.quot_labels[j])


def chart_with_refinement(omega, table, entry, delta, max_refine=DEFAULT.max_refine):
    d = delta
    for attempt in range(max_refine + 1):
        try:
            return stratum_chart(omega, table, entry, d)
        except ResolutionTooCoarse:
            if attempt == max_refine:
                raise
            d = d / 2


def stable_chart(omega, table, entry, delta, max_refine=DEFAULT.max_refine):
    """Refine until the quotient component count agrees at delta and delta/2.

    Returns (chart at the stabilized delta, list of (delta, count)).
    """
    history = []
    chart = chart_with_refinement(omega, table, entry, delta, max_refine)
    history.append((chart.delta, chart.n_quot))
    for _ in range(max_refine):
        finer = chart_with_refinement(omega, table, entry, chart.delta / 2, max_refine)
        history.append((finer.delta, finer.n_quot))
        if finer.n_quot == chart.n_quot:
            return chart, history
        chart = finer
    return chart, history


@dataclass(eq=False)
class Stratification:
    """Orbit-type table of a domain plus one chart per orbit type."""

    omega: InvariantDomain
    table: OrbitTypeTable
    charts: dict
    delta: object
    hypothesis: HypothesisStatus
    stable: bool = False
    history: dict = field(default_factory=dict)

    @property
    def group(self) -> FiniteGroup:
        return self.omega.group

    def chart(self, entry_id: int) -> ComponentChart:
        return self.charts[entry_id]

    def keys(self):
        return [(e.id, a) for e in self.table for a in range(self.charts[e.id].n_quot)]

    def refine(self, entry_id: int) -> ComponentChart:
        """Replace one chart by its refinement at half the cell size."""
        old = self.charts[entry_id]
        entry = self.table.entry(entry_id)
        new = chart_with_refinement(self.omega, self.table, entry, old.delta / 2)
        self.charts[entry_id] = new
        return new


def stratify(omega: InvariantDomain, delta=None, stable: bool = False, options: Options = DEFAULT) -> Stratification:
    if omega.is_empty:
        raise EmptyDomain("cannot stratify an empty domain")
    delta = delta if delta is not None else (options.delta or omega.default_delta())
    table = isotropy_types(omega.group, omega, delta)
    charts = {}
    history = {}
    for entry in table:
        if stable:
            charts[entry.id], history[entry.id] = stable_chart(omega, table, entry, delta, options.max_refine)
        else:
            charts[entry.id] = chart_with_refinement(omega, table, entry, delta, options.max_refine)
    return Stratification(omega, table, charts, delta, hypothesis_check(omega), stable, history)
