"""Regular zeros per stratum, local indices, and the degree vector.

Zeros of the restricted map u -> B^T f(B u) are found by Newton iteration
seeded at every chart cell center (plus any seeds the map pieces advertise).
The degree entry of a quotient component is the signed zero count divided by
|WH|, with the division checked on integers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .domain import (
    ComponentChart,
    InvariantDomain,
    Stratification,
    _lookup,
    component_of,
    stratify,
    stratum_chart,
)
from .errors import (
    AmbiguousIsotropy,
    DegenerateZero,
    DivisibilityViolation,
    OutsideChart,
    Singular,
)
from .group import OrbitTypeEntry, isotropy_group
from .maps import EquivariantLocalMap, PolyPiece
from .options import DEFAULT, Options


HYPOTHESIS_WARNING = (
    "hypothesis violated (0 in domain and dim V^G = 0): degree computed; "
    "classification completeness not guaranteed"
)


@dataclass
class Zero:
    point: np.ndarray
    orbit_type: int
    component: int
    jacobian: np.ndarray
    sign: int
    orbit: int
    margin: float

    @property
    def coords(self):
        return tuple(float(v) for v in self.point)


@dataclass(eq=False)
class DegreeVector:
    """Integer entries keyed by (orbit-type id, quotient component id).

    ``entries`` lists every key of the stratification (zeros included) so that
    reports show the full index set; equality only looks at nonzero entries.
    """

    entries: dict = field(default_factory=dict)

    @classmethod
    def zero(cls, keys) -> "DegreeVector":
        return cls({k: 0 for k in keys})

    def __getitem__(self, key) -> int:
        return self.entries.get(tuple(key), 0)

    def support(self) -> dict:
        return {k: v for k, v in sorted(self.entries.items()) if v != 0}

    def is_zero(self) -> bool:
        return not self.support()

    def __eq__(self, other) -> bool:
        if isinstance(other, dict):
            other = DegreeVector(dict(other))
        if not isinstance(other, DegreeVector):
            return NotImplemented
        return self.support() == other.support()

    def __add__(self, other: "DegreeVector") -> "DegreeVector":
        keys = set(self.entries) | set(other.entries)
        return DegreeVector({k: self[k] + other[k] for k in sorted(keys)})

    def __neg__(self) -> "DegreeVector":
        return DegreeVector({k: -v for k, v in self.entries.items()})

    def to_block(self) -> str:
        lines = ["#vector"]
        for (h, a), v in sorted(self.entries.items()):
            lines.append(f"H={h} alpha={a} deg={v}")
        return "\n".join(lines)

    @classmethod
    def parse_block(cls, text: str) -> "DegreeVector":
        entries = {}
        started = False
        for raw in text.splitlines():
            line = raw.strip()
            if line == "#vector":
                started = True
                continue
            if not started or not line:
                continue
            if line.startswith("#"):
                break
            fields = dict(part.split("=", 1) for part in line.split())
            entries[(int(fields["H"]), int(fields["alpha"]))] = int(fields["deg"])
        return cls(entries)

    def __repr__(self):
        body = ", ".join(f"({h},{a}): {v:+d}" for (h, a), v in self.support().items())
        return f"DegreeVector({{{body}}})"


@dataclass
class StratumResult:
    entry_id: int
    zeros: list
    raw: dict
    degrees: dict
    notes: list = field(default_factory=list)


@dataclass
class DegreeResult:
    vector: DegreeVector
    strata: dict
    hypothesis: object
    warnings: list = field(default_factory=list)

    @property
    def zeros(self) -> list:
        return [z for s in self.strata.values() for z in s.zeros]


# --- Newton -----------------------------------------------------------------------

def _newton_generic(piece, U0, B, maxit, tol, bound):
    """Batched Newton on B^T piece(B u); points leaving the region are dropped."""
    U = np.array(U0, dtype=float, copy=True)
    N = U.shape[0]
    ok = np.zeros(N, dtype=bool)
    resid = np.full(N, np.inf)
    active = np.ones(N, dtype=bool)
    eps = np.finfo(float).eps
    for _ in range(maxit + 1):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        X = U[idx] @ B.T
        inside = piece.region.contains_batch(X)
        active[idx[~inside]] = False
        idx, X = idx[inside], X[inside]
        if idx.size == 0:
            break
        F = piece.evaluate(X) @ B
        r = np.abs(F).max(axis=1)
        resid[idx] = r
        done = r <= tol
        ok[idx[done]] = True
        active[idx[done]] = False
        idx, X, F, r = idx[~done], X[~done], F[~done], r[~done]
        if idx.size == 0:
            break
        Js = np.einsum("ia,pij,jb->pab", B, piece.jacobian(X), B)
        det = np.linalg.det(Js)
        good = np.isfinite(det) & (np.abs(det) > 1e-300)
        active[idx[~good]] = False
        idx, F, Js, r = idx[good], F[good], Js[good], r[good]
        if idx.size == 0:
            break
        step = np.linalg.solve(Js, F[:, :, None])[:, :, 0]
        U[idx] -= step
        snorm = np.abs(step).max(axis=1)
        unorm = np.abs(U[idx]).max(axis=1)
        stalled = (snorm <= 4 * eps * (1.0 + unorm)) & (r <= 1e-9)
        ok[idx[stalled]] = True
        active[idx[stalled]] = False
        active[idx[~np.isfinite(unorm) | (unorm > bound)]] = False
    return U, resid, ok


def _newton(piece, U0, B, options: Options, bound):
    if isinstance(piece, PolyPiece) and U0.shape[0]:
        U, resid, ok = kernels.newton_poly(
            U0, B, piece.expr.compiled, piece.expr.compiled_jacobian,
            options.newton_maxit, options.newton_tol, bound,
        )
        ok = ok & piece.region.contains_batch(U @ B.T)
        return U, ok
    U, _, ok = _newton_generic(piece, U0, B, options.newton_maxit, options.newton_tol, bound)
    return U, ok


def _dedup(points, radius):
    """Greedy clustering in lexicographic order; returns representatives."""
    if points.shape[0] == 0:
        return points
    order = np.lexsort(points.T[::-1])
    reps = []
    for p in points[order]:
        if not reps or np.min(np.linalg.norm(np.array(reps) - p, axis=1)) > radius:
            reps.append(p)
    reps = np.array(reps)
    return reps[np.lexsort(reps.T[::-1])]


def _converged_points(f, U0, B, options, bound):
    found = []
    X0 = U0 @ B.T
    owner = f.piece_index(X0) if U0.shape[0] else np.zeros(0, dtype=np.int64)
    for k, piece in enumerate(f.pieces):
        sel = owner == k
        if not sel.any():
            continue
        U, ok = _newton(piece, U0[sel], B, options, bound)
        found.append(U[ok])
    if not found:
        return np.zeros((0, B.shape[1]))
    return np.vstack(found)


# --- zeros and stratum degrees ----------------------------------------------------------

def _locate(chart: ComponentChart, x, refine_chart):
    """Quotient component of x, refining locally when x misses the chart."""
    try:
        return component_of(chart, x)
    except OutsideChart:
        pass
    fine = chart
    for _ in range(DEFAULT.max_refine):
        fine = refine_chart(fine.delta / 2)
        try:
            a = component_of(fine, x)
        except OutsideChart:
            continue
        # map the fine component back through any fine cell sitting in a coarse cell
        cells = fine.cells_of(a)
        k = np.floor(fine.centers[cells] / chart.delta).astype(np.int64)
        j = _lookup(chart.lookup, chart.offset, k)
        j = j[j >= 0]
        if j.size:
            return int(chart.quot_labels[j[0]])
    raise OutsideChart(f"zero {np.asarray(x).tolist()} could not be assigned to a component")


def _sign_unstable(f, x, B, det, rho):
    """det of the restricted Jacobian at x +- rho along each chart axis whose
    sign differs from ``det`` (None when the sign is stable)."""
    d = B.shape[1]
    P = np.vstack([x + s * rho * B[:, i] for i in range(d) for s in (-1.0, 1.0)])
    P = P[f.contains_batch(P)]
    if P.shape[0] == 0:
        return None
    Js = np.einsum("ia,pij,jb->pab", B, f.jacobian(P), B)
    dets = np.linalg.det(Js)
    bad = np.sign(dets) != np.sign(det)
    return float(dets[np.argmax(bad)]) if bad.any() else None


def find_stratum_zeros(f: EquivariantLocalMap, entry: OrbitTypeEntry, chart: ComponentChart,
                       omega: Optional[InvariantDomain] = None, table=None,
                       options: Options = DEFAULT):
    """Regular zeros of f on the stratum of ``entry``; returns (zeros, notes)."""
    G = f.group
    notes = []
    d = entry.dim
    B = entry.basis.matrix
    if f.is_empty:
        return [], notes
    if d == 0:
        origin = np.zeros(G.dim)
        if f.contains_batch(origin)[0] and entry.H.order == G.order:
            return [Zero(origin, entry.id, 0, np.zeros((0, 0)), 1, 0, 1.0)], notes
        return [], notes

    seeds = [chart.centers]
    extra = f.seeds()
    if extra.shape[0]:
        seeds.append(extra @ B)
    U0 = np.vstack(seeds)
    bound = 10 * ((omega.radius() if omega is not None else np.abs(U0).max()) + 1)
    U = _converged_points(f, U0, B, options, bound)
    U = _dedup(U, options.r_dedup)
    # second pass from the WH images of what was found: completes orbits that
    # the grid seeds happened to miss without assuming equivariance
    if U.shape[0] and entry.weyl.order > 1:
        imgs = np.vstack([U @ M.T for M in entry.weyl.action_on_fixed])
        U = _dedup(np.vstack([U, _converged_points(f, imgs, B, options, bound)]), options.r_dedup)

    def refine_chart(delta):
        return stratum_chart(omega, table, entry, delta)

    zeros = []
    for u in U:
        x = B @ u
        try:
            iso = isotropy_group(G, x, G.tol)
        except AmbiguousIsotropy as exc:
            raise AmbiguousIsotropy(f"zero near a stratum wall: {exc}") from None
        if iso != entry.H:
            notes.append(f"discarded zero {(np.round(x, 9) + 0.0).tolist()} with larger isotropy {list(iso.members)}")
            continue
        J = f.jacobian(x)[0]
        Js = B.T @ J @ B
        det = float(np.linalg.det(Js))
        if abs(det) < options.eta_reg:
            raise DegenerateZero(
                f"degenerate zero at {np.round(x, 9).tolist()} (|det| = {abs(det):.3g}); perturb the map or refine",
                point=x, det=det,
            )
        flip = _sign_unstable(f, x, B, det, 10 * options.r_dedup)
        if flip is not None:
            raise DegenerateZero(
                f"degenerate zero at {np.round(x, 9).tolist()}: Jacobian sign changes within "
                f"{10 * options.r_dedup:g} (det {det:.3g} here, {flip:.3g} nearby); perturb the map",
                point=x, det=det,
            )
        alpha = _locate(chart, x, refine_chart) if omega is not None else component_of(chart, x)
        zeros.append(Zero(x, entry.id, alpha, Js, 1 if det > 0 else -1, -1, abs(det)))

    # orbit ids by WH-orbit matching
    orbit = 0
    for i, z in enumerate(zeros):
        if z.orbit >= 0:
            continue
        z.orbit = orbit
        u = B.T @ z.point
        imgs = np.array([M @ u for M in entry.weyl.action_on_fixed])
        for w in zeros[i + 1:]:
            if w.orbit < 0 and np.min(np.linalg.norm(imgs - B.T @ w.point, axis=1)) <= options.orbit_tol:
                w.orbit = orbit
        orbit += 1
    return zeros, notes


def stratum_degree(zeros, entry: OrbitTypeEntry, chart: ComponentChart):
    """Per-component degree = signed zero count / |WH|; returns (degrees, raw sums)."""
    raw = {a: 0 for a in range(chart.n_quot)}
    for z in zeros:
        raw[z.component] = raw.get(z.component, 0) + z.sign
    w = entry.weyl.order
    out = {}
    for a, s in raw.items():
        q, r = divmod(s, w)
        if r:
            raise DivisibilityViolation(
                f"stratum {entry.id} component {a}: signed count {s} not divisible by |WH| = {w}"
            )
        out[a] = q
    return out, raw


def equivariant_degree(f: EquivariantLocalMap, omega, options: Options = DEFAULT) -> DegreeResult:
    """Assemble the degree vector over every orbit type of the domain.

    ``omega`` is an InvariantDomain (stratified here) or a ready Stratification.
    """
    strat = omega if isinstance(omega, Stratification) else stratify(omega, options=options)
    warnings = []
    if not strat.hypothesis.holds:
        warnings.append(HYPOTHESIS_WARNING)
    entries = {}
    strata = {}
    for entry in strat.table:
        chart = strat.chart(entry.id)
        for w in chart.warnings:
            warnings.append(f"stratum {entry.id}: {w}")
        zeros, notes = find_stratum_zeros(f, entry, chart, strat.omega, strat.table, options)
        degs, raw = stratum_degree(zeros, entry, chart)
        strata[entry.id] = StratumResult(entry.id, zeros, raw, degs, notes)
        warnings.extend(f"stratum {entry.id}: {n}" for n in notes)
        for a, v in degs.items():
            entries[(entry.id, a)] = v
    return DegreeResult(DegreeVector(entries), strata, strat.hypothesis, list(dict.fromkeys(warnings)))


def degree_of_linear(A, eta: float = DEFAULT.eta_reg) -> int:
    """Local index of the linear map A at its unique zero: sgn det A."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return 1
    det = float(np.linalg.det(A))
    if abs(det) < eta:
        raise Singular(f"|det A| = {abs(det):.3g} is below the regularity floor")
    return 1 if det > 0 else -1
