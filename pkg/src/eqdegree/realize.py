"""Standard atoms: equivariant maps with a single regular zero orbit.

An atom centred at x0 (isotropy exactly H) with linear part L is

    f(y) = g L (g^-1 y - x0)        for y in g B(x0, r),

where g ranges over representatives of G/H. L must commute with H; the
default L acts as A on V^H (identity or a reflection of the first basis
vector) and as the identity on the orthogonal complement.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from . import exact as ex
from . import kernels
from .degree import DegreeVector, Zero
from .domain import InvariantDomain, Stratification, _is_signed_permutation
from .errors import NoRoom, NoValidRadius, Overlap, ValidationError
from .group import FiniteGroup, OrbitTypeEntry, Subgroup, isotropy_group, left_coset_reps
from .maps import BallOrbitRegion, EquivariantLocalMap, StraightLineOtopy
from .options import DEFAULT, Options

_RADIUS_GRID = 2**24
_CENTER_DENOM = 2**16


@dataclass(frozen=True, eq=False)
class StandardAtom:
    center: np.ndarray
    orbit_type: int
    H: Subgroup
    sign: int
    radius: float
    linear: np.ndarray
    center_exact: Optional[tuple] = None
    radius_exact: Optional[Fraction] = None
    linear_exact: Optional[tuple] = None

    @property
    def exact(self) -> bool:
        return self.center_exact is not None and self.radius_exact is not None and self.linear_exact is not None

    def to_dict(self) -> dict:
        fmt = (lambda v: str(v)) if self.exact else (lambda v: repr(float(v)))
        center = self.center_exact if self.exact else self.center
        linear = self.linear_exact if self.exact else self.linear
        return {
            "center": [fmt(v) for v in center],
            "H": self.orbit_type,
            "sign": self.sign,
            "radius": fmt(self.radius_exact if self.exact else self.radius),
            "linear": [[fmt(v) for v in row] for row in linear],
        }


class AtomPiece:
    kind = "atom"

    def __init__(self, group: FiniteGroup, atom: StandardAtom):
        self.group = group
        self.atom = atom
        reps = left_coset_reps(group, group.whole(), atom.H)
        self.reps = reps
        L = atom.linear
        self.mats = np.array([group.mats[g] @ L @ group.mats[g].T for g in reps])
        centers = np.array([group.mats[g] @ atom.center for g in reps])
        cex = None
        if atom.exact and group.is_exact:
            cex = [ex.matvec(group.exact[g], atom.center_exact) for g in reps]
            self.mats_exact = [
                ex.matmul(ex.matmul(group.exact[g], atom.linear_exact), ex.transpose(group.exact[g]))
                for g in reps
            ]
        self.region = BallOrbitRegion(group, centers, atom.radius, cex, atom.radius_exact if cex else None)

    @property
    def is_exact(self) -> bool:
        return self.region.exact

    def evaluate(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        j, _ = self.region.nearest(X)
        Z = X - self.region.centers[j]
        return np.einsum("pij,pj->pi", self.mats[j], Z)

    def jacobian(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        j, _ = self.region.nearest(X)
        return self.mats[j].copy()

    def evaluate_exact(self, x):
        x = tuple(Fraction(v) for v in x)
        r2 = self.region.radius_exact**2
        for c, M in zip(self.region.centers_exact, self.mats_exact):
            z = [a - b for a, b in zip(x, c)]
            if ex.dot(z, z) < r2:
                return ex.matvec(M, z)
        raise ValidationError(f"point {x} is outside the atom support")

    def seeds(self):
        return self.region.centers


def atom_map(group: FiniteGroup, atoms) -> EquivariantLocalMap:
    return EquivariantLocalMap(group, tuple(AtomPiece(group, a) for a in atoms), "atoms")


def atoms_of(f: EquivariantLocalMap) -> list:
    return [p.atom for p in f.pieces if isinstance(p, AtomPiece)]


def default_linear(entry: OrbitTypeEntry, sign: int, n: int):
    """(float L, exact L or None): identity, or reflection of the first V^H axis."""
    if entry.dim == 0:
        if sign != 1:
            raise NoRoom("a 0-dimensional stratum only carries index +1")
        return np.eye(n), ex.identity(n)
    if sign == 1:
        return np.eye(n), ex.identity(n)
    b = entry.basis.matrix[:, 0]
    L = np.eye(n) - 2 * np.outer(b, b)
    Lx = None
    if entry.basis.rational is not None:
        u = entry.basis.rational[0]
        s = ex.dot(u, u)
        Lx = tuple(
            tuple(Fraction(int(i == j)) - 2 * u[i] * u[j] / s for j in range(n)) for i in range(n)
        )
    return L, Lx


# --- placement ----------------------------------------------------------------------

def _clearances(strat: Stratification, entry: OrbitTypeEntry, X, existing):
    """Room around each candidate center: walls, orbit separation, domain, atoms."""
    G = strat.group
    X = np.atleast_2d(X)
    parts = [strat.omega.boundary_distance(X)]
    walls = strat.table.walls(entry)
    if walls:
        projs = np.array([L.basis.projector() for L in walls])
        parts.append(kernels.subspace_distances(X, projs).min(axis=1))
    others = np.array([g for g in range(G.order) if g not in entry.H], dtype=np.int64)
    if others.size:
        parts.append(kernels.orbit_defects(X, G.mats[others]).min(axis=1) / 2)
    for region in existing:
        parts.append(region.distance_to(X))
    return np.min(np.vstack(parts), axis=0)


def _snap_center(entry: OrbitTypeEntry, x, exact_ok: bool):
    """Rational point of V^H near x (exact coordinates on the rational basis)."""
    rat = entry.basis.rational
    if not exact_ok or rat is None:
        return x, None
    coeffs = []
    for u in rat:
        uf = np.array([float(v) for v in u])
        c = float(uf @ x) / float(uf @ uf)
        coeffs.append(Fraction(c).limit_denominator(_CENTER_DENOM))
    n = len(x)
    xe = tuple(sum((c * u[i] for c, u in zip(coeffs, rat)), Fraction(0)) for i in range(n))
    return np.array([float(v) for v in xe]), xe


def standard_atom(strat: Stratification, entry_id: int, alpha: int, sign: int,
                  existing=(), share: int = 1, options: Options = DEFAULT) -> StandardAtom:
    """Place one atom of index ``sign`` in component ``alpha`` of stratum ``entry_id``.

    The center is the chart cell of alpha with the most clearance; the radius
    is clearance / (2 * share), leaving room for ``share - 1`` further atoms.
    """
    if sign not in (1, -1):
        raise ValidationError("atom sign must be +1 or -1")
    G = strat.group
    entry = strat.table.entry(entry_id)
    chart = strat.chart(entry_id)
    n = G.dim
    if entry.dim == 0:
        if any(r.distance_to(np.zeros(n))[0] <= 0 for r in existing):
            raise NoRoom("the origin already carries an atom")
        x0 = np.zeros(n)
        c = float(strat.omega.boundary_distance(x0)[0])
        candidates = [(x0, c)]
    else:
        cells = chart.cells_of(alpha)
        if cells.size == 0:
            raise NoRoom(f"component {alpha} of stratum {entry_id} has no cells")
        X = chart.ambient(cells)
        c = _clearances(strat, entry, X, existing)
        order = np.lexsort((np.arange(c.size), -c))
        candidates = [(X[k], c[k]) for k in order[:8]]
    L, Lx = default_linear(entry, sign, n)
    exact_ok = G.is_exact and Lx is not None
    for x, _ in candidates:
        x0, xe = _snap_center(entry, x, exact_ok)
        room = float(_clearances(strat, entry, x0, existing)[0]) if entry.dim else float(c)
        r = room / (2 * share)
        if r < options.r_min:
            continue
        iso = isotropy_group(G, xe if xe is not None else x0)
        if iso != entry.H:
            continue
        if xe is not None:
            re = Fraction(int(r * _RADIUS_GRID), _RADIUS_GRID)
            return StandardAtom(x0, entry_id, entry.H, sign, float(re), L, xe, re, Lx)
        return StandardAtom(x0, entry_id, entry.H, sign, r, L)
    raise NoRoom(
        f"component {alpha} of stratum {entry_id} cannot host another atom with radius >= {options.r_min:g}"
    )


def realize(target, strat: Stratification, avoid=(), options: Options = DEFAULT):
    """A disjoint union of standard atoms whose degree vector is ``target``.

    Returns (map, atoms). ``avoid`` lists regions (with ``distance_to``) the
    atoms must stay clear of.
    """
    entries = target.support() if isinstance(target, DegreeVector) else {k: v for k, v in target.items() if v}
    valid = set(strat.keys())
    for key in entries:
        if tuple(key) not in valid:
            raise ValidationError(f"key {tuple(key)} is not a (orbit type, component) pair of this domain")
    G = strat.group
    atoms = []
    regions = list(avoid)
    order = sorted(entries.items(), key=lambda kv: (-abs(kv[1]), kv[0]))
    for (h, a), m in order:
        s = 1 if m > 0 else -1
        for i in range(abs(m)):
            atom = standard_atom(strat, h, a, s, regions, share=abs(m) - i, options=options)
            atoms.append(atom)
            regions.append(AtomPiece(G, atom).region)
    return atom_map(G, atoms), atoms


# --- disjoint unions ------------------------------------------------------------------

def _box_pair_overlap(A: InvariantDomain, p: int, B: InvariantDomain, q: int) -> bool:
    """Do the open parallelotopes g_p box_p and g_q box_q intersect?"""
    n = A.dim
    Mp, Mq = A.inv_mats[p], B.inv_mats[q]
    if _is_signed_permutation(Mp) and _is_signed_permutation(Mq):
        # both are axis-aligned boxes in ambient coordinates
        def ambient(M, lo, hi):
            a, b = M.T @ lo, M.T @ hi
            return np.minimum(a, b), np.maximum(a, b)

        lp, hp = ambient(Mp, A.lo[p], A.hi[p])
        lq, hq = ambient(Mq, B.lo[q], B.hi[q])
        return bool(np.all(np.maximum(lp, lq) < np.minimum(hp, hq) - 1e-12))
    # maximize s with lo + s <= M x <= hi - s for both boxes
    rows, rhs = [], []
    for M, lo, hi in ((Mp, A.lo[p], A.hi[p]), (Mq, B.lo[q], B.hi[q])):
        for i in range(n):
            rows.append(np.append(M[i], 1.0))
            rhs.append(hi[i])
            rows.append(np.append(-M[i], 1.0))
            rhs.append(-lo[i])
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=[(None, None)] * n + [(None, 1e6)])
    return bool(res.status == 0 and -res.fun > 1e-12)


def regions_overlap(r1, r2) -> bool:
    b1, b2 = isinstance(r1, BallOrbitRegion), isinstance(r2, BallOrbitRegion)
    if b1 and b2:
        D = np.linalg.norm(r1.centers[:, None, :] - r2.centers[None, :, :], axis=2)
        return bool(D.min() < r1.radius + r2.radius)
    if b1 or b2:
        ball, other = (r1, r2) if b1 else (r2, r1)
        return bool(np.any(other.distance_to(ball.centers) < ball.radius))
    lo1, hi1 = r1.bounding_box()
    lo2, hi2 = r2.bounding_box()
    if np.any(np.maximum(lo1, lo2) >= np.minimum(hi1, hi2)):
        return False
    return any(
        _box_pair_overlap(r1, p, r2, q) for p in range(len(r1.pairs)) for q in range(len(r2.pairs))
    )


def disjoint_union(f: EquivariantLocalMap, g: EquivariantLocalMap) -> EquivariantLocalMap:
    if f.group is not g.group:
        raise ValidationError("maps act by different groups")
    for p in f.pieces:
        for q in g.pieces:
            if regions_overlap(p.region, q.region):
                raise Overlap("domains of the two maps intersect")
    return EquivariantLocalMap(f.group, f.pieces + g.pieces, "union")


def load_atoms(group: FiniteGroup, table, data) -> list:
    """Rebuild atoms from their serialized form (list of dicts or JSON text)."""
    if isinstance(data, str):
        data = json.loads(data)
    atoms = []
    for d in data:
        center = [ex.to_fraction(v) for v in d["center"]]
        radius = ex.to_fraction(d["radius"])
        linear = tuple(tuple(ex.to_fraction(v) for v in row) for row in d["linear"])
        cf = np.array([float(v) for v in center])
        Lf = np.array([[float(v) for v in row] for row in linear])
        if len(center) != group.dim or Lf.shape != (group.dim, group.dim):
            raise ValidationError("atom data does not match the group dimension")
        H = isotropy_group(group, tuple(center) if group.is_exact else cf)
        entry = table.find(H) if table is not None else None
        if table is not None and (entry is None or entry.H != H):
            raise ValidationError(f"atom center {cf.tolist()} is not on a charted orbit-type representative")
        for h in H:
            if np.abs(group.mats[h] @ Lf - Lf @ group.mats[h]).max() > 1e-9:
                raise ValidationError("atom linear part does not commute with the isotropy group")
        hid = entry.id if entry is not None else int(d.get("H", -1))
        sign = int(d["sign"])
        exact_ok = group.is_exact
        atoms.append(
            StandardAtom(
                cf, hid, H, sign, float(radius), Lf,
                tuple(center) if exact_ok else None, radius if exact_ok else None,
                linear if exact_ok else None,
            )
        )
    return atoms


def dump_atoms(atoms) -> str:
    return json.dumps([a.to_dict() for a in atoms])


# --- linearization --------------------------------------------------------------------

def _shell_grid(dim: int, R: float, count: int = 256):
    """Points of the shell R/2 <= |z| <= R around the origin."""
    rng = np.random.default_rng(12345)
    if dim == 1:
        radii = np.linspace(R / 2, 0.999 * R, count // 2)
        return np.concatenate([radii, -radii])[:, None]
    dirs = rng.normal(size=(count, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    out = [dirs * s for s in np.linspace(R / 2, 0.999 * R, 5)]
    return np.vstack(out)


def linearize(f: EquivariantLocalMap, zero: Zero, strat: Stratification,
              options: Options = DEFAULT):
    """Replace f near a regular zero orbit by its linearization.

    Returns (atom, otopy) with the straight-line otopy from f to the atom on
    the atom's support; the radius is halved until no slice vanishes on the
    shell R/2 <= |z - x0| <= R for any t.
    """
    G = f.group
    entry = strat.table.entry(zero.orbit_type)
    x0 = np.asarray(zero.point, dtype=float)
    L = f.jacobian(x0)[0]
    det = np.linalg.det(entry.basis.matrix.T @ L @ entry.basis.matrix) if entry.dim else 1.0
    sign = 1 if det > 0 else -1
    owner = int(f.piece_index(x0)[0])
    region = f.pieces[owner].region
    R = float(_clearances(strat, entry, x0, [])[0])
    R = min(R, float(region.boundary_distance(x0)[0])) * 0.9
    while R >= options.r_min:
        atom = StandardAtom(x0, entry.id, entry.H, sign, R, L)
        g = atom_map(G, [atom])
        Z = x0 + _shell_grid(G.dim, R)
        F0 = f.evaluate(Z)
        F1 = g.evaluate(Z)
        # |h_t| >= |F1| - (1 - t)|F0 - F1| > 0 for every t when the remainder
        # stays below half the linear part; the factor 1/2 covers the gaps
        gap = np.linalg.norm(F0 - F1, axis=1)
        lin = np.linalg.norm(F1, axis=1)
        if np.all(lin >= options.eta_loc) and np.all(gap <= 0.5 * lin):
            return atom, StraightLineOtopy(f, g, region=g.pieces[0].region)
        R /= 2
    raise NoValidRadius(f"no admissible linearization radius above {options.r_min:g} at {x0.tolist()}")
