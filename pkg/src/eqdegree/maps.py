"""Equivariant local maps, their validation, restriction to fixed subspaces,
and otopies between them.

A map is a tuple of *pieces* with pairwise disjoint domains. Each piece knows
its region (an InvariantDomain or a BallOrbitRegion) and can evaluate itself
and its Jacobian in batch; the empty tuple is the empty map.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import exact as ex
from .domain import InvariantDomain
from .errors import NotInvariantSubspace, OutsideDomain, ValidationError
from .expression import MapExpression
from .group import FiniteGroup, SubspaceBasis
from .options import DEFAULT, Options


def _rational(x) -> bool:
    return isinstance(x, (tuple, list)) and all(isinstance(v, (Fraction, int)) for v in x)


class BallOrbitRegion:
    """Union of open balls of a common radius around the points of one orbit."""

    def __init__(self, group: FiniteGroup, centers, radius, centers_exact=None, radius_exact=None):
        self.group = group
        self.centers = np.atleast_2d(np.asarray(centers, dtype=float))
        self.radius = float(radius)
        self.centers_exact = centers_exact
        self.radius_exact = radius_exact
        self._shell_cache = {}

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    @property
    def exact(self) -> bool:
        return self.centers_exact is not None and self.radius_exact is not None

    def nearest(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        D = np.linalg.norm(X[:, None, :] - self.centers[None, :, :], axis=2)
        j = np.argmin(D, axis=1)
        return j, D[np.arange(X.shape[0]), j]

    def contains_batch(self, X) -> np.ndarray:
        _, d = self.nearest(X)
        return d < self.radius

    def contains(self, x) -> bool:
        if self.exact and _rational(x):
            r2 = self.radius_exact**2
            for c in self.centers_exact:
                dv = [a - b for a, b in zip(x, c)]
                if ex.dot(dv, dv) < r2:
                    return True
            return False
        return bool(self.contains_batch(x)[0])

    def boundary_distance(self, X) -> np.ndarray:
        _, d = self.nearest(X)
        return np.maximum(self.radius - d, 0.0)

    def distance_to(self, X) -> np.ndarray:
        _, d = self.nearest(X)
        return np.maximum(d - self.radius, 0.0)

    def shell_samples(self, margin, oversample: int = 8):
        m = min(float(margin), self.radius / 2)
        key = (m, oversample)
        if key in self._shell_cache:
            return self._shell_cache[key]
        step = m / oversample
        r = self.radius
        ax = np.arange(-r, r + step / 2, step)
        mesh = np.meshgrid(*([ax] * self.dim), indexing="ij")
        offs = np.stack([g.ravel() for g in mesh], axis=1)
        norm = np.linalg.norm(offs, axis=1)
        offs = offs[(norm >= r - m) & (norm < r)]
        pts = (self.centers[:, None, :] + offs[None, :, :]).reshape(-1, self.dim)
        out = (pts, step)
        self._shell_cache[key] = out
        return out

    def sample(self, rng, count: int, exact: bool = False):
        out = []
        n = self.dim
        for _ in range(count):
            j = int(rng.integers(self.centers.shape[0]))
            if exact and self.exact:
                r = self.radius_exact
                while True:
                    off = [r * Fraction(int(rng.integers(-1023, 1024)), 1024) for _ in range(n)]
                    if ex.dot(off, off) < r * r:
                        break
                out.append(tuple(c + o for c, o in zip(self.centers_exact[j], off)))
            else:
                while True:
                    off = rng.uniform(-1, 1, size=n)
                    if np.linalg.norm(off) < 0.99:
                        break
                out.append(self.centers[j] + self.radius * off)
        return out


class PolyPiece:
    kind = "poly"

    def __init__(self, region: InvariantDomain, expr: MapExpression):
        if expr.has_t:
            raise ValidationError("map expressions may not depend on t")
        if expr.n != region.dim:
            raise ValidationError(f"expression has {expr.n} variables, domain has dimension {region.dim}")
        self.region = region
        self.expr = expr

    @property
    def is_exact(self) -> bool:
        return self.expr.is_exact and self.region.exact

    def evaluate(self, X):
        return self.expr.evaluate(X)

    def jacobian(self, X):
        return self.expr.jacobian(X)

    def evaluate_exact(self, x):
        return self.expr.evaluate_exact(x)

    def seeds(self):
        return np.zeros((0, self.region.dim))


class BlendPiece:
    """(1 - t) * first + t * second on a fixed region where both are defined."""

    kind = "blend"

    def __init__(self, region, first: "EquivariantLocalMap", second: "EquivariantLocalMap", t):
        self.region = region
        self.first = first
        self.second = second
        self.t = t

    @property
    def is_exact(self) -> bool:
        return isinstance(self.t, (Fraction, int)) and self.first.is_exact and self.second.is_exact

    def evaluate(self, X):
        t = float(self.t)
        return (1 - t) * self.first.evaluate(X) + t * self.second.evaluate(X)

    def jacobian(self, X):
        t = float(self.t)
        return (1 - t) * self.first.jacobian(X) + t * self.second.jacobian(X)

    def evaluate_exact(self, x):
        a = self.first.evaluate_exact(x)
        b = self.second.evaluate_exact(x)
        t = Fraction(self.t)
        return tuple((1 - t) * u + t * v for u, v in zip(a, b))

    def seeds(self):
        return np.vstack([self.second.seeds(), self.first.seeds()])


@dataclass(frozen=True, eq=False)
class EquivariantLocalMap:
    group: FiniteGroup
    pieces: tuple = ()
    label: str = ""

    @classmethod
    def empty(cls, group: FiniteGroup) -> "EquivariantLocalMap":
        return cls(group, (), "empty")

    @classmethod
    def from_expressions(cls, group: FiniteGroup, domain: InvariantDomain, texts, label="") -> "EquivariantLocalMap":
        expr = MapExpression.parse(texts, group.dim)
        return cls(group, (PolyPiece(domain, expr),), label)

    @property
    def dim(self) -> int:
        return self.group.dim

    @property
    def is_empty(self) -> bool:
        return not self.pieces

    @property
    def is_exact(self) -> bool:
        return self.group.is_exact and all(p.is_exact for p in self.pieces)

    def piece_index(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        idx = np.full(X.shape[0], -1, dtype=np.int64)
        for k, p in enumerate(self.pieces):
            free = idx < 0
            if not free.any():
                break
            hit = np.zeros_like(free)
            hit[free] = p.region.contains_batch(X[free])
            idx[hit] = k
        return idx

    def contains_batch(self, X) -> np.ndarray:
        return self.piece_index(X) >= 0

    def contains(self, x) -> bool:
        if _rational(x):
            return any(p.region.contains(x) for p in self.pieces)
        return bool(self.contains_batch(x)[0])

    def _dispatch(self, X, method):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        idx = self.piece_index(X)
        if np.any(idx < 0):
            bad = X[np.argmax(idx < 0)]
            raise OutsideDomain(f"point {bad.tolist()} is outside the map's domain")
        out = None
        for k, p in enumerate(self.pieces):
            sel = idx == k
            if not sel.any():
                continue
            vals = getattr(p, method)(X[sel])
            if out is None:
                out = np.zeros((X.shape[0],) + vals.shape[1:])
            out[sel] = vals
        return out

    def evaluate(self, X) -> np.ndarray:
        """f at each row of X (a single point returns a 1-row array)."""
        return self._dispatch(X, "evaluate")

    def jacobian(self, X) -> np.ndarray:
        return self._dispatch(X, "jacobian")

    def evaluate_exact(self, x):
        for p in self.pieces:
            if p.region.contains(x):
                return p.evaluate_exact(x)
        raise OutsideDomain(f"point {x} is outside the map's domain")

    def seeds(self) -> np.ndarray:
        parts = [p.seeds() for p in self.pieces]
        return np.vstack(parts) if parts else np.zeros((0, self.dim))

    def describe(self) -> str:
        if self.is_empty:
            return "empty map"
        kinds = {}
        for p in self.pieces:
            kinds[p.kind] = kinds.get(p.kind, 0) + 1
        return ", ".join(f"{v} {k} piece{'s' if v > 1 else ''}" for k, v in sorted(kinds.items()))


# --- validation ------------------------------------------------------------------

@dataclass
class EquivarianceReport:
    passed: bool
    max_defect: float
    exact: bool
    samples: int
    failures: list = field(default_factory=list)


def check_equivariance(f: EquivariantLocalMap, samples: int = 64, seed: int = 0,
                       tol: float = DEFAULT.tol_equiv) -> EquivarianceReport:
    """max ||f(g x) - g f(x)|| over random domain points and all generators.

    Exact maps (rational data throughout) must show a zero defect; float maps
    pass when the defect is at most tol * max(1, |f(x)|).
    """
    G = f.group
    rng = np.random.default_rng(seed)
    use_exact = f.is_exact
    worst = 0.0
    failures = []
    count = 0
    if f.is_empty:
        return EquivarianceReport(True, 0.0, use_exact, 0)
    per = max(1, samples // len(f.pieces))
    for piece in f.pieces:
        pts = piece.region.sample(rng, per, exact=use_exact)
        for x in pts:
            count += 1
            if use_exact:
                fx = piece.evaluate_exact(x)
                for g in G.generators:
                    gx = ex.matvec(G.exact[g], x)
                    lhs = f.evaluate_exact(gx)
                    rhs = ex.matvec(G.exact[g], fx)
                    diff = [a - b for a, b in zip(lhs, rhs)]
                    defect = float(ex.dot(diff, diff)) ** 0.5
                    worst = max(worst, defect)
                    if any(v != 0 for v in diff):
                        failures.append((tuple(float(v) for v in x), g, defect))
            else:
                x = np.asarray(x, dtype=float)
                fx = f.evaluate(x)[0]
                for g in G.generators:
                    gx = G.mats[g] @ x
                    if not f.contains_batch(gx)[0]:
                        failures.append((tuple(x), g, float("inf")))
                        continue
                    defect = float(np.linalg.norm(f.evaluate(gx)[0] - G.mats[g] @ fx))
                    worst = max(worst, defect)
                    if defect > tol * max(1.0, float(np.linalg.norm(fx))):
                        failures.append((tuple(x), g, defect))
    return EquivarianceReport(not failures, worst, use_exact, count, failures[:10])


@dataclass
class LocalityReport:
    passed: bool
    min_norm: float
    samples: int
    offending: list = field(default_factory=list)


def check_locality(f: EquivariantLocalMap, margin=None, eta: float = DEFAULT.eta_loc) -> LocalityReport:
    """Grid scan of the margin shell of every piece's region.

    A shell sample is offending when |f| < eta or when |f| does not exceed
    |Df| times the sampling half-diagonal, i.e. a zero may sit between samples.
    This is a semi-decision: passing certifies nothing between samples beyond
    the linear model.
    """
    if f.is_empty:
        return LocalityReport(True, float("inf"), 0)
    worst = float("inf")
    offending = []
    total = 0
    for piece in f.pieces:
        m = margin if margin is not None else _default_margin(piece.region)
        pts, step = piece.region.shell_samples(m)
        if pts.shape[0] == 0:
            continue
        total += pts.shape[0]
        F = piece.evaluate(pts)
        J = piece.jacobian(pts)
        norms = np.linalg.norm(F, axis=1)
        jn = np.linalg.norm(J, ord=2, axis=(1, 2))
        h = step * np.sqrt(f.dim) / 2
        bad = (norms < eta) | (norms <= jn * h)
        worst = min(worst, float(norms.min()))
        for k in np.nonzero(bad)[0][:10]:
            offending.append((tuple(pts[k].tolist()), float(norms[k])))
    return LocalityReport(not offending, worst, total, offending)


def _default_margin(region):
    if isinstance(region, InvariantDomain):
        return float(region.default_margin())
    return region.radius / 4


@dataclass(eq=False)
class RestrictedMap:
    """u -> B^T f(B u) on the coordinates of a fixed subspace."""

    f: EquivariantLocalMap
    basis: SubspaceBasis
    expressions: tuple = ()

    @property
    def dim(self) -> int:
        return self.basis.dim

    def evaluate(self, U) -> np.ndarray:
        B = self.basis.matrix
        U = np.atleast_2d(np.asarray(U, dtype=float))
        return self.f.evaluate(U @ B.T) @ B

    def jacobian(self, U) -> np.ndarray:
        B = self.basis.matrix
        U = np.atleast_2d(np.asarray(U, dtype=float))
        return np.einsum("ia,pij,jb->pab", B, self.f.jacobian(U @ B.T), B)

    def __call__(self, u):
        return self.evaluate(u)[0]


def restrict(f: EquivariantLocalMap, basis: SubspaceBasis, samples: int = 32, seed: int = 0,
             tol: float = DEFAULT.tol_equiv) -> RestrictedMap:
    """Restrict f to a fixed subspace, verifying that f maps it into itself.

    Polynomial pieces are restricted symbolically (exactly when the basis is
    rational-orthonormal); the normal component must vanish identically.
    Other pieces are checked at sampled points of the subspace.
    """
    unit = basis.unit_rational()
    B = basis.matrix
    n, d = B.shape
    exprs = []
    for piece in f.pieces:
        if isinstance(piece, PolyPiece):
            if unit is not None:
                M = [[unit[j][i] for j in range(d)] for i in range(n)]
                normal = [[Fraction(int(i == j)) - sum((unit[k][i] * unit[k][j] for k in range(d)), Fraction(0))
                           for j in range(n)] for i in range(n)]
                tangent = [list(u) for u in unit]
            else:
                M = B.tolist()
                normal = (np.eye(n) - B @ B.T).tolist()
                tangent = B.T.tolist()
            if d == 0:
                exprs.append(MapExpression((), 0))
                continue
            res = piece.expr.linear_substitute(M, tangent)
            off = piece.expr.linear_substitute(M, normal)
            scale = max([1.0] + [abs(float(c)) for p in res.polys for c in p.values()])
            leak = max([0.0] + [abs(float(c)) for p in off.polys for c in p.values()])
            exact_data = unit is not None and piece.expr.is_exact
            if (exact_data and leak != 0) or leak > tol * scale:
                raise NotInvariantSubspace(
                    f"map leaves the fixed subspace (normal coefficient {leak:g})"
                )
            exprs.append(res)
        else:
            rng = np.random.default_rng(seed)
            pts = [np.asarray(p, dtype=float) for p in piece.region.sample(rng, samples)]
            pts = [B @ (B.T @ p) for p in pts]
            pts = [p for p in pts if piece.region.contains_batch(p)[0]]
            if pts:
                F = piece.evaluate(np.array(pts))
                leak = np.abs(F - F @ B @ B.T).max()
                if leak > tol * max(1.0, float(np.abs(F).max())):
                    raise NotInvariantSubspace(f"map leaves the fixed subspace (normal part {leak:g})")
    return RestrictedMap(f, basis, tuple(exprs))


# --- otopies ---------------------------------------------------------------------

class Otopy:
    """A family of equivariant local maps h_t, t in [0, 1]."""

    group: FiniteGroup

    def slice(self, t) -> EquivariantLocalMap:
        raise NotImplementedError

    def reversed(self) -> "Otopy":
        return ReversedOtopy(self)

    @property
    def start(self) -> EquivariantLocalMap:
        return self.slice(Fraction(0))

    @property
    def end(self) -> EquivariantLocalMap:
        return self.slice(Fraction(1))


class ExpressionOtopy(Otopy):
    """Polynomial in (x, t) on I x domain."""

    def __init__(self, group: FiniteGroup, domain: InvariantDomain, expr: MapExpression, label=""):
        self.group = group
        self.domain = domain
        self.expr = expr
        self.label = label

    def slice(self, t) -> EquivariantLocalMap:
        t = Fraction(t).limit_denominator(10**9) if not isinstance(t, Fraction) else t
        return EquivariantLocalMap(self.group, (PolyPiece(self.domain, self.expr.substitute_t(t)),), self.label)


class StraightLineOtopy(Otopy):
    """h_t = (1 - t) first + t second on the first map's regions (or ``region``)."""

    def __init__(self, first: EquivariantLocalMap, second: EquivariantLocalMap, region=None):
        if first.group is not second.group:
            raise ValidationError("otopy endpoints act by different groups")
        self.group = first.group
        self.first = first
        self.second = second
        self.region = region

    def _symbolic(self):
        a, b = self.first.pieces, self.second.pieces
        return (
            self.region is None
            and len(a) == 1 and len(b) == 1
            and isinstance(a[0], PolyPiece) and isinstance(b[0], PolyPiece)
            and a[0].region is b[0].region
        )

    def slice(self, t) -> EquivariantLocalMap:
        if not isinstance(t, (Fraction, int)):
            t = Fraction(float(t)).limit_denominator(10**9)
        if self._symbolic():
            a, b = self.first.pieces[0], self.second.pieces[0]
            expr = a.expr.scaled_sum(b.expr, 1 - t, t)
            return EquivariantLocalMap(self.group, (PolyPiece(a.region, expr),))
        if self.region is not None:
            regions = [self.region]
        else:
            regions = [p.region for p in self.first.pieces]
        return EquivariantLocalMap(
            self.group, tuple(BlendPiece(r, self.first, self.second, t) for r in regions)
        )


class ReversedOtopy(Otopy):
    def __init__(self, inner: Otopy):
        self.inner = inner
        self.group = inner.group

    def slice(self, t) -> EquivariantLocalMap:
        if not isinstance(t, (Fraction, int)):
            t = Fraction(float(t)).limit_denominator(10**9)
        return self.inner.slice(1 - t)

    def reversed(self) -> Otopy:
        return self.inner


class ScalingOtopy(Otopy):
    """h_t = (1 + t) f; zeros never move."""

    def __init__(self, f: EquivariantLocalMap):
        self.f = f
        self.group = f.group

    def slice(self, t) -> EquivariantLocalMap:
        if all(isinstance(p, PolyPiece) for p in self.f.pieces):
            t = Fraction(t) if isinstance(t, (Fraction, int)) else Fraction(float(t)).limit_denominator(10**9)
            return EquivariantLocalMap(
                self.group,
                tuple(PolyPiece(p.region, p.expr.scaled_sum(p.expr, 1 + t, 0)) for p in self.f.pieces),
            )
        regions = [p.region for p in self.f.pieces]
        # (1 + t) f written as a blend of f with 2 f
        doubled = _ScaledMap(self.f, 2)
        return EquivariantLocalMap(self.group, tuple(BlendPiece(r, self.f, doubled, t) for r in regions))


class _ScaledMap:
    def __init__(self, f, c):
        self.f = f
        self.c = c

    @property
    def is_exact(self):
        return self.f.is_exact

    def evaluate(self, X):
        return self.c * self.f.evaluate(X)

    def jacobian(self, X):
        return self.c * self.f.jacobian(X)

    def evaluate_exact(self, x):
        return tuple(self.c * v for v in self.f.evaluate_exact(x))

    def seeds(self):
        return self.f.seeds()
