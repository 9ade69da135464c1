"""Finite orthogonal matrix groups and their isotropy data.

Groups are stored twice: as a float array for vectorized work and, when every
generator is rational and exactly orthogonal, as exact ``Fraction`` matrices
so that group identities are decided without tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import exact as ex
from . import kernels
from .errors import AmbiguousIsotropy, CapExceeded, DimensionMismatch, EmptyDomain, NotOrthogonal
from .options import DEFAULT


@dataclass(frozen=True, order=True)
class Subgroup:
    members: tuple

    @classmethod
    def of(cls, indices):
        return cls(tuple(sorted(set(int(i) for i in indices))))

    @property
    def order(self) -> int:
        return len(self.members)

    def __contains__(self, g) -> bool:
        return int(g) in self._set

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    @property
    def _set(self):
        return frozenset(self.members)

    def issubset(self, other: "Subgroup") -> bool:
        return self._set <= other._set


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    mats: np.ndarray
    cayley: np.ndarray
    inverse: np.ndarray
    generators: tuple
    exact: Optional[tuple] = None
    tol: float = DEFAULT.tol_group

    @property
    def order(self) -> int:
        return self.mats.shape[0]

    @property
    def dim(self) -> int:
        return self.mats.shape[1]

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    def whole(self) -> Subgroup:
        return Subgroup(tuple(range(self.order)))

    def trivial(self) -> Subgroup:
        return Subgroup((0,))

    def conjugate(self, H: Subgroup, g: int) -> Subgroup:
        """g H g^-1"""
        gi = self.inverse[g]
        return Subgroup.of(self.cayley[self.cayley[g, h], gi] for h in H)

    def conjugates(self, H: Subgroup) -> list:
        return sorted({self.conjugate(H, g) for g in range(self.order)})

    def generated(self, indices) -> Subgroup:
        members = {0}
        frontier = [int(i) for i in indices]
        gens = list(frontier)
        while frontier:
            new = []
            for a in frontier:
                if a in members:
                    continue
                members.add(a)
                for g in gens:
                    new.append(int(self.cayley[a, g]))
            frontier = new
        # closure of a finite set under multiplication is a subgroup
        changed = True
        while changed:
            changed = False
            for a in list(members):
                for b in list(members):
                    c = int(self.cayley[a, b])
                    if c not in members:
                        members.add(c)
                        changed = True
        return Subgroup.of(members)

    def is_subgroup(self, indices) -> bool:
        s = set(int(i) for i in indices)
        if 0 not in s:
            return False
        return all(int(self.cayley[a, b]) in s for a in s for b in s) and all(
            int(self.inverse[a]) in s for a in s
        )

    def act(self, g: int, x):
        if self.is_exact and _is_rational_vector(x):
            return ex.matvec(self.exact[g], x)
        return self.mats[g] @ np.asarray(x, dtype=float)


def _is_rational_vector(x) -> bool:
    return isinstance(x, (tuple, list)) and all(isinstance(v, (Fraction, int)) for v in x)


def _parse_matrix(entries):
    rows = [list(r) for r in entries]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise DimensionMismatch(f"generator is not square: {entries!r}")
    return rows


def _exact_matrix(rows):
    try:
        M = tuple(tuple(ex.to_fraction(v) for v in r) for r in rows)
    except (ValueError, TypeError, ZeroDivisionError):
        return None
    if ex.matmul(ex.transpose(M), M) != ex.identity(len(M)):
        return None
    return M


def _key(M):
    return np.round(np.asarray(M) * 1e6).astype(np.int64).tobytes()


class _Index:
    """Lookup of float matrices by rounded key with a tolerant fallback scan."""

    def __init__(self, tol):
        self.tol = tol
        self.keys = {}
        self.mats = []

    def find(self, M):
        i = self.keys.get(_key(M))
        if i is not None and np.max(np.abs(self.mats[i] - M)) <= 1e-6:
            return i
        if self.mats:
            diffs = np.max(np.abs(np.asarray(self.mats) - M), axis=(1, 2))
            j = int(np.argmin(diffs))
            if diffs[j] <= 1e-6:
                return j
        return None

    def add(self, M):
        self.keys[_key(M)] = len(self.mats)
        self.mats.append(M)
        return len(self.mats) - 1


def close_generators(gens, cap: int = DEFAULT.max_group_order, tol: float = DEFAULT.tol_group) -> FiniteGroup:
    """Breadth-first closure of orthogonal generators.

    Element 0 is the identity; new elements are discovered as ``w * g`` for
    words ``w`` in BFS order and generators ``g`` in the given order.
    """
    if len(gens) == 0:
        raise ValueError("at least one generator is required (use the identity)")
    parsed = [_parse_matrix(g) for g in gens]
    n = len(parsed[0])
    if any(len(p) != n for p in parsed):
        raise DimensionMismatch("generators have different dimensions")

    exact_gens = [_exact_matrix(p) for p in parsed]
    use_exact = all(M is not None for M in exact_gens)
    float_gens = []
    for p in parsed:
        try:
            A = np.array([[float(ex.to_fraction(v)) for v in r] for r in p], dtype=float)
        except (ValueError, TypeError, ZeroDivisionError) as e:
            raise NotOrthogonal(f"unparseable generator entry: {e}") from e
        if np.max(np.abs(A.T @ A - np.eye(n))) > tol:
            raise NotOrthogonal(f"generator is not orthogonal within {tol}: {A.tolist()}")
        float_gens.append(A)

    index = _Index(tol)
    index.add(np.eye(n))
    exact_elems = [ex.identity(n)] if use_exact else None
    exact_lookup = {ex.identity(n): 0} if use_exact else None
    gen_idx = []
    queue = [0]
    head = 0
    while head < len(queue):
        a = queue[head]
        head += 1
        for k, G in enumerate(float_gens):
            if use_exact:
                P = ex.matmul(exact_elems[a], exact_gens[k])
                j = exact_lookup.get(P)
                if j is None:
                    j = index.add(ex.as_float(P))
                    exact_elems.append(P)
                    exact_lookup[P] = j
                    queue.append(j)
            else:
                P = index.mats[a] @ G
                j = index.find(P)
                if j is None:
                    j = index.add(P)
                    queue.append(j)
            if index.mats and len(index.mats) > cap:
                raise CapExceeded(f"group closure exceeded cap {cap}")
            if a == 0 and len(gen_idx) < len(float_gens):
                gen_idx.append(j)

    mats = np.array(index.mats)
    order = mats.shape[0]
    cayley = np.empty((order, order), dtype=np.int64)
    for a in range(order):
        prods = mats[a] @ mats
        for b in range(order):
            j = index.find(prods[b])
            if j is None:  # pragma: no cover - closure guarantees membership
                raise CapExceeded("product left the closed set; tolerance too tight")
            cayley[a, b] = j
    inverse = np.argmax(cayley == 0, axis=1).astype(np.int64)
    return FiniteGroup(
        mats=mats,
        cayley=cayley,
        inverse=inverse,
        generators=tuple(gen_idx),
        exact=tuple(exact_elems) if use_exact else None,
        tol=tol,
    )


def normalizer(G: FiniteGroup, H: Subgroup) -> Subgroup:
    return Subgroup.of(g for g in range(G.order) if G.conjugate(H, g) == H)


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal basis (columns of ``matrix``) of a linear subspace.

    ``rational`` holds an orthogonal rational basis whose i-th vector is a
    positive multiple of column i, when the subspace was computed exactly.
    """

    ambient_dim: int
    matrix: np.ndarray
    exact: bool = False
    rational: Optional[tuple] = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def vectors(self):
        return [self.matrix[:, i] for i in range(self.dim)]

    def projector(self) -> np.ndarray:
        return self.matrix @ self.matrix.T

    def projector_exact(self):
        if self.rational is None:
            return None
        return ex.projector_n(self.rational, self.ambient_dim)

    def unit_rational(self):
        """Exact orthonormal basis if every rational vector has a rational norm."""
        if self.rational is None:
            return None
        out = []
        for u in self.rational:
            s = ex.exact_sqrt(ex.dot(u, u))
            if s is None:
                return None
            out.append(tuple(v / s for v in u))
        return tuple(out)

    def contains(self, other: "SubspaceBasis", tol=1e-9) -> bool:
        if other.dim == 0:
            return True
        P = self.projector()
        return bool(np.max(np.abs(P @ other.matrix - other.matrix)) <= tol)


def fixed_subspace(G: FiniteGroup, H: Subgroup) -> SubspaceBasis:
    """Orthonormal basis of the subspace fixed pointwise by every h in H."""
    n = G.dim
    others = [h for h in H if h != 0]
    if G.is_exact:
        rows = []
        I = ex.identity(n)
        for h in others:
            M = G.exact[h]
            rows.extend(tuple(M[i][j] - I[i][j] for j in range(n)) for i in range(n))
        orth = ex.gram_schmidt(ex.nullspace(rows, n)) if rows else list(I)
        if not orth:
            return SubspaceBasis(n, np.zeros((n, 0)), True, ())
        cols = []
        for u in orth:
            v = np.array([float(a) for a in u])
            cols.append(v / np.linalg.norm(v))
        return SubspaceBasis(n, np.array(cols).T, True, tuple(orth))
    if not others:
        return SubspaceBasis(n, np.eye(n), False, None)
    A = np.vstack([G.mats[h] - np.eye(n) for h in others])
    _, s, vt = np.linalg.svd(A)
    s_full = np.zeros(n)
    s_full[: s.size] = s
    null = vt[s_full <= 10 * G.tol]
    return SubspaceBasis(n, null.T.copy(), False, None)


def fixer(G: FiniteGroup, W: SubspaceBasis) -> Subgroup:
    """Elements acting as the identity on W."""
    if W.dim == 0:
        return G.whole()
    if G.is_exact and W.rational is not None:
        return Subgroup.of(
            g for g in range(G.order) if all(ex.matvec(G.exact[g], u) == u for u in W.rational)
        )
    return Subgroup.of(
        g for g in range(G.order) if np.max(np.abs(G.mats[g] @ W.matrix - W.matrix)) <= 10 * G.tol
    )


@dataclass(frozen=True, eq=False)
class WeylData:
    H: Subgroup
    NH: Subgroup
    coset_reps: tuple
    action_on_fixed: tuple

    @property
    def order(self) -> int:
        return len(self.coset_reps)


def left_coset_reps(G: FiniteGroup, K: Subgroup, H: Subgroup) -> tuple:
    """Least-index representative of each left coset gH inside K."""
    seen = set()
    reps = []
    for g in K:
        coset = frozenset(int(G.cayley[g, h]) for h in H)
        if coset not in seen:
            seen.add(coset)
            reps.append(min(coset))
    return tuple(sorted(reps))


def weyl_group(G: FiniteGroup, H: Subgroup, basis: Optional[SubspaceBasis] = None) -> WeylData:
    """WH = NH/H with each coset representative's action in V^H coordinates."""
    NH = normalizer(G, H)
    reps = left_coset_reps(G, NH, H)
    B = (basis or fixed_subspace(G, H)).matrix
    actions = tuple(B.T @ G.mats[g] @ B for g in reps)
    return WeylData(H=H, NH=NH, coset_reps=reps, action_on_fixed=actions)


def isotropy_group(G: FiniteGroup, x, tol: float = DEFAULT.tol_group) -> Subgroup:
    """G_x, with a guard band (tol, 10 tol] that raises AmbiguousIsotropy."""
    if G.is_exact and _is_rational_vector(x):
        xs = tuple(Fraction(v) for v in x)
        return Subgroup.of(g for g in range(G.order) if ex.matvec(G.exact[g], xs) == xs)
    xv = np.asarray(x, dtype=float).reshape(1, -1)
    if xv.shape[1] != G.dim:
        raise DimensionMismatch(f"point of dimension {xv.shape[1]} for group of dimension {G.dim}")
    d = kernels.orbit_defects(xv, G.mats)[0]
    scale = max(1.0, float(np.linalg.norm(xv)))
    band = (d > tol * scale) & (d <= 10 * tol * scale)
    if band.any():
        raise AmbiguousIsotropy(
            f"point {xv[0].tolist()} is within {10 * tol:g} of a stratum wall"
        )
    members = np.nonzero(d <= tol * scale)[0]
    if not G.is_subgroup(members):
        raise AmbiguousIsotropy(f"tolerance set at {xv[0].tolist()} is not a subgroup")
    return Subgroup.of(members)


@dataclass(frozen=True, eq=False)
class LatticeSubspace:
    fixer: Subgroup
    basis: SubspaceBasis


def fixed_subspace_lattice(G: FiniteGroup) -> list:
    """All V^K for K generated by elements, closed under intersection.

    Each node is keyed by its pointwise fixer, so W = V^{fixer(W)}.
    """
    nodes = {}

    def add(K):
        W = fixed_subspace(G, K)
        F = fixer(G, W)
        if F not in nodes:
            nodes[F] = fixed_subspace(G, F)
            return F
        return None

    for g in range(G.order):
        add(G.generated([g]))
    frontier = list(nodes)
    while frontier:
        new = []
        current = list(nodes)
        for A in frontier:
            for B in current:
                F = add(G.generated(set(A.members) | set(B.members)))
                if F is not None:
                    new.append(F)
        frontier = new
    out = [LatticeSubspace(F, W) for F, W in nodes.items()]
    out.sort(key=lambda L: (-L.basis.dim, L.fixer.members))
    return out


@dataclass(frozen=True, eq=False)
class OrbitTypeEntry:
    id: int
    H: Subgroup
    basis: SubspaceBasis
    weyl: WeylData
    conjugates: tuple

    @property
    def dim(self) -> int:
        return self.basis.dim


@dataclass(frozen=True, eq=False)
class OrbitTypeTable:
    group: FiniteGroup
    entries: tuple
    order_relation: tuple
    lattice: tuple = field(default=())

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def entry(self, i) -> OrbitTypeEntry:
        return self.entries[i]

    def find(self, H: Subgroup) -> Optional[OrbitTypeEntry]:
        for e in self.entries:
            if H in e.conjugates:
                return e
        return None

    def smaller_subspaces(self, entry: OrbitTypeEntry) -> list:
        """Lattice subspaces strictly inside V^H (fixer strictly above H)."""
        return [
            L for L in self.lattice
            if entry.H.issubset(L.fixer) and L.fixer != entry.H
        ]

    def walls(self, entry: OrbitTypeEntry) -> list:
        """Lattice subspaces that do not contain V^H."""
        return [L for L in self.lattice if not L.fixer.issubset(entry.H)]


def conjugacy_rep(G: FiniteGroup, H: Subgroup) -> Subgroup:
    return min(G.conjugates(H))


def is_subconjugate(G: FiniteGroup, H: Subgroup, K: Subgroup) -> bool:
    """(H) <= (K): some conjugate of H lies inside K."""
    return any(C.issubset(K) for C in G.conjugates(H))


def isotropy_types(G: FiniteGroup, omega, delta=None, max_refine: int = 3) -> OrbitTypeTable:
    """Orbit types occurring in the invariant domain ``omega``.

    A lattice subspace W contributes the type of its fixer H_W when a grid
    sample of W inside omega avoids every strictly smaller lattice subspace.
    """
    from .domain import classify_cells

    if omega.is_empty:
        raise EmptyDomain("domain has no boxes")
    lattice = fixed_subspace_lattice(G)
    if delta is None:
        delta = omega.default_delta()
    kept = []
    for L in lattice:
        smaller = [
            M for M in lattice if L.fixer.issubset(M.fixer) and M.fixer != L.fixer
        ]
        d = delta
        for _ in range(max_refine + 1):
            cells = classify_cells(omega, L.fixer, L.basis, smaller, d)
            if cells.count:
                kept.append(L.fixer)
                break
            if L.basis.dim == 0:
                break
            d = d / 2
    reps = sorted({conjugacy_rep(G, H) for H in kept}, key=lambda H: (-H.order, H.members))
    entries = []
    for i, H in enumerate(reps):
        basis = next(L.basis for L in lattice if L.fixer == H)
        entries.append(
            OrbitTypeEntry(
                id=i,
                H=H,
                basis=basis,
                weyl=weyl_group(G, H, basis),
                conjugates=tuple(G.conjugates(H)),
            )
        )
    relation = tuple(
        (i, j)
        for i, a in enumerate(entries)
        for j, b in enumerate(entries)
        if is_subconjugate(G, a.H, b.H)
    )
    return OrbitTypeTable(G, tuple(entries), relation, tuple(lattice))


def check_associativity(G: FiniteGroup, trials: int = 100, seed: int = 0) -> bool:
    rng = np.random.default_rng(seed)
    c = G.cayley
    for a, b, k in rng.integers(0, G.order, size=(trials, 3)):
        if c[a, c[b, k]] != c[c[a, b], k]:
            return False
    return True

