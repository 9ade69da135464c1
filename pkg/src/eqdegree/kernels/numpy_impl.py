"""Pure-numpy versions of the hot kernels.

Signatures and results match ``numba_impl`` exactly; the test-suite runs both.
"""
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

_EPS = np.finfo(float).eps


def poly_eval(X, exps, coefs, rows, nout):
    """Evaluate a sparse polynomial system at every row of ``X``.

    Monomial ``m`` is ``coefs[m] * prod(X**exps[m])`` and is accumulated into
    output column ``rows[m]``.
    """
    X = np.asarray(X, dtype=float)
    out = np.zeros((X.shape[0], nout))
    if exps.shape[0] == 0:
        return out
    mons = np.prod(X[:, None, :] ** exps[None, :, :], axis=2) * coefs[None, :]
    for col in range(nout):
        sel = rows == col
        if sel.any():
            out[:, col] = mons[:, sel].sum(axis=1)
    return out


def newton_poly(U0, B, exps, coefs, rows, dexps, dcoefs, drows, maxit, tol, bound):
    """Batched Newton on u -> B^T f(B u) for a polynomial f.

    Returns (U, residual, converged).
    """
    n, d = B.shape
    U = np.array(U0, dtype=float, copy=True)
    N = U.shape[0]
    active = np.ones(N, dtype=bool)
    ok = np.zeros(N, dtype=bool)
    resid = np.full(N, np.inf)
    for _ in range(maxit + 1):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        X = U[idx] @ B.T
        F = poly_eval(X, exps, coefs, rows, n) @ B
        r = np.abs(F).max(axis=1)
        resid[idx] = r
        done = r <= tol
        ok[idx[done]] = True
        active[idx[done]] = False
        idx, X, F, r = idx[~done], X[~done], F[~done], r[~done]
        if idx.size == 0:
            break
        J = poly_eval(X, dexps, dcoefs, drows, n * n).reshape(-1, n, n)
        Js = np.einsum("ia,pij,jb->pab", B, J, B)
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
        stalled = (snorm <= 4 * _EPS * (1.0 + unorm)) & (r <= 1e-9)
        ok[idx[stalled]] = True
        active[idx[stalled]] = False
        blown = ~np.isfinite(unorm) | (unorm > bound)
        active[idx[blown]] = False
    return U, resid, ok


def contains_boxes(X, inv_mats, lo, hi):
    """True where some stored (g, box) pair has g^-1 x strictly inside box."""
    X = np.asarray(X, dtype=float)
    out = np.zeros(X.shape[0], dtype=bool)
    for p in range(inv_mats.shape[0]):
        Z = X @ inv_mats[p].T
        out |= np.all((Z > lo[p]) & (Z < hi[p]), axis=1)
    return out


def orbit_defects(X, mats):
    """Matrix of ||g x - x|| with shape (points, group elements)."""
    X = np.asarray(X, dtype=float)
    GX = np.einsum("gij,pj->pgi", mats, X)
    return np.linalg.norm(GX - X[:, None, :], axis=2)


def subspace_distances(X, projs):
    X = np.asarray(X, dtype=float)
    if projs.shape[0] == 0:
        return np.zeros((X.shape[0], 0))
    PX = np.einsum("sij,pj->psi", projs, X)
    return np.linalg.norm(X[:, None, :] - PX, axis=2)


def label_components(n, edges):
    """Connected-component labels numbered by first appearance."""
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    graph = coo_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n)
    )
    _, raw = connected_components(graph, directed=False)
    _, first = np.unique(raw, return_index=True)
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(order.size)
    return remap[raw].astype(np.int64)


def angle_increments(vals):
    """Signed angle steps between consecutive planar vectors, in (-pi, pi]."""
    vals = np.asarray(vals, dtype=float)
    a, b = vals[:-1], vals[1:]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]
    return np.arctan2(cross, dot)
