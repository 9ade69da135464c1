"""Numba-compiled kernels; see numpy_impl for the reference semantics."""
import math

import numpy as np
from numba import njit

_EPS = np.finfo(np.float64).eps


@njit(cache=True)
def poly_eval(X, exps, coefs, rows, nout):
    N, n = X.shape
    M = exps.shape[0]
    out = np.zeros((N, nout))
    for p in range(N):
        for m in range(M):
            v = coefs[m]
            for i in range(n):
                e = exps[m, i]
                if e != 0:
                    v *= X[p, i] ** e
            out[p, rows[m]] += v
    return out


@njit(cache=True)
def _eval_one(x, exps, coefs, rows, nout):
    out = np.zeros(nout)
    for m in range(exps.shape[0]):
        v = coefs[m]
        for i in range(x.shape[0]):
            e = exps[m, i]
            if e != 0:
                v *= x[i] ** e
        out[rows[m]] += v
    return out


@njit(cache=True)
def _solve(A, b):
    # Gaussian elimination with partial pivoting; ok=False on exact singularity.
    d = A.shape[0]
    M = A.copy()
    y = b.copy()
    for k in range(d):
        piv = k
        best = abs(M[k, k])
        for i in range(k + 1, d):
            if abs(M[i, k]) > best:
                best = abs(M[i, k])
                piv = i
        if best <= 1e-300:
            return y, False
        if piv != k:
            for j in range(d):
                tmp = M[k, j]
                M[k, j] = M[piv, j]
                M[piv, j] = tmp
            tmp = y[k]
            y[k] = y[piv]
            y[piv] = tmp
        for i in range(k + 1, d):
            f = M[i, k] / M[k, k]
            for j in range(k, d):
                M[i, j] -= f * M[k, j]
            y[i] -= f * y[k]
    for k in range(d - 1, -1, -1):
        s = y[k]
        for j in range(k + 1, d):
            s -= M[k, j] * y[j]
        y[k] = s / M[k, k]
    return y, True


@njit(cache=True)
def newton_poly(U0, B, exps, coefs, rows, dexps, dcoefs, drows, maxit, tol, bound):
    n, d = B.shape
    N = U0.shape[0]
    U = U0.copy()
    resid = np.full(N, np.inf)
    ok = np.zeros(N, dtype=np.bool_)
    for p in range(N):
        u = U[p].copy()
        for it in range(maxit + 1):
            x = B @ u
            F = B.T @ _eval_one(x, exps, coefs, rows, n)
            r = 0.0
            for a in range(d):
                r = max(r, abs(F[a]))
            resid[p] = r
            if r <= tol:
                ok[p] = True
                break
            if it == maxit:
                break
            J = _eval_one(x, dexps, dcoefs, drows, n * n).reshape((n, n))
            Js = B.T @ J @ B
            step, good = _solve(Js, F)
            if not good:
                break
            unorm = 0.0
            snorm = 0.0
            for a in range(d):
                u[a] -= step[a]
                unorm = max(unorm, abs(u[a]))
                snorm = max(snorm, abs(step[a]))
            if snorm <= 4 * _EPS * (1.0 + unorm) and r <= 1e-9:
                ok[p] = True
                break
            if not math.isfinite(unorm) or unorm > bound:
                break
        U[p] = u
    return U, resid, ok


@njit(cache=True)
def contains_boxes(X, inv_mats, lo, hi):
    N, n = X.shape
    P = inv_mats.shape[0]
    out = np.zeros(N, dtype=np.bool_)
    for q in range(N):
        for p in range(P):
            inside = True
            for i in range(n):
                z = 0.0
                for j in range(n):
                    z += inv_mats[p, i, j] * X[q, j]
                if not (lo[p, i] < z < hi[p, i]):
                    inside = False
                    break
            if inside:
                out[q] = True
                break
    return out


@njit(cache=True)
def orbit_defects(X, mats):
    N, n = X.shape
    G = mats.shape[0]
    out = np.empty((N, G))
    for q in range(N):
        for g in range(G):
            s = 0.0
            for i in range(n):
                z = -X[q, i]
                for j in range(n):
                    z += mats[g, i, j] * X[q, j]
                s += z * z
            out[q, g] = math.sqrt(s)
    return out


@njit(cache=True)
def subspace_distances(X, projs):
    N, n = X.shape
    S = projs.shape[0]
    out = np.empty((N, S))
    for q in range(N):
        for s_ in range(S):
            acc = 0.0
            for i in range(n):
                z = X[q, i]
                for j in range(n):
                    z -= projs[s_, i, j] * X[q, j]
                acc += z * z
            out[q, s_] = math.sqrt(acc)
    return out


@njit(cache=True)
def _find(parent, a):
    root = a
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


@njit(cache=True)
def label_components(n, edges):
    parent = np.arange(n)
    for e in range(edges.shape[0]):
        a = _find(parent, edges[e, 0])
        b = _find(parent, edges[e, 1])
        if a != b:
            if a < b:
                parent[b] = a
            else:
                parent[a] = b
    labels = np.empty(n, dtype=np.int64)
    remap = np.full(n, -1, dtype=np.int64)
    nxt = 0
    for i in range(n):
        r = _find(parent, i)
        if remap[r] < 0:
            remap[r] = nxt
            nxt += 1
        labels[i] = remap[r]
    return labels


@njit(cache=True)
def angle_increments(vals):
    S = vals.shape[0]
    out = np.empty(max(S - 1, 0))
    for k in range(S - 1):
        ax, ay = vals[k, 0], vals[k, 1]
        bx, by = vals[k + 1, 0], vals[k + 1, 1]
        out[k] = math.atan2(ax * by - ay * bx, ax * bx + ay * by)
    return out
