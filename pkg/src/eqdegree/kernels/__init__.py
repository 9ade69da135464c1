"""Kernel backend selection.

Numba kernels are used when numba imports cleanly; setting the environment
variable ``EQDEGREE_DISABLE_NUMBA=1`` forces the pure-numpy twins.
"""
import os

import numpy as np

from . import numpy_impl

_disabled = os.environ.get("EQDEGREE_DISABLE_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
    "on",
}

if _disabled:
    _impl = numpy_impl
    BACKEND = "numpy"
else:
    try:
        from . import numba_impl as _impl

        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a hard dependency in CI
        _impl = numpy_impl
        BACKEND = "numpy"


def _f(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _i(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def poly_eval(X, exps, coefs, rows, nout):
    return _impl.poly_eval(_f(X), _i(exps), _f(coefs), _i(rows), int(nout))


def newton_poly(U0, B, poly, dpoly, maxit, tol, bound):
    exps, coefs, rows = poly
    dexps, dcoefs, drows = dpoly
    return _impl.newton_poly(
        _f(U0), _f(B), _i(exps), _f(coefs), _i(rows),
        _i(dexps), _f(dcoefs), _i(drows), int(maxit), float(tol), float(bound),
    )


def contains_boxes(X, inv_mats, lo, hi):
    return _impl.contains_boxes(_f(X), _f(inv_mats), _f(lo), _f(hi))


def orbit_defects(X, mats):
    return _impl.orbit_defects(_f(X), _f(mats))


def subspace_distances(X, projs):
    return _impl.subspace_distances(_f(X), _f(projs))


def label_components(n, edges):
    edges = _i(edges).reshape(-1, 2)
    return _impl.label_components(int(n), edges)


def angle_increments(vals):
    return _impl.angle_increments(_f(vals))
