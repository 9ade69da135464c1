import os
import subprocess
import sys

import numpy as np
import pytest

from eqdegree import kernels
from eqdegree.kernels import numba_impl, numpy_impl
from eqdegree.scenarios import scenario

IMPLS = [numpy_impl, numba_impl]


def _quintic():
    return scenario("S4").map().pieces[0].expr


@pytest.mark.parametrize("impl", IMPLS, ids=["numpy", "numba"])
def test_poly_eval_matches_direct_formula(impl, rng):
    expr = _quintic()
    X = rng.uniform(-3, 3, size=(50, 2))
    exps, coefs, rows = expr.compiled
    out = impl.poly_eval(X, exps, coefs, rows, 2)
    z = X[:, 0] + 1j * X[:, 1]
    w = z**5 - 16 * z
    np.testing.assert_allclose(out[:, 0], w.real, rtol=1e-12, atol=1e-9)
    np.testing.assert_allclose(out[:, 1], w.imag, rtol=1e-12, atol=1e-9)


def test_backends_agree_on_every_kernel(rng):
    expr = _quintic()
    exps, coefs, rows = expr.compiled
    dexps, dcoefs, drows = expr.compiled_jacobian
    X = rng.uniform(-3, 3, size=(200, 2))
    S5 = scenario("S5")
    om = S5.omega
    projs = np.array([[[1.0, 0], [0, 0]], [[0.5, 0.5], [0.5, 0.5]]])
    edges = np.array([[0, 1], [2, 3], [3, 4], [6, 5]])
    ang = rng.normal(size=(30, 2))
    U0 = rng.uniform(-3, 3, size=(100, 2))
    pairs = [
        (lambda m: m.poly_eval(X, exps, coefs, rows, 2)),
        (lambda m: m.contains_boxes(X, om.inv_mats, om.lo, om.hi)),
        (lambda m: m.orbit_defects(X, S5.group.mats)),
        (lambda m: m.subspace_distances(X, projs)),
        (lambda m: m.label_components(8, edges)),
        (lambda m: m.angle_increments(ang)),
    ]
    for fn in pairs:
        a, b = fn(numpy_impl), fn(numba_impl)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
    Ua, ra, oka = numpy_impl.newton_poly(U0, np.eye(2), exps, coefs, rows, dexps, dcoefs, drows, 50, 1e-12, 100.0)
    Ub, rb, okb = numba_impl.newton_poly(U0, np.eye(2), exps, coefs, rows, dexps, dcoefs, drows, 50, 1e-12, 100.0)
    assert np.array_equal(oka, okb)
    np.testing.assert_allclose(Ua[oka], Ub[okb], atol=1e-9)


@pytest.mark.parametrize("impl", IMPLS, ids=["numpy", "numba"])
def test_label_components_first_appearance(impl):
    edges = np.array([[3, 4], [0, 2], [5, 1]], dtype=np.int64)
    labels = impl.label_components(6, edges)
    assert labels.tolist() == [0, 1, 0, 2, 2, 1]


@pytest.mark.parametrize("impl", IMPLS, ids=["numpy", "numba"])
def test_newton_converges_to_roots_of_quintic(impl, rng):
    expr = _quintic()
    U0 = np.array([[1.9, 0.1], [0.1, -2.2], [1.0, 1.0]])
    U, resid, ok = impl.newton_poly(
        U0, np.eye(2), *expr.compiled, *expr.compiled_jacobian, 50, 1e-12, 100.0
    )
    assert ok[:2].all()
    np.testing.assert_allclose(U[0], [2, 0], atol=1e-12)
    np.testing.assert_allclose(U[1], [0, -2], atol=1e-12)


@pytest.mark.parametrize("impl", IMPLS, ids=["numpy", "numba"])
def test_angle_increments_sum_to_winding(impl):
    s = np.linspace(0, 2 * np.pi, 401)
    vals = np.stack([np.cos(3 * s), np.sin(3 * s)], axis=1)
    assert abs(impl.angle_increments(vals).sum() - 6 * np.pi) < 1e-9


def test_env_flag_selects_numpy_backend():
    code = "from eqdegree import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, EQDEGREE_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env["EQDEGREE_DISABLE_NUMBA"] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numba"


def test_numpy_backend_end_to_end():
    code = (
        "from eqdegree.scenarios import scenario\n"
        "from eqdegree import equivariant_degree, kernels\n"
        "s = scenario('S2'); r = equivariant_degree(s.map(), s.omega)\n"
        "print(kernels.BACKEND, r.vector.support())"
    )
    env = dict(os.environ, EQDEGREE_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy {(0, 0): 1}"


def test_wrapper_reports_backend():
    assert kernels.BACKEND in ("numba", "numpy")
