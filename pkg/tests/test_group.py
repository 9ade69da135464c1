import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqdegree.domain import saturate
from eqdegree.errors import AmbiguousIsotropy, CapExceeded, NotOrthogonal
from eqdegree.group import (
    Subgroup,
    check_associativity,
    close_generators,
    fixed_subspace,
    isotropy_group,
    isotropy_types,
    normalizer,
    weyl_group,
)
from eqdegree.scenarios import FLIP, ROT90, scenario

D8 = [ROT90, FLIP]


def _mkey(M):
    return tuple(np.round(np.asarray(M, dtype=float), 9).ravel())


def _word_closure(gens, max_len=8):
    """All products of at most max_len generators (identity included)."""
    mats = [np.array([[float(Fraction(v)) for v in r] for r in g]) for g in gens]
    n = mats[0].shape[0]
    seen = {_mkey(np.eye(n))}
    layer = [np.eye(n)]
    for _ in range(max_len):
        nxt = []
        for W in layer:
            for M in mats:
                P = W @ M
                if _mkey(P) not in seen:
                    seen.add(_mkey(P))
                    nxt.append(P)
        layer = nxt
    return seen


def _subgroup_mats(G, H):
    return {_mkey(G.mats[h]) for h in H}


# --- closure --------------------------------------------------------------------------

def test_involution_closure():
    G = close_generators([[["-1"]]])
    assert G.order == 2 and G.is_exact


def test_rotation_closure_order_four():
    assert close_generators([ROT90]).order == 4


def test_dihedral_matches_word_oracle():
    G = close_generators(D8)
    assert G.order == 8
    assert {_mkey(M) for M in G.mats} == _word_closure(D8)


def test_identity_first_and_bfs_order_deterministic():
    a = close_generators(D8)
    b = close_generators(D8)
    assert np.array_equal(a.mats[0], np.eye(2))
    assert np.array_equal(a.mats, b.mats) and np.array_equal(a.cayley, b.cayley)


def test_cayley_rows_are_permutations_and_match_products():
    G = close_generators(D8)
    for a in range(G.order):
        assert sorted(G.cayley[a]) == list(range(G.order))
        assert sorted(G.cayley[:, a]) == list(range(G.order))
        for b in range(G.order):
            np.testing.assert_allclose(G.mats[a] @ G.mats[b], G.mats[G.cayley[a, b]], atol=1e-12)
    assert check_associativity(G, 100)


def test_float_mode_for_irrational_generator():
    c, s = -0.5, np.sqrt(3) / 2
    G = close_generators([[[c, -s], [s, c]]])
    assert G.order == 3 and not G.is_exact


def test_cap_exceeded_for_infinite_order_rotation():
    c, s = 0.6, 0.8  # rotation by an irrational multiple of pi
    with pytest.raises(CapExceeded):
        close_generators([[[c, -s], [s, c]]], cap=200)


def test_not_orthogonal():
    with pytest.raises(NotOrthogonal):
        close_generators([[["1", "1"], ["0", "1"]]])


# --- normalizer / Weyl ----------------------------------------------------------------

def _normalizer_oracle(G, H):
    Hm = _subgroup_mats(G, H)
    out = []
    for g in range(G.order):
        M = G.mats[g]
        if {_mkey(M @ G.mats[h] @ M.T) for h in H} == Hm:
            out.append(g)
    return out


def test_normalizer_trivial_and_whole():
    G = close_generators(D8)
    assert normalizer(G, G.whole()) == G.whole()
    assert normalizer(G, G.trivial()) == G.whole()


def test_normalizer_of_reflection_in_d8():
    G = close_generators(D8)
    flip = G.generators[1]
    H = G.generated([flip])
    N = normalizer(G, H)
    assert N.order == 4
    assert list(N.members) == _normalizer_oracle(G, H)


def test_weyl_of_reflection_acts_by_minus_one():
    G = close_generators(D8)
    H = G.generated([G.generators[1]])
    W = weyl_group(G, H)
    assert W.order == 2
    assert W.NH.order == H.order * W.order
    acts = sorted(float(A[0, 0]) for A in W.action_on_fixed)
    assert acts == [-1.0, 1.0]


def test_weyl_extremes():
    G = close_generators(D8)
    assert weyl_group(G, G.whole()).order == 1
    W = weyl_group(G, G.trivial())
    assert W.order == 8
    for g, A in zip(W.coset_reps, W.action_on_fixed):
        np.testing.assert_allclose(A, G.mats[g], atol=1e-12)


def test_weyl_actions_orthogonal_everywhere():
    G = close_generators(D8)
    for H in {G.generated([g]) for g in range(G.order)}:
        W = weyl_group(G, H)
        for A in W.action_on_fixed:
            np.testing.assert_allclose(A.T @ A, np.eye(A.shape[0]), atol=1e-12)


# --- fixed subspaces -------------------------------------------------------------------

def test_fixed_subspace_examples():
    G = close_generators([FLIP])
    assert fixed_subspace(G, G.trivial()).dim == 2
    B = fixed_subspace(G, G.whole())
    assert B.dim == 1 and B.exact
    np.testing.assert_allclose(np.abs(B.matrix[:, 0]), [1, 0])
    R = close_generators([ROT90])
    assert fixed_subspace(R, R.whole()).dim == 0


def test_fixed_subspace_monotone_on_all_pairs():
    G = close_generators(D8)
    subs = {G.generated(c) for k in (1, 2) for c in itertools.combinations(range(G.order), k)}
    for H in subs:
        for K in subs:
            if H.issubset(K):
                assert fixed_subspace(G, H).contains(fixed_subspace(G, K))
                assert fixed_subspace(G, H).dim >= fixed_subspace(G, K).dim


def test_fixed_subspace_orthonormal_float_mode():
    c, s = -0.5, np.sqrt(3) / 2
    R = [[c, -s, 0], [s, c, 0], [0, 0, 1]]
    G = close_generators([R])
    B = fixed_subspace(G, G.whole())
    assert B.dim == 1
    np.testing.assert_allclose(B.matrix.T @ B.matrix, np.eye(1), atol=1e-12)


# --- isotropy ----------------------------------------------------------------------------

def test_isotropy_examples():
    G = close_generators([FLIP])
    assert isotropy_group(G, (0, 0)) == G.whole()
    assert isotropy_group(G, (Fraction(2), Fraction(0))) == G.whole()
    assert isotropy_group(G, (Fraction(1), Fraction(1))) == G.trivial()
    assert isotropy_group(G, np.array([2.0, 0.0])) == G.whole()


def test_ambiguous_isotropy_band():
    G = close_generators([FLIP])
    with pytest.raises(AmbiguousIsotropy):
        isotropy_group(G, np.array([1.0, 3e-9]))
    assert isotropy_group(G, np.array([1.0, 1e-7])) == G.trivial()


coords = st.integers(-6, 6).map(lambda k: Fraction(k, 2))


@settings(max_examples=60, deadline=None)
@given(x=st.tuples(coords, coords), g=st.integers(0, 7))
def test_isotropy_conjugation_exact(x, g):
    G = close_generators(D8)
    gx = tuple(G.act(g, x))
    assert isotropy_group(G, gx) == G.conjugate(isotropy_group(G, x), g)


@settings(max_examples=60, deadline=None)
@given(
    x=st.tuples(st.floats(-3, 3), st.floats(-3, 3)).filter(lambda p: min(abs(p[0]), abs(p[1]), abs(abs(p[0]) - abs(p[1]))) > 1e-6 or p == (0.0, 0.0)),
    g=st.integers(0, 7),
)
def test_isotropy_conjugation_float(x, g):
    G = close_generators(D8)
    xv = np.array(x)
    assert isotropy_group(G, G.mats[g] @ xv) == G.conjugate(isotropy_group(G, xv), g)


# --- orbit-type tables ------------------------------------------------------------------

def _sampled_types(G, omega, axis):
    """Oracle: conjugacy classes of isotropy groups over a grid of domain points."""
    classes = set()
    for p in itertools.product(axis, repeat=G.dim):
        x = np.array(p, dtype=float)
        if not omega.contains_batch(x)[0]:
            continue
        try:
            H = isotropy_group(G, x)
        except AmbiguousIsotropy:
            continue
        classes.add(frozenset(frozenset(_subgroup_mats(G, C)) for C in G.conjugates(H)))
    return classes


def _table_types(G, table):
    return {frozenset(frozenset(_subgroup_mats(G, C)) for C in e.conjugates) for e in table}


def test_orbit_types_reflection_on_square_matches_sampling():
    G = close_generators([FLIP])
    om = saturate([[("-3", "3"), ("-3", "3")]], G)
    table = isotropy_types(G, om)
    assert [e.H.order for e in table] == [2, 1]
    assert (1, 0) in table.order_relation
    axis = np.linspace(-2.9, 2.9, 59)
    assert _table_types(G, table) == _sampled_types(G, om, axis)


def test_orbit_types_rotation_frame_free():
    S4 = scenario("S4")
    table = isotropy_types(S4.group, S4.omega)
    assert [e.H.order for e in table] == [1]
    assert _table_types(S4.group, table) == _sampled_types(S4.group, S4.omega, np.linspace(-2.9, 2.9, 59))


def test_orbit_types_dihedral_frame_two_reflection_classes():
    S5 = scenario("S5")
    G = S5.group
    table = isotropy_types(G, S5.omega)
    assert len(table) == 3
    orders = sorted(e.weyl.order for e in table)
    assert orders == [2, 2, 8]
    refl = [e for e in table if e.H.order == 2]
    assert len(refl) == 2
    assert refl[1].H not in refl[0].conjugates
    assert _table_types(G, table) == _sampled_types(G, S5.omega, np.linspace(-2.9, 2.9, 59))


def test_order_relation_is_partial_order():
    table = isotropy_types(scenario("S5").group, scenario("S5").omega)
    rel = set(table.order_relation)
    ids = [e.id for e in table]
    assert all((i, i) in rel for i in ids)
    for i, j in rel:
        if i != j:
            assert (j, i) not in rel
        for k in ids:
            if (j, k) in rel:
                assert (i, k) in rel


def test_canonical_representative_is_least_conjugate():
    S5 = scenario("S5")
    for e in isotropy_types(S5.group, S5.omega):
        assert e.H == min(e.conjugates)


def test_table_stable_under_conjugation():
    # conjugating by the coordinate swap maps the dihedral frame to itself
    P = np.array([[0.0, 1.0], [1.0, 0.0]])
    gens = [(P @ np.array(g, dtype=float) @ P.T).astype(int).astype(str).tolist() for g in D8]
    G1 = close_generators(D8)
    G2 = close_generators(gens)
    box = [[("1", "3"), ("-3", "3")]]
    t1 = isotropy_types(G1, saturate(box, G1))
    t2 = isotropy_types(G2, saturate([[("-3", "3"), ("1", "3")]], G2))
    sig = lambda t: sorted((e.H.order, e.dim, e.weyl.order, len(e.conjugates)) for e in t)
    assert sig(t1) == sig(t2)
    conj = {frozenset(_mkey(P @ M @ P.T) for M in mats) for mats in
            (G1.mats[list(C)] for e in t1 for C in e.conjugates)}
    target = {frozenset(_mkey(M) for M in G2.mats[list(C)]) for e in t2 for C in e.conjugates}
    assert conj == target


def test_subgroup_helpers():
    H = Subgroup.of([3, 0, 3])
    assert H.members == (0, 3) and 3 in H and H.order == 2
    assert H.issubset(Subgroup.of([0, 1, 3]))
