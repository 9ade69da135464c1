import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from eqdegree import exact as ex
from eqdegree.degree import DegreeVector, equivariant_degree
from eqdegree.domain import saturate, stratify
from eqdegree.errors import NoRoom, Overlap, ValidationError
from eqdegree.group import close_generators
from eqdegree.maps import check_equivariance, check_locality
from eqdegree.otopy import check_slices, verify_otopy_invariance
from eqdegree.realize import (
    AtomPiece,
    atom_map,
    disjoint_union,
    dump_atoms,
    linearize,
    load_atoms,
    realize,
    standard_atom,
)
from eqdegree.scenarios import ROT90, scenario


def test_realize_s2_three(strats):
    st2 = strats("S2")
    f, atoms = realize({(0, 0): 3}, st2)
    assert len(atoms) == 3 and all(a.exact for a in atoms)
    assert all(isinstance(v, Fraction) for a in atoms for v in a.center_exact)
    assert equivariant_degree(f, st2).vector == {(0, 0): 3}
    assert check_locality(f).passed


@pytest.mark.parametrize(
    "name,target",
    [
        ("S3", {(0, 0): -2, (1, 0): 1}),
        ("S4", {(0, 0): -2}),
        ("S5", {(0, 0): 1, (1, 0): -1, (2, 0): 2}),
    ],
)
def test_realize_round_trip_examples(strats, name, target):
    s = strats(name)
    f, atoms = realize(target, s)
    assert sum(abs(v) for v in target.values()) == len(atoms)
    res = equivariant_degree(f, s)
    assert res.vector == target
    # each atom carries one orbit of zeros of its sign
    assert len({(z.orbit_type, z.orbit) for z in res.zeros}) == len(atoms)


def test_realize_rejects_unknown_keys(strats):
    with pytest.raises(ValidationError):
        realize({(7, 0): 1}, strats("S3"))


def test_realize_zero_target_is_empty(strats):
    f, atoms = realize({}, strats("S3"))
    assert f.is_empty and atoms == []
    assert equivariant_degree(f, strats("S3")).vector.is_zero()


def test_atoms_are_exactly_equivariant(strats):
    f, _ = realize({(0, 0): 1, (1, 0): -2}, strats("S5"))
    rep = check_equivariance(f, samples=48)
    assert rep.passed and rep.exact and rep.max_defect == 0.0


def test_coset_factorizations_agree(strats):
    # g h L (g h)^-1 = g L g^-1 and g h x0 = g x0 for every h in H
    s = strats("S5")
    G = s.group
    _, atoms = realize({(0, 0): 1, (1, 0): -1}, s)
    for atom in atoms:
        piece = AtomPiece(G, atom)
        for g, M in zip(piece.reps, piece.mats_exact):
            for h in atom.H:
                gh = int(G.cayley[g, h])
                Mgh = ex.matmul(ex.matmul(G.exact[gh], atom.linear_exact), ex.transpose(G.exact[gh]))
                assert Mgh == M
                assert ex.matvec(G.exact[gh], atom.center_exact) == ex.matvec(G.exact[g], atom.center_exact)


def test_disjoint_union_and_overlap(strats):
    s = strats("S4")
    f, _ = realize({(0, 0): 1}, s)
    with pytest.raises(Overlap):
        disjoint_union(f, f)
    g, _ = realize({(0, 0): -1}, s, avoid=[p.region for p in f.pieces])
    u = disjoint_union(f, g)
    assert equivariant_degree(u, s).vector.is_zero()  # annihilation


def test_overlap_map_with_domain_piece(strats):
    s = strats("S3")
    f, _ = realize({(1, 0): 1}, s)
    with pytest.raises(Overlap):
        disjoint_union(f, scenario("S3").map("affine"))


def test_no_room():
    G = close_generators([ROT90])
    om = saturate([[("-1", "1"), ("-1", "1")]], G)
    s = stratify(om)
    origin = next(e for e in s.table if e.dim == 0)
    with pytest.raises(NoRoom):
        realize({(origin.id, 0): -1}, s)
    with pytest.raises(NoRoom):
        standard_atom(s, origin.id, 0, 1, share=10**6)
    f, _ = realize({(origin.id, 0): 1}, s)
    assert equivariant_degree(f, s).vector[(origin.id, 0)] == 1


def test_serialization_round_trip(strats):
    s = strats("S5")
    f, atoms = realize({(0, 0): 2, (2, 0): -1}, s)
    text = dump_atoms(atoms)
    back = load_atoms(s.group, s.table, text)
    assert [a.to_dict() for a in back] == json.loads(text)
    g = atom_map(s.group, back)
    X = np.vstack([p.region.centers + 0.01 for p in f.pieces])
    np.testing.assert_array_equal(f.evaluate(X), g.evaluate(X))
    assert equivariant_degree(g, s).vector == {(0, 0): 2, (2, 0): -1}


def test_load_atoms_validation(strats):
    s = strats("S3")
    bad_linear = [{"center": ["1", "0"], "H": 0, "sign": 1, "radius": "1/4",
                   "linear": [["1", "1"], ["0", "1"]]}]
    with pytest.raises(ValidationError):
        load_atoms(s.group, s.table, bad_linear)
    with pytest.raises(ValidationError):
        load_atoms(s.group, s.table, [{"center": ["1"], "H": 0, "sign": 1, "radius": "1",
                                       "linear": [["1"]]}])


@pytest.mark.parametrize("name", ["S2", "S3", "S4", "S5"])
def test_linearize_zeros(strats, name):
    s = strats(name)
    f = scenario(name).map()
    res = equivariant_degree(f, s)
    for z in res.zeros:
        atom, h = linearize(f, z, s)
        assert atom.sign == z.sign
        check_slices(h)
        rep = verify_otopy_invariance(h, s, t_samples=5)
        assert rep.passed
        # the ball orbit around one zero orbit has degree sign on that component
        assert rep.vectors[0].support() == {(z.orbit_type, z.component): z.sign}


def _keys(s):
    return sorted(k for k in s.keys() if s.table.entry(k[0]).dim > 0)


@settings(max_examples=12, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(data=st.data())
def test_realize_round_trip_property(strats, data):
    name = data.draw(st.sampled_from(["S3", "S5"]))
    s = strats(name)
    target = {k: data.draw(st.integers(-3, 3)) for k in _keys(s)}
    f, atoms = realize(target, s)
    assert equivariant_degree(f, s).vector == DegreeVector(target)
    assert check_locality(f).passed


def test_linearization_matrices(strats):
    s2 = strats("S2")
    f = scenario("S2").map()
    z = next(z for z in equivariant_degree(f, s2).zeros if z.point[0] > 0)
    atom, _ = linearize(f, z, s2)
    np.testing.assert_allclose(atom.linear, [[8.0]])
    s4 = strats("S4")
    g = scenario("S4").map()
    z = next(z for z in equivariant_degree(g, s4).zeros if z.point[0] > 1)
    atom, _ = linearize(g, z, s4)
    assert np.linalg.det(atom.linear) == pytest.approx(64.0**2) and atom.sign == 1
