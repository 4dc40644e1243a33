from itertools import combinations, permutations

import pytest
from hypothesis import given, strategies as st

from oracles import brute_nerve, cycle_sign
from ssdolb.poset import PosetSpace
from ssdolb.simplicial import (
    SimplicialComplex, SimplicialMorphism, double_face, face, fiber_simplexes, full_simplex,
    nerve, permutation_sign, reindex_to_monotone, sign,
)


def test_faces_remove_one_vertex():
    assert face((2, 5, 7), 0) == (5, 7)
    assert face((2, 5, 7), 2) == (2, 5)
    assert sign((2, 5, 7), 1) == -1
    with pytest.raises(ValueError):
        face((3,), 0)


def test_double_face_identity_exhaustive():
    for n in range(2, 5):
        for alpha in combinations(range(7), n + 1):
            for j in range(n + 1):
                for k in range(j + 1, n + 1):
                    want = double_face(alpha, j, k)
                    assert face(face(alpha, k), j) == want
                    assert face(face(alpha, j), k - 1) == want
    assert double_face((4, 9), 0, 1) == ()


def test_complex_is_closed_under_faces():
    k = SimplicialComplex(range(4), [(0, 1, 2), (2, 3)])
    assert (0, 2) in k and (1,) in k and (1, 3) not in k
    assert k.dim == 2
    assert sorted(k.cofaces((2,))) == [((0, 2), 0), ((1, 2), 0), ((2, 3), 1)]
    assert len(full_simplex(3)) == 15  # nonempty subsets of 4 vertices


def test_nerve_matches_brute_force():
    X = PosetSpace("abxy", [("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")])
    cover = [frozenset("axy"), frozenset("bxy"), frozenset("x")]
    assert set(nerve(X, cover)) == brute_nerve(cover)
    with pytest.raises(ValueError):
        nerve(X, [frozenset("a")])


@given(st.permutations(list(range(6))))
def test_permutation_sign_matches_cycle_count(p):
    assert permutation_sign(p) == cycle_sign(p)


def test_permutation_sign_small_cases():
    signs = {p: permutation_sign(p) for p in permutations((1, 2, 3))}
    assert sum(signs.values()) == 0
    assert signs[(2, 1, 3)] == -1 and signs[(3, 1, 2)] == 1


def test_morphisms_fibers_and_reindexing():
    src = SimplicialComplex(range(3), [(0, 1, 2)])
    tgt = SimplicialComplex(range(2), [(0, 1)])
    f = SimplicialMorphism(src, tgt, {0: 1, 1: 0, 2: 0})
    assert not f.is_non_decreasing()
    assert sorted(fiber_simplexes(f, (0, 1), 1)) == [(0, 1, 2)]
    assert sorted(fiber_simplexes(f, (0,), 1)) == [(1, 2)]
    g, perm = reindex_to_monotone(f)
    assert g.is_non_decreasing()
    assert sorted(perm.values()) == [0, 1, 2]
    with pytest.raises(ValueError):
        SimplicialMorphism(tgt, SimplicialComplex([0, 1]), {0: 0, 1: 1})
