import pytest
from hypothesis import given, strategies as st

from oracles import order_complex_betti
from ssdolb.linalg import RationalMatrix as M
from ssdolb.poset import (
    BlockSheaf, PosetSpace, SheafRep, SpaceMap, StalkHom, bar_cohomology,
    check_triangle_identities, constant_sheaf, direct_sum, flasque_bar_resolution, hom_basis,
    inverse_image, is_flasque, open_indicator_sheaf, pushforward, tensor_sheaf,
)
from ssdolb.random_gen import random_natural_map, random_poset, random_sheaf, rng_for

CIRCLE = PosetSpace("abxy", [("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")])
SPHERE = PosetSpace("abxypq", [(s, t) for s in "ab" for t in "xy"] +
                    [(s, t) for s in "xy" for t in "pq"])


def trim(h):
    h = list(h)
    while h and h[-1] == 0:
        h.pop()
    return h


def test_open_sets_are_upsets():
    assert CIRCLE.is_open({"a", "x", "y"})
    assert not CIRCLE.is_open({"a"})
    assert CIRCLE.upset({"a"}) == frozenset("axy")
    assert CIRCLE.height == 1
    assert all(CIRCLE.is_open(u) for u in CIRCLE.open_sets())
    with pytest.raises(ValueError):
        PosetSpace("ab", [("a", "b"), ("b", "a")])


def test_constant_sheaf_cohomology_of_circle_and_sphere():
    assert trim(bar_cohomology(CIRCLE, constant_sheaf(CIRCLE))) == [1, 1]
    assert trim(bar_cohomology(SPHERE, constant_sheaf(SPHERE))) == [1, 0, 1]


@given(st.integers(1, 500))
def test_constant_sheaf_matches_order_complex(seed):
    X = random_poset(rng_for(seed))
    want = trim(order_complex_betti(X.points, X.lt))
    assert trim(bar_cohomology(X, constant_sheaf(X))) == want


def test_sheaf_validation_rejects_noncommuting_square():
    X = PosetSpace("abcd", [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")])
    one = M.from_rows([[1]])
    res = {("a", "b"): one, ("a", "c"): one, ("b", "d"): one, ("c", "d"): one.scale(2)}
    with pytest.raises(ValueError):
        SheafRep(X, dict.fromkeys("abcd", 1), res)


def test_sections_of_indicator_sheaves():
    u = frozenset("bxy")
    f = open_indicator_sheaf(CIRCLE, u, 2)
    assert f.sections(frozenset(CIRCLE.points)).dim == 0
    assert f.sections(u).dim == 2
    assert constant_sheaf(CIRCLE).sections(frozenset("xy")).dim == 2


def test_block_sheaf_stalks_and_flasqueness():
    b = BlockSheaf(CIRCLE, [("k", "x", 2), ("z", "a", 0)])
    assert b.dim("a") == 2 and b.dim("b") == 2 and b.dim("y") == 0
    assert is_flasque(b)
    assert not is_flasque(constant_sheaf(CIRCLE))


@given(st.integers(1, 300))
def test_bar_resolution_is_flasque_and_exact(seed):
    rng = rng_for(seed)
    X = random_poset(rng, points=rng.randint(3, 8))
    f = random_sheaf(rng, X)
    res = flasque_bar_resolution(X, f)
    assert res.is_stalkwise_exact()
    assert all(is_flasque(t) for t in res.complex.terms)
    assert trim(res.complex.sections_complex().betti()) == trim(bar_cohomology(X, f))


def test_adjunction_triangle_identities():
    rng = rng_for(3)
    Y = PosetSpace("pq", [("p", "q")])
    f = SpaceMap(CIRCLE, Y, {"a": "p", "b": "p", "x": "q", "y": "q"})
    assert check_triangle_identities(f, random_sheaf(rng, CIRCLE), random_sheaf(rng, Y))
    push = pushforward(f, constant_sheaf(CIRCLE))
    assert push.dim("p") == 1 and push.dim("q") == 2
    pull = inverse_image(f, constant_sheaf(Y, 2))
    assert all(pull.dim(x) == 2 for x in CIRCLE.points)


def test_space_maps_must_be_monotone():
    with pytest.raises(ValueError):
        SpaceMap(CIRCLE, CIRCLE, {"a": "x", "b": "b", "x": "a", "y": "y"})


@given(st.integers(1, 300))
def test_hom_basis_spans_natural_maps(seed):
    rng = rng_for(seed)
    X = random_poset(rng, points=rng.randint(3, 7))
    f, g = random_sheaf(rng, X, 2), random_sheaf(rng, X, 2)
    basis = hom_basis(f, g)
    for h in basis:
        h.validate()
    # the constant sheaf maps into f exactly through global sections
    assert len(hom_basis(constant_sheaf(X), f)) == f.sections(frozenset(X.points)).dim
    u = random_natural_map(rng, f, g)
    u.validate()


def test_direct_sum_and_tensor_dimensions():
    f = open_indicator_sheaf(CIRCLE, frozenset("axy"))
    g = constant_sheaf(CIRCLE, 2)
    s = direct_sum([f, g])
    t = tensor_sheaf(f, g)
    for x in CIRCLE.points:
        assert s.dim(x) == f.dim(x) + g.dim(x)
        assert t.dim(x) == f.dim(x) * g.dim(x)
    StalkHom(g, g, {x: M.identity(2) for x in CIRCLE.points}).validate()
