"""Hand-checkable cases: tiny spaces where every answer can be worked out by hand."""

import pytest

from ssdolb.dolbeault import (
    Atlas, AtlasMorphism, EmbeddingTriple, atlas_product, derived_zigzag, dolb_atlas,
    dolb_chart, identity_over, pullback_morphism,
)
from ssdolb.linalg import ChainMap, CochainComplex, RationalMatrix as M, induced_map, is_quasi_iso, rank
from ssdolb.poset import (
    POINT, PosetSpace, SpaceMap, StalkHom, bar_complex, bar_cohomology, chain_poset,
    constant_sheaf, flasque_bar_resolution, inverse_image, open_indicator_sheaf, product_space,
    pushforward, restrict_open, zero_sheaf,
)
from ssdolb.sharp import cech_augmentation, cech_complex
from ssdolb.simplicial import nerve
from ssdolb.ss import restrict_to_cover

CIRCLE = PosetSpace("abxy", [("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")])
U = [frozenset("axy"), frozenset("bxy")]
CHAIN2 = chain_poset(2)
CHAIN3 = chain_poset(3)


def trim(h):
    h = list(h)
    while h and h[-1] == 0:
        h.pop()
    return h


def test_small_ranks():
    assert rank(M.identity(3)) == 3
    assert rank(M.zeros(2, 4)) == 0
    assert rank(M.from_rows([[1, 2], [2, 4]])) == 1


def test_small_complexes_and_cones():
    assert CochainComplex([1]).betti() == [1]
    q_id = CochainComplex([1, 1], [M.identity(1)])
    assert q_id.betti() == [0, 0]
    line = CochainComplex([1])
    assert is_quasi_iso(ChainMap(line, line, {0: M.from_rows([[2]])}))
    assert not is_quasi_iso(ChainMap(line, line, {0: M.zeros(1, 1)}))


def test_nerves_of_small_covers():
    three = [frozenset("at"), frozenset("bt"), frozenset("ct")]
    space = PosetSpace("abct", [("a", "t"), ("b", "t"), ("c", "t")])
    assert (0, 1, 2) in nerve(space, three)
    assert len(nerve(space, [frozenset(space.points)])) == 1
    apart = PosetSpace("pq")
    assert (0, 1) not in nerve(apart, [frozenset("p"), frozenset("q")])
    assert nerve(CIRCLE, U).dim == 1


def test_global_sections_on_small_opens():
    assert constant_sheaf(POINT, 3).sections(frozenset(POINT.points)).dim == 3
    f = constant_sheaf(CIRCLE)
    assert f.sections(frozenset(CIRCLE.points)).dim == 1
    assert f.sections(frozenset("xy")).dim == 2


def test_pushforward_along_a_closed_embedding_of_chains():
    k = SpaceMap(CHAIN2, CHAIN3, {0: 0, 1: 1})
    push = pushforward(k, constant_sheaf(CHAIN2))
    assert [push.dim(p) for p in CHAIN3.points] == [1, 1, 0]
    # pushing to a point gives the global sections
    to_pt = pushforward(SpaceMap.to_point(CIRCLE), constant_sheaf(CIRCLE))
    assert to_pt.dim(0) == 1


def test_inverse_images_and_restriction():
    g = constant_sheaf(POINT, 2)
    pulled = inverse_image(SpaceMap.to_point(CIRCLE), g)
    assert all(pulled.dim(p) == 2 for p in CIRCLE.points)
    r = restrict_open(constant_sheaf(CIRCLE), frozenset("xy"))
    assert sorted(r.base.points) == ["x", "y"]
    assert r.sections(frozenset("xy")).dim == 2


def test_products_of_chains():
    prod, (p1, p2) = product_space([CHAIN2, CHAIN2])
    assert len(prod.points) == 4
    assert p1((0, 1)) == 0 and p2((0, 1)) == 1
    one, _ = product_space([POINT, CHAIN2])
    assert len(one.points) == 2


def test_bar_complex_of_the_circle_and_chains():
    assert bar_cohomology(POINT, constant_sheaf(POINT, 2)) == [2]
    assert trim(bar_cohomology(CHAIN2, constant_sheaf(CHAIN2))) == [1]
    c = bar_complex(CIRCLE, constant_sheaf(CIRCLE))
    assert c.dims[:2] == [4, 4]
    assert rank(c.diffs[0]) == 3
    res = flasque_bar_resolution(CHAIN2, constant_sheaf(CHAIN2))
    assert [res.complex.term(0).dim(p) for p in (0, 1)] == [2, 1]
    assert [res.complex.term(1).dim(p) for p in (0, 1)] == [1, 0]


def test_circle_restriction_components():
    m = restrict_to_cover(CIRCLE, U, constant_sheaf(CIRCLE))
    dims = [m.sheaf(a).sections(frozenset(m.space.space(a).points)).dim for a in [(0,), (1,), (0, 1)]]
    assert dims == [1, 1, 2]


def test_cech_augmentation_is_a_stalkwise_but_not_global_quasi_iso():
    f = constant_sheaf(CIRCLE)
    cech = cech_complex(CIRCLE, U, f)
    aug = cech_augmentation(CIRCLE, U, f, cech)
    for x in CIRCLE.points:
        stalks = cech.stalk_complex(x)
        assert trim(stalks.betti()) == [1]
        assert aug.stalk(x).rank() == 1
    # H^1 of the circle is not seen by the constant sections
    assert trim(cech.sections_complex().betti()) == [1, 1]


def test_zero_sheaf_gives_the_zero_complex():
    d = dolb_atlas(Atlas.identity_charts(CIRCLE, U), zero_sheaf(CIRCLE))
    assert all(t.global_dim == 0 for t in d.terms)


def test_identity_chart_reproduces_the_bar_resolution():
    f = constant_sheaf(CHAIN3)
    c = dolb_chart(EmbeddingTriple.identity(CHAIN3), f)
    b = flasque_bar_resolution(CHAIN3, f)
    assert [t.global_dim for t in c.complex.terms] == [t.global_dim for t in b.complex.terms]


def test_chain_embedded_in_a_longer_chain():
    chart = EmbeddingTriple(CHAIN2, {0: 0, 1: 1}, CHAIN3)
    c = dolb_chart(chart, constant_sheaf(CHAIN2))
    assert c.is_stalkwise_exact()


def test_single_and_embedded_atlases_agree_in_cohomology():
    f = constant_sheaf(CHAIN2)
    single = dolb_atlas(Atlas.single(CHAIN2), f)
    embedded = dolb_atlas(Atlas(CHAIN2, [EmbeddingTriple(CHAIN2, {0: 0, 1: 1}, CHAIN3)]), f)
    assert trim(single.cohomology()) == trim(embedded.cohomology()) == [1]


def test_one_point_space():
    d = dolb_atlas(Atlas.single(POINT), constant_sheaf(POINT, 2))
    assert trim(d.cohomology()) == [2]
    assert d.augmentation_is_quasi_iso()


def test_identity_chart_atlas_of_the_circle():
    d = dolb_atlas(Atlas.identity_charts(CIRCLE, U), constant_sheaf(CIRCLE))
    assert trim(d.cohomology()) == [1, 1]


def test_collapse_to_a_point_induces_the_section_map_on_h0():
    f = constant_sheaf(CIRCLE)
    g = constant_sheaf(POINT)
    to_pt = SpaceMap.to_point(CIRCLE)
    A = Atlas.identity_charts(CIRCLE, U)
    B = Atlas.single(POINT)
    amb = {i: SpaceMap.to_point(c.ambient) for i, c in enumerate(A.charts)}
    phi = AtlasMorphism(A, B, to_pt, {0: 0, 1: 0}, amb)
    u = StalkHom(g, f, {x: M.identity(1) for x in CIRCLE.points}, over=to_pt)
    pb = pullback_morphism(phi, u)
    h0 = induced_map(pb.on_sections(), 0)
    assert h0.shape == (1, 1) and h0 != M.zeros(1, 1)


def test_refinement_pullback_on_the_circle():
    f = constant_sheaf(CIRCLE)
    fine = Atlas.identity_charts(CIRCLE, U)
    phi = AtlasMorphism(fine, Atlas.single(CIRCLE), SpaceMap.identity(CIRCLE), {0: 0, 1: 0},
                        {i: SpaceMap.inclusion(c.ambient, CIRCLE) for i, c in enumerate(fine.charts)})
    pb = pullback_morphism(phi, identity_over(f))
    assert pb.is_quasi_iso()


def test_product_with_the_diagonal_chart():
    A = Atlas.identity_charts(CIRCLE, U)
    prod, p1, p2 = atlas_product(A, {0: 0, 1: 1}, A)
    c = prod.charts[0]
    assert c.embedding("x") == ("x", "x")
    # the diagonal is not down-closed inside U_a x U_a
    assert not c.closed


def test_zigzag_between_identical_atlases_is_the_identity_in_cohomology():
    f = constant_sheaf(CIRCLE)
    A = Atlas.identity_charts(CIRCLE, U)
    z = derived_zigzag(SpaceMap.identity(CIRCLE), identity_over(f), A, A, tau={0: 0, 1: 1})
    assert z.left_is_quasi_iso()
    maps = z.induced_maps()
    assert maps[0] == M.identity(1) and maps[1] == M.identity(1)


def test_indicator_sheaf_on_an_open_pair():
    f = open_indicator_sheaf(CIRCLE, frozenset("xy"))
    assert f.dim("a") == 0 and f.sections(frozenset("xy")).dim == 2
    # every global section is forced to vanish below x and y
    assert f.sections(frozenset(CIRCLE.points)).dim == 0
    with pytest.raises(ValueError):
        open_indicator_sheaf(CIRCLE, frozenset("a"))
