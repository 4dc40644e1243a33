import pytest
from hypothesis import given, strategies as st

from ssdolb.fixtures import sheaf_to_json
from ssdolb.poset import validate_sheaf
from ssdolb.random_gen import (
    MAX_RANK, random_cover, random_instance, random_poset, random_ses, random_sheaf,
    random_tower, rng_for,
)


def test_same_seed_same_instance():
    a = random_instance(7)
    b = random_instance(7)
    assert a[0] == b[0] and a[1] == b[1]
    assert sheaf_to_json(a[3]) == sheaf_to_json(b[3])


def test_caps_are_enforced():
    with pytest.raises(ValueError):
        random_poset(rng_for(1), points=21)
    X = random_poset(rng_for(1))
    with pytest.raises(ValueError):
        random_sheaf(rng_for(1), X, rank=MAX_RANK + 1)


@given(st.integers(1, 10_000))
def test_generated_objects_are_valid(seed):
    rng = rng_for(seed)
    X = random_poset(rng)
    assert len(X) <= 20
    cover = random_cover(rng, X)
    assert len(cover) <= 4
    assert frozenset().union(*cover) == frozenset(X.points)
    assert all(X.is_open(u) and len(X.minimal(u)) == 1 for u in cover)
    f = random_sheaf(rng, X)
    validate_sheaf(f)
    assert all(f.dim(x) <= MAX_RANK for x in X.points)


@given(st.integers(1, 10_000))
def test_ses_is_exact_at_every_stalk(seed):
    rng = rng_for(seed)
    X = random_poset(rng)
    f1, f2, f3, i, p = random_ses(rng, X)
    i.validate()
    p.validate()
    for x in X.points:
        a, b = i.stalk(x), p.stalk(x)
        assert (b @ a).is_zero()
        assert a.rank() == f1.dim(x) and b.rank() == f3.dim(x)
        assert f1.dim(x) + f3.dim(x) == f2.dim(x)


@given(st.integers(1, 10_000))
def test_towers_refine(seed):
    rng = rng_for(seed)
    X = random_poset(rng)
    fine, mid, coarse, tf, tm = random_tower(rng, X)
    for a, b, t in ((fine, mid, tf), (mid, coarse, tm)):
        assert all(u <= b[t[i]] for i, u in enumerate(a))
        assert list(t.values()) == sorted(t.values())
