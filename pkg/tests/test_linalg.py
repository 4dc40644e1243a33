from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from oracles import frac_rank
from ssdolb.linalg import (
    ChainMap, CochainComplex, RationalMatrix as M, cohomology, cone, double_complex,
    induced_map, is_quasi_iso, q_str, to_q, total_complex,
)

small = st.integers(-3, 3)


@st.composite
def matrices(draw, max_dim=6):
    r = draw(st.integers(0, max_dim))
    c = draw(st.integers(0, max_dim))
    rows = draw(st.lists(st.lists(small, min_size=c, max_size=c), min_size=r, max_size=r))
    return M.from_rows(rows, ncols=c) if r else M.zeros(0, c), rows, c


def test_to_q_accepts_exact_and_rejects_floats():
    assert to_q("3/6") == to_q(Fraction(1, 2))
    assert q_str(to_q("-4/2")) == "-2"
    with pytest.raises(TypeError):
        to_q(0.5)
    with pytest.raises(ValueError):
        to_q("1.5")


@given(matrices())
def test_rank_matches_fraction_oracle(data):
    m, rows, _ = data
    assert m.rank() == frac_rank(rows)
    assert m.T.rank() == m.rank()


@given(matrices())
def test_kernel_is_annihilated_and_has_full_dimension(data):
    m, _, c = data
    k = m.kernel()
    assert k.shape == (c, c - m.rank())
    assert (m @ k).is_zero()
    assert k.rank() == k.ncols


@given(matrices(), st.data())
def test_solve_recovers_a_consistent_right_hand_side(data, draw):
    m, _, c = data
    x = M.from_rows([draw.draw(st.lists(small, min_size=2, max_size=2)) for _ in range(c)],
                    ncols=2) if c else M.zeros(0, 2)
    rhs = m @ x
    sol = m.solve(rhs)
    assert sol is not None and m @ sol == rhs


def test_solve_reports_inconsistency():
    m = M.from_rows([[1, 1], [2, 2]])
    assert m.solve(M.from_rows([[1], [3]])) is None


def test_inverse_and_rref():
    m = M.from_rows([[2, 1], [1, 1]])
    assert m @ m.inverse() == M.identity(2)
    r, piv = M.from_rows([[1, 2, 3], [2, 4, 7]]).rref()
    assert piv == [0, 2]
    assert r == M.from_rows([[1, 2, 0], [0, 0, 1]])
    with pytest.raises(ValueError):
        M.from_rows([[1, 2], [2, 4]]).inverse()


def test_kron_and_blocks():
    a = M.from_rows([[1, 2]])
    b = M.from_rows([[0], [1]])
    assert a.kron(b) == M.from_rows([[0, 0], [1, 2]])
    blk = M.block({(0, 0): a, (1, 1): b}, [1, 2], [2, 1])
    assert blk.to_lists() == [[1, 2, 0], [0, 0, 0], [0, 0, 1]]


def test_complex_rejects_nonzero_square():
    d = M.from_rows([[1]])
    with pytest.raises(ValueError):
        CochainComplex([1, 1, 1], [d, d])


def test_circle_cohomology_and_euler_characteristic():
    # cellular cochains of a circle with two vertices and two edges
    d0 = M.from_rows([[-1, 1], [-1, 1]])
    c = CochainComplex([2, 2], [d0])
    assert c.betti() == [1, 1]
    assert c.euler_characteristic() == 0
    dims, reps = cohomology(c)
    assert dims == [1, 1] and reps[0].shape == (2, 1)


def test_cone_detects_quasi_isomorphisms():
    c = CochainComplex([1, 1], [M.from_rows([[1]])])
    z = CochainComplex([0, 0], [M.zeros(0, 0)])
    assert is_quasi_iso(ChainMap(c, z, {}))
    d0 = M.from_rows([[-1, 1], [-1, 1]])
    circle = CochainComplex([2, 2], [d0])
    assert is_quasi_iso(ChainMap.identity(circle))
    assert not is_quasi_iso(ChainMap(circle, circle, {0: M.zeros(2, 2), 1: M.zeros(2, 2)}))
    assert cone(ChainMap.identity(circle)).is_acyclic()


def test_induced_map_of_scaling_is_scalar():
    d0 = M.from_rows([[-1, 1], [-1, 1]])
    circle = CochainComplex([2, 2], [d0])
    phi = ChainMap(circle, circle, {0: M.identity(2).scale(3), 1: M.identity(2).scale(3)})
    assert induced_map(phi, 1) == M.from_rows([[3]])


@given(st.integers(1, 3), st.integers(1, 3))
def test_total_complex_of_anticommuting_square(a, b):
    # Koszul-type double complex of two identity maps is acyclic
    spaces = {(0, 0): a, (1, 0): a, (0, 1): a, (1, 1): a}
    dh = {(0, 0): M.identity(a), (0, 1): M.identity(a)}
    dv = {(0, 0): M.identity(a), (1, 0): -M.identity(a)}
    tot, _ = total_complex(double_complex(spaces, dh, dv))
    assert tot.is_acyclic()
    assert tot.dims == [a, 2 * a, a]
