import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from vhsjet.exact_series import QI, qi_array, qi_zeros
from vhsjet.linalg import SpanReducer, cohomology, nullspace, rank, rref, solve

ints = st.integers(-3, 3)


def mat(r, c):
    return st.lists(ints, min_size=r * c, max_size=r * c).map(lambda xs: qi_array(xs, (r, c)))


def test_rref_known():
    R, piv = rref(qi_array([[2, 4], [1, 3]]))
    assert piv == [0, 1]
    assert np.array_equal(R, qi_array([[1, 0], [0, 1]]))


@settings(max_examples=50)
@given(mat(3, 4))
def test_rank_nullity(M):
    ns = nullspace(M)
    assert rank(M) + len(ns) == 4
    for v in ns:
        assert not any(M @ v)


@settings(max_examples=50)
@given(mat(3, 3), st.lists(ints, min_size=3, max_size=3))
def test_solve_consistent(M, x):
    b = M @ qi_array(x)
    y = solve(M, b)
    assert y is not None and np.array_equal(M @ y, b)


def test_solve_inconsistent():
    M = qi_array([[1, 0], [0, 0]])
    assert solve(M, qi_array([0, 1])) is None


def test_span_reducer_membership_and_express():
    red = SpanReducer(3, [qi_array([1, 1, 0]), qi_array([0, 1, 1])])
    v = qi_array([1, 2, 1])
    assert red.contains(v)
    assert not red.contains(qi_array([0, 0, 1]))
    assert not any(red.reduce(v))


def test_cohomology_of_circle_cochains():
    # two vertices, two edges between them: H^0 = H^1 = 1
    d0 = qi_array([[-1, 1], [-1, 1]])
    reps, _ = cohomology(qi_zeros((2, 0)), d0)
    assert len(reps) == 1
    reps1, _ = cohomology(d0, qi_zeros((0, 2)))
    assert len(reps1) == 1
