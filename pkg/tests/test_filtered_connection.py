import numpy as np
import pytest

from vhsjet.errors import MismatchedRing, NotFlat, NotTransversal
from vhsjet.exact_series import QI, SeriesMatrix, TruncatedSeries, qi_array, qi_zeros
from vhsjet.filtered_connection import (
    Connection,
    CosetMap,
    FilteredModule,
    check_integrable,
    check_transversal,
    d2_phi,
    d_phi,
    endomorphism_coset,
    gauge_transform,
    lemma3_shift_check,
    second_fundamental_form,
    series_inverse,
)
from vhsjet.harness import gen_flat_transversal, non_flat_connection, non_transversal_connection, worked_family

N3 = qi_array([[0, 0, 0], [1, 0, 0], [0, 1, 0]])


def const(levels, *mats, N=2):
    s = len(mats)
    return Connection(FilteredModule(levels, s, N), tuple(SeriesMatrix.constant(s, N, qi_array(M)) for M in mats))


def test_degree_matrix_convention():
    m = FilteredModule((2, 1, 0), 1, 1)
    assert m.degree_matrix()[2, 0] == -2
    assert m.F(1) == [0, 1]


def test_dphi_of_constant_nilpotent_is_n():
    c = const((2, 1, 0), N3)
    assert np.array_equal(d_phi(c, 0), N3)
    assert np.array_equal(d_phi(c, [QI(2)]), N3 * QI(2))


def test_ii_of_constant_n_is_zero():
    c = const((2, 1, 0), N3)
    assert second_fundamental_form(c, 0, 0).is_zero()


def test_ii_of_worked_family_is_class_of_m():
    c, M = worked_family()
    ii = second_fundamental_form(c, 0, 0)
    assert ii.equals(endomorphism_coset(c, M))
    assert not ii.is_zero()


def test_d2phi_hand_example():
    # levels (1, 0), A = [[0, 0], [t, 0]]: d_t^2 e_0 = e_1, not in F^1 + span{nabla F^1}
    t = TruncatedSeries.variable(1, 3, 0)
    A = SeriesMatrix.from_entries(1, 3, [[0, 0], [t, 0]])
    c = Connection(FilteredModule((1, 0), 1, 3), (A,))
    d = d2_phi(c, 0, 0, 1)
    assert not d.is_zero()
    assert np.array_equal(d.reduced()[:, 0], qi_array([0, 1]))
    assert not any(d_phi(c, 0).flat)


def test_d2phi_symmetric_on_generated():
    for seed in range(5):
        c = gen_flat_transversal({"r": 4, "s": 2, "N": 2}, seed)
        for p in set(c.module.levels):
            assert d2_phi(c, 0, 1, p).equals(d2_phi(c, 1, 0, p))


def test_integrability_and_transversality_certificates():
    bad = check_integrable(non_flat_connection())
    assert not bad.ok and bad.details["pair"] == [1, 2]
    cert = check_transversal(non_transversal_connection())
    assert not cert.ok and cert.details["level_drop"] == 2


def test_preconditions_raise():
    with pytest.raises(NotFlat):
        lemma3_shift_check(non_flat_connection(), 0, 1)
    with pytest.raises(NotTransversal):
        d_phi(non_transversal_connection(), 0)


def test_gauge_keeps_flatness_and_inverse_oracle():
    t = TruncatedSeries.variable(2, 2, 0)
    u = TruncatedSeries.variable(2, 2, 1)
    g = SeriesMatrix.from_entries(2, 2, [[1 + t, u], [0, 1 - t * u]])
    assert series_inverse(g) @ g == SeriesMatrix.identity(2, 2, 2)
    c = gauge_transform(const((1, 0), [[0, 0], [1, 0]], [[0, 0], [2, 0]]), g)
    assert check_integrable(c).ok


def test_coset_equality_ignores_denominator_representatives():
    e1 = qi_array([1, 0])
    a = CosetMap(qi_array([[1], [1]]), (e1,))
    b = CosetMap(qi_array([[5], [1]]), (e1 * QI(3),))
    assert a.equals(b)
    assert not a.equals(CosetMap(qi_array([[1], [2]]), (e1,)))


def test_ring_mismatch():
    m = FilteredModule((0,), 1, 2)
    with pytest.raises(MismatchedRing):
        Connection(m, (SeriesMatrix.zeros(1, 3, (1, 1)),))
