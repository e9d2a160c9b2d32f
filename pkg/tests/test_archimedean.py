import numpy as np

from vhsjet.archimedean import (
    ArModule,
    d2_psi,
    d2_psi_bar,
    d_psi,
    d_psi_bar,
    drop_T,
    insert_T,
    lemma2_check,
    proposition1_check,
    window_stability_check,
)
from vhsjet.exact_series import QI, SeriesMatrix, TruncatedSeries, qi_array
from vhsjet.filtered_connection import Connection, FilteredModule, d_phi
from vhsjet.harness import gen_flat_transversal, worked_family

N3 = qi_array([[0, 0, 0], [1, 0, 0], [0, 1, 0]])


def const_n():
    return Connection(FilteredModule((2, 1, 0), 1, 2), (SeriesMatrix.constant(1, 2, N3),))


def test_insert_drop_round_trip():
    m = FilteredModule((2, 1, 0), 1, 2)
    x = qi_array([1, 2, 3])
    y = insert_T(m, x, 0)
    assert np.array_equal(drop_T(m, y, 0), x)


def test_dpsibar_equals_dphi():
    c = const_n()
    assert np.array_equal(d_psi_bar(c, 0), d_phi(c, 0))


def test_d2psibar_of_constant_n_is_n_squared():
    # degree -2 block of nabla^2 = N^2 for constant A = N
    c = const_n()
    assert np.array_equal(d2_psi_bar(c, 0, 0), N3 @ N3)


def test_dpsi_coset_lands_in_level_minus_one():
    c = const_n()
    am = ArModule(c.module)
    d = d_psi(c, 0, am)
    assert not d.is_zero()
    for (a, j), row in zip(am.coords(), d.reduced()):
        if any(row):
            assert am.level(a, j) == -1


def test_archimedean_identities_on_generated_corpus():
    for seed in range(6):
        c = gen_flat_transversal({"r": 5, "s": 1 + seed % 2, "N": 2}, seed)
        for k in range(c.s):
            for l in range(c.s):
                assert lemma2_check(c, k, l).ok
                assert proposition1_check(c, k, l).ok


def test_ii_congruence_worked_family_both_sides():
    c, M = worked_family()
    cert = proposition1_check(c, 0, 0)
    assert cert.ok
    assert not cert.details["rhs"].is_zero()


def test_window_stability():
    c = gen_flat_transversal({"r": 4, "s": 1, "N": 2, "levels": [3, 2, 1, 0]}, 3)
    assert window_stability_check(c, 0, 0).ok


def test_d2psi_of_constant_n():
    c = const_n()
    am = ArModule(c.module)
    d = d2_psi(c, 0, 0, am)
    # e_0 T^2 goes to N^2 e_0 T^2 = e_2 T^2 at level -2: nonzero modulo F^0
    col = d.domain.index((0, 2))
    red = d.reduced()[:, col]
    assert any(red)
