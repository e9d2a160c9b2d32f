import json
import random

import numpy as np
import pytest

from vhsjet.cech_ks import abelian_model, annulus_ksform, annulus_model, validate_model
from vhsjet.cech_ks.builtins import annulus_basis, annulus_expected_connection
from vhsjet.cech_ks.classes import (
    KSecondClass,
    boundary_of,
    classes_equal,
    cone_cohomology_class,
    kappa2_tilde,
    theta_retract,
)
from vhsjet.cech_ks.io import dumps, model_from_json, model_to_json, parse_model_file
from vhsjet.cech_ks.model import Family
from vhsjet.cech_ks.ops import contraction_identity_check, deformation_eq_check, lie_derivative
from vhsjet.cech_ks.realize import cochain_vs_abstract, graded_cohomology, griffiths_check, realize_vhs
from vhsjet.errors import DeformationEqFailed, ParseError, SchemaError
from vhsjet.exact_series import is_zero_array, qi_zeros
from vhsjet.harness import rand_vector


def test_builtins_validate(annulus, torus):
    for model, _ in (annulus, torus):
        assert validate_model(model).ok
    assert validate_model(torus[0], "extended").ok


def test_annulus_extended_identity_inside_window():
    # the truncated Laurent window breaks i_[u,v] = [L_u, i_v] only when a product leaves it
    D = 3
    m = annulus_model(D)
    ns = list(range(-D, D + 1))
    assert not validate_model(m, "extended").ok
    for Q in m.simplices:
        B, I = m.bracket_tensor(Q), m.iota_tensor(Q, 1)
        Lp, Lq = m.lie_matrices(Q, 1), m.lie_matrices(Q, 0)
        for u in range(len(B[0])):
            for v in range(len(B[0])):
                iuv = np.einsum("k,akb->ab", B[:, u, v], I)
                rhs = Lq[u] @ I[:, v, :] - I[:, v, :] @ Lp[u]
                a, b = ns[u % len(ns)], ns[v % len(ns)]
                for k in range(I.shape[2]):
                    e = ns[k % len(ns)]
                    if all(-D <= x <= D for x in (a + b, a + e, b + e, a + b + e)):
                        assert np.array_equal(iuv[:, k], rhs[:, k])


def test_corrupted_model_names_simplex(annulus):
    doc = model_to_json(annulus[0])
    bad = model_from_json(json.loads(json.dumps(doc)))
    key = next(iter(bad.d))
    M = bad.d[key].copy()
    if M.size:
        M.flat[0] = M.flat[0] + 1
        bad.d[key] = M
        cert = validate_model(bad)
        assert not cert.ok


def test_differentials_square_to_zero(annulus, torus):
    for model, _ in (annulus, torus):
        for n in range(model.dim_X * 2):
            D0, D1 = model.total_d(n), model.total_d(n + 1)
            if D0.size and D1.size:
                assert is_zero_array(D1 @ D0)
        for q in range(2):
            if model.dim(q + 2, "T"):
                assert is_zero_array(model.delta(q + 1, "T") @ model.delta(q, "T"))


@pytest.mark.parametrize("which", ["annulus", "torus"])
def test_contraction_identity(which, request):
    model, _ = request.getfixturevalue(which)
    rng = random.Random(which)
    for a in (0, 1):
        if not model.dim(a, "T"):
            continue
        alpha = rand_vector(rng, model.dim(a, "T"))
        for n in range(model.weight + 1):
            w = rand_vector(rng, model.total_dim(n))
            assert contraction_identity_check(model, alpha, a, w, n).ok


def test_lie_derivative_commutes_with_total_differential(annulus):
    model, _ = annulus
    v = theta_retract(model).H[0][0]
    rng = random.Random(5)
    n = 1
    w = rand_vector(rng, model.total_dim(n))
    lhs = lie_derivative(model, v, model.total_d(n) @ w, n + 1).at_zero()
    rhs = model.total_d(n) @ lie_derivative(model, v, w, n).at_zero()
    assert np.array_equal(lhs, rhs)


def test_deformation_equation(annulus, torus):
    for model, ks in (annulus, torus):
        assert deformation_eq_check(Family(model, ks)).ok


def test_kappa2_tilde_is_cocycle(torus):
    model, ks = torus
    fam = Family(model, ks)
    for k in range(ks.s):
        for l in range(ks.s):
            assert kappa2_tilde(fam, k, l).is_cocycle()


def test_annulus_ranks():
    m = annulus_model(3)
    assert theta_retract(m).hdim(1) == 1
    assert len(graded_cohomology(m, 1, 1)[0]) == 1
    assert len(graded_cohomology(m, 1, 0)[0]) == 1


def test_annulus_realized_connection_matches_hand_derivation(annulus):
    model, ks = annulus
    _, c = realize_vhs(model, ks, basis=annulus_basis(model))
    assert c.mats[0] == annulus_expected_connection(ks.N - 1)


def test_griffiths(annulus, torus):
    for model, ks in (annulus, torus):
        for l in range(ks.s):
            assert griffiths_check(model, ks, l).ok


def test_cochain_vs_abstract_annulus(annulus):
    model, ks = annulus
    assert cochain_vs_abstract(model, ks, 0, 0).ok


def test_reduced_cone_agrees_with_full_cone(annulus):
    model, ks = annulus
    k2 = kappa2_tilde(Family(model, ks), 0, 0)
    rng = random.Random(11)
    for _ in range(3):
        xp = [(rng.choice([1, 2, -3]) * k2.pairs[0][0], 0, rand_vector(rng, model.dim(0, "T")),
               1, rand_vector(rng, model.dim(1, "T")))]
        b = boundary_of(model, xp, rand_vector(rng, model.dim(0, "T")))
        c2 = k2 + b
        assert classes_equal(k2, c2)
        assert np.array_equal(cone_cohomology_class(k2), cone_cohomology_class(c2))
    # a non-trivial change of theta by a cocycle outside the boundaries
    H = theta_retract(model).H[1]
    other = KSecondClass(model, k2.pairs, k2.theta + H[0])
    assert not classes_equal(k2, other)
    assert not np.array_equal(cone_cohomology_class(k2), cone_cohomology_class(other))


def test_bad_deformation_equation_raises(torus):
    from vhsjet.harness import _bad_leading

    model, _ = torus
    with pytest.raises(DeformationEqFailed):
        kappa2_tilde(Family(model, _bad_leading(model)), 0, 0)


def test_model_file_round_trip(annulus):
    model, ks = annulus
    from vhsjet.cech_ks.io import model_file

    text = dumps(model_file("cech", 1, 3, model.to_json(), ks.to_json()))
    doc = parse_model_file(text)
    assert dumps(model_file("cech", 1, 3, doc["object"].to_json(), doc["ksform"].to_json())) == text


def test_strict_and_lax_parsing(annulus):
    from vhsjet.cech_ks.io import model_file

    model, _ = annulus
    doc = model_file("cech", 1, 3, model.to_json())
    doc["unexpected"] = 1
    text = dumps(doc)
    with pytest.raises(SchemaError):
        parse_model_file(text, strict=True)
    assert parse_model_file(text, strict=False)["warnings"]
    with pytest.raises(ParseError) as exc:
        parse_model_file(text[: len(text) // 2])
    assert exc.value.details.get("line")
