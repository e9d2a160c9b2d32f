"""Acceptance suite: one PASS/FAIL line per criterion, exact checks only."""

import json
import random
import time

import numpy as np
import pytest

from vhsjet import fixtures
from vhsjet.cech_ks import abelian_model, annulus_ksform, annulus_model, validate_model
from vhsjet.cech_ks.classes import kappa2_tilde
from vhsjet.cech_ks.model import Family
from vhsjet.cech_ks.ops import contraction_identity_check, deformation_eq_check
from vhsjet.cech_ks.realize import cochain_vs_abstract, griffiths_check
from vhsjet.cli import _expectations, main
from vhsjet.exact_series import is_zero_array
from vhsjet.harness import (
    rand_vector,
    suite_lemmas,
    suite_prop1,
    suite_theorem2,
    suite_theorem5_6,
)

_reports: dict = {}


@pytest.fixture
def verdict(capsys):
    def emit(n: int, ok: bool, note: str = ""):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'}{'  ' + note if note else ''}")
        assert ok, note
    return emit


def timed(key, fn):
    if key not in _reports:
        t0 = time.perf_counter()
        rep = fn()
        _reports[key] = (rep, time.perf_counter() - t0)
    return _reports[key]


def statuses(rep, check):
    return [c["status"] for c in rep.checks if c["check"] == check]


def test_criterion_1_first_order_identities(verdict):
    rep, dt = timed("lemmas", lambda: suite_lemmas(seeds=range(1, 51)))
    n = len(statuses(rep, "lemma2"))
    ok = rep.ok and n >= 50 and dt < 30 and all(
        statuses(rep, k) and set(statuses(rep, k)) == {"ok"}
        for k in ("d2phi_symmetry", "lemma2", "lemma3_shift"))
    verdict(1, ok, f"50 seeded connections, {n} direction pairs, {len(rep.checks)} checks, {dt:.1f}s")


def test_criterion_2_second_fundamental_form(verdict):
    rep, dt = timed("prop1", lambda: suite_prop1(seeds=range(1, 51)))
    ok = rep.ok and statuses(rep, "worked_family_equals_M") == ["ok"] and \
        len(statuses(rep, "proposition1")) >= 50
    verdict(2, ok, f"{len(rep.checks)} checks, {dt:.1f}s")


def test_criterion_3_cochain_d2psi_vanishing(verdict):
    rep, dt = timed("t2", lambda: suite_theorem2("annulus", seeds=range(1, 4), D=6, N=3))
    zero = statuses(rep, "d2psi_zero_in_image") + statuses(rep, "d2psi_zero_theta_only")
    inv = [s for s in statuses(rep, "d2psi_boundary_invariance") if s != "skipped"]
    ok = rep.ok and zero and set(zero) == {"ok"} and inv and set(inv) == {"ok"} and dt < 60
    verdict(3, ok, f"annulus D=6 N=3: {len(zero)} zero cosets, {len(inv)} invariance checks, {dt:.1f}s")


def test_criterion_4_second_order_independence(verdict):
    reps = [timed(f"t56-{m}", lambda m=m: suite_theorem5_6(m))[0] for m in ("annulus", "abelian")]
    ok = True
    counts = {}
    for rep in reps:
        ok &= rep.ok
        for k in ("theta_term_level", "d2psibar_equal", "ii_equal", "d2phi_equal"):
            st = [s for s in statuses(rep, k) if s != "skipped"]
            counts[k] = counts.get(k, 0) + len(st)
            ok &= bool(st) and set(st) == {"ok"}
    verdict(4, ok, ", ".join(f"{k}={v}" for k, v in counts.items()))


def test_criterion_5_griffiths(verdict):
    doc = fixtures.load("annulus")
    model, ks = doc["object"], doc["ksform"]
    certs = [griffiths_check(model, ks, l) for l in range(ks.s)]
    verdict(5, all(c.ok for c in certs), "annulus fixture, 1x1 graded blocks")


def _integrity(model, ks) -> bool:
    ok = validate_model(model).ok
    for n in range(2 * model.dim_X + 1):
        D0, D1 = model.total_d(n), model.total_d(n + 1)
        if D0.size and D1.size:
            ok &= is_zero_array(D1 @ D0)
    for sh in model.sheaves:
        for q in range(2):
            if model.dim(q + 2, sh) and model.dim(q, sh):
                ok &= is_zero_array(model.delta(q + 1, sh) @ model.delta(q, sh))
    rng = random.Random(model.name)
    for a in (0, 1):
        if model.dim(a, "T"):
            alpha = rand_vector(rng, model.dim(a, "T"))
            for n in range(model.weight + 1):
                ok &= contraction_identity_check(model, alpha, a, rand_vector(rng, model.total_dim(n)), n).ok
    fam = Family(model, ks)
    ok &= deformation_eq_check(fam).ok
    ok &= all(kappa2_tilde(fam, k, l).is_cocycle() for k in range(ks.s) for l in range(ks.s))
    return bool(ok)


def test_criterion_6_integrity(verdict, annulus, torus):
    ok = _integrity(*annulus) and _integrity(*torus)
    doc = fixtures.load("annulus")
    ranks = _expectations(doc["object"], doc["expectations"])
    ok = ok and ranks.ok and doc["expectations"] == {"h1_theta": 1, "h10": 1, "h01": 1}
    verdict(6, ok, f"ranks {ranks.details['computed']}")


def test_criterion_7_cross_oracle(verdict):
    m = annulus_model(3)
    results = [cochain_vs_abstract(m, annulus_ksform(m, 3, a), 0, 0).ok for a in (0, 1, 3, "1/2")]
    doc = fixtures.load("annulus")
    results.append(cochain_vs_abstract(doc["object"], doc["ksform"], 0, 0).ok)
    verdict(7, all(results), f"{len(results)} annulus KS forms")


def _cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_criterion_8_determinism_and_controls(verdict, capsys):
    a = _cli(capsys, "verify", "lemmas", "--seeds", "1..5", "--json")
    b = _cli(capsys, "verify", "lemmas", "--seeds", "1..5", "--json")
    c = _cli(capsys, "verify", "theorem5-6", "--seeds", "1", "--json")
    d = _cli(capsys, "verify", "theorem5-6", "--seeds", "1", "--json")
    ok = a == b and c == d and a[0] == 0
    controls = [ctl for rep, _ in _reports.values() for ctl in rep.controls]
    for rep in (suite_lemmas(seeds=[1]), suite_prop1(seeds=[1]), suite_theorem2("annulus", seeds=[1])):
        controls += rep.controls
    ok &= bool(controls) and all(ctl["status"] == "ok" for ctl in controls)
    # broken inputs through the CLI: a failed check, never a crash or a failed identity
    code, out, _ = _cli(capsys, "check", str(fixtures.fixture_path("non-flat")), "--json")
    ok &= code == 1 and json.loads(out)["checks"][0]["check"] == "integrable"
    code, out, _ = _cli(capsys, "compute", str(fixtures.fixture_path("non-transversal")), "dphi",
                        "--xi", "1", "--json")
    ok &= code != 0 and json.loads(out)["error"]["kind"] == "NotTransversal"
    code, out, _ = _cli(capsys, "compute", str(fixtures.fixture_path("non-flat")), "ii",
                        "--xi", "1,0", "--zeta", "0,1", "--p", "0", "--json")
    ok &= code != 0 and json.loads(out)["error"]["kind"] == "NotFlat"
    verdict(8, bool(ok), f"{len(controls)} negative controls")
