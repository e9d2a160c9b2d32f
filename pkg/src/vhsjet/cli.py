"""Command-line front end: ``vhsjet check|compute|verify|gen|fixtures``.

Indices on the command line are 1-based.  Exit codes: 0 success, 1 a check
failed, otherwise the ``exit_code`` of the library error (see errors.py).
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

from gmpy2 import mpq

from . import harness
from .cech_ks.io import connection_to_json, dumps, model_file, parse_model_file
from .errors import ParseError, SchemaError, VhsError
from .exact_series import QI
from .filtered_connection import Certificate, _jsonable

COMPUTE = ("dphi", "d2phi", "dpsi", "dpsibar", "d2psi", "d2psibar", "ii",
           "kappa1", "kappa2", "obstruction")
SUITE_NAMES = ("lemmas", "prop1", "theorem2", "theorem5-6", "all")

_NUM = r"[+-]?\d+(?:/\d+)?"
_QI_RE = re.compile(rf"^(?:(?P<re>{_NUM}))?(?:(?P<im>[+-]?(?:\d+(?:/\d+)?)?)i)?$")


def parse_qi(text: str) -> QI:
    """'3', '-1/2', '2i', '1/2-3i', 'i'."""
    t = text.replace(" ", "")
    m = _QI_RE.match(t)
    if not t or not m:
        raise SchemaError(f"not a Gaussian rational: {text!r}")
    re_part = mpq(m.group("re")) if m.group("re") else mpq(0)
    im = m.group("im")
    if im is None:
        im_part = mpq(0)
    elif im in ("", "+"):
        im_part = mpq(1)
    elif im == "-":
        im_part = mpq(-1)
    else:
        im_part = mpq(im)
    return QI(re_part, im_part)


def parse_vector(text: str, s: int) -> list[QI]:
    v = [parse_qi(x) for x in text.split(",")]
    if len(v) != s:
        raise SchemaError(f"tangent vector needs {s} components, got {len(v)}")
    return v


def parse_seeds(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise SchemaError("empty seed list")
    return out


def _index(x: int | None, s: int, name: str) -> int:
    if x is None:
        raise SchemaError(f"--{name} is required")
    if not 1 <= x <= s:
        raise SchemaError(f"--{name} must lie in 1..{s}")
    return x - 1


def _read(path: str, strict: bool) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_model_file(text, strict)


# -- check -----------------------------------------------------------------------------


def run_check(doc: dict) -> list[Certificate]:
    from .filtered_connection import check_integrable, check_transversal

    certs = []
    if doc["kind"] == "connection":
        c = doc["object"]
        certs += [check_integrable(c), check_transversal(c)]
        return certs
    from .cech_ks import validate_model
    from .cech_ks.model import Family
    from .cech_ks.ops import deformation_eq_check

    model, ks = doc["object"], doc["ksform"]
    certs.append(validate_model(model))
    if certs[-1].ok and doc["expectations"]:
        certs.append(_expectations(model, doc["expectations"]))
    if ks is not None and certs[0].ok:
        certs.append(deformation_eq_check(Family(model, ks)))
        if certs[-1].ok and ks.N >= 1:
            _, c = _realize(model, ks)
            certs += [check_integrable(c), check_transversal(c)]
    return certs


def _expectations(model, expect: dict) -> Certificate:
    from .cech_ks.classes import theta_retract
    from .cech_ks.realize import graded_cohomology

    R = theta_retract(model)
    n = model.weight
    got = {}
    for key in expect:
        if key == "h1_theta":
            got[key] = R.hdim(1)
        elif key == "h0_theta":
            got[key] = R.hdim(0)
        elif re.fullmatch(r"h\d\d", key):
            p, q = int(key[1]), int(key[2])
            got[key] = len(graded_cohomology(model, p + q, p)[0])
        else:
            raise SchemaError(f"unknown expectation {key!r}")
    status = "ok" if got == expect else "fail"
    return Certificate("expectations", status, {"expected": expect, "computed": got})


def _realize(model, ks):
    from .cech_ks.builtins import annulus_basis
    from .cech_ks.realize import realize_vhs

    basis = annulus_basis(model) if model.meta.get("builtin") == "annulus" else None
    return realize_vhs(model, ks, basis=basis)


# -- compute -----------------------------------------------------------------------------


def run_compute(doc: dict, what: str, args) -> dict:
    from . import archimedean as ar
    from . import filtered_connection as fc

    if what in ("kappa1", "kappa2", "obstruction"):
        return _compute_cech(doc, what, args)
    if doc["kind"] == "cech":
        if doc["ksform"] is None:
            raise SchemaError(f"compute {what} on a Čech file needs a ksform block")
        _, c = _realize(doc["object"], doc["ksform"])
    else:
        c = doc["object"]
    s = c.s

    def vec(name):
        text = getattr(args, name)
        if text is None:
            raise SchemaError(f"--{name} is required for compute {what}")
        return parse_vector(text, s)

    if what == "dphi":
        return {"matrix": _jsonable(fc.d_phi(c, vec("xi")))}
    if what == "dpsibar":
        return {"matrix": _jsonable(ar.d_psi_bar(c, vec("xi")))}
    if what == "dpsi":
        return {"coset": ar.d_psi(c, vec("xi")).to_json()}
    if what == "d2phi":
        if args.p is None:
            raise SchemaError("--p (filtration level) is required for compute d2phi")
        return {"coset": fc.d2_phi(c, vec("zeta"), vec("xi"), args.p).to_json()}
    if what == "d2psi":
        return {"coset": ar.d2_psi(c, vec("zeta"), vec("xi")).to_json()}
    if what == "d2psibar":
        return {"matrix": _jsonable(ar.d2_psi_bar(c, vec("zeta"), vec("xi")))}
    if what == "ii":
        return {"coset": fc.second_fundamental_form(c, vec("zeta"), vec("xi")).to_json()}
    raise SchemaError(f"unknown computation {what!r}")


def _compute_cech(doc: dict, what: str, args) -> dict:
    from .cech_ks.classes import kappa1, kappa2_tilde, obstruction
    from .cech_ks.model import Family

    if doc["kind"] != "cech" or doc["ksform"] is None:
        raise SchemaError(f"compute {what} needs a Čech file with a ksform block")
    model, ks = doc["object"], doc["ksform"]
    if what == "kappa1":
        return _jsonable(kappa1(model, ks, _index(args.l, ks.s, "l")))
    k, l = _index(args.k, ks.s, "k"), _index(args.l, ks.s, "l")
    if what == "kappa2":
        return kappa2_tilde(Family(model, ks), k, l).to_json()
    return {"class": _jsonable(obstruction(model, ks.leading(k), ks.leading(l)))}


# -- verify ---------------------------------------------------------------------------------


def run_verify(suite: str, seeds: list[int] | None, instances: int, model: str,
               D: int, N: int) -> harness.Report:
    names = ["lemmas", "prop1", "theorem2", "theorem5-6"] if suite == "all" else [suite]
    reports = []
    for name in names:
        fn = harness.SUITES[name]
        if name in ("lemmas", "prop1"):
            kw = {"instances": instances}
            if seeds is not None:
                kw["seeds"] = seeds
        else:
            kw = {"choice": model, "D": D, "N": N}
            if seeds is not None:
                kw["seeds"] = seeds
        reports.append(fn(**kw))
    return reports[0] if len(reports) == 1 else harness.merge_reports("all", reports)


# -- gen -------------------------------------------------------------------------------


def run_gen(args) -> dict:
    spec = {"r": args.r, "s": args.s, "N": args.N}
    if args.levels:
        spec["levels"] = [int(x) for x in args.levels.split(",")]
    if args.perturb:
        spec["perturb"] = True
    c = harness.gen_flat_transversal(spec, args.seed)
    return model_file("connection", c.s, c.N, connection_to_json(c),
                      description=f"generated: seed {args.seed}, spec {dumps(spec).strip()}")


# -- main ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vhsjet", description="Exact jets of variations of Hodge structure.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--json", action="store_true", help="print the full JSON report")
        mode = p.add_mutually_exclusive_group()
        mode.add_argument("--strict", dest="strict", action="store_true", default=True,
                          help="reject unknown fields (default)")
        mode.add_argument("--lax", dest="strict", action="store_false",
                          help="warn about unknown fields instead")

    p = sub.add_parser("check", help="validate a ModelFile and run its certificates")
    p.add_argument("path")
    common(p)

    p = sub.add_parser("compute", help="compute one invariant from a ModelFile")
    p.add_argument("path")
    p.add_argument("what", choices=COMPUTE)
    p.add_argument("--xi", help="tangent vector, comma separated (e.g. 1,0)")
    p.add_argument("--zeta", help="second tangent vector for second-order maps")
    p.add_argument("--p", type=int, help="filtration level for d2phi")
    p.add_argument("--k", type=int, help="1-based coordinate index")
    p.add_argument("--l", type=int, help="1-based coordinate index")
    common(p)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=SUITE_NAMES)
    p.add_argument("--seeds", help="e.g. 1..50 or 1,4,7")
    p.add_argument("--seed", type=int, help="single seed (same as --seeds N)")
    p.add_argument("--instances", type=int, default=1, help="instances per seed")
    p.add_argument("--model", default="annulus", choices=("annulus", "abelian"))
    p.add_argument("--D", type=int, default=3, help="annulus Laurent window half-width")
    p.add_argument("--N", type=int, default=3, help="KS-form truncation order")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings")
    common(p)

    p = sub.add_parser("gen", help="emit a generated flat transversal connection")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--levels", help="comma separated Hodge levels")
    p.add_argument("--perturb", action="store_true")
    common(p)

    p = sub.add_parser("fixtures", help="list or print shipped fixtures")
    p.add_argument("action", choices=("list", "dump"))
    p.add_argument("name", nargs="?")
    common(p)
    return ap


def _emit(obj: dict, as_json: bool, text: str | None = None):
    sys.stdout.write(dumps(obj) if as_json or text is None else text + "\n")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except VhsError as exc:
        if args.json:
            sys.stdout.write(dumps({"error": exc.to_json()}))
        else:
            where = "".join(f" {k}={v}" for k, v in sorted(exc.details.items()))
            sys.stderr.write(f"error.kind={exc.kind}: {exc}{where}\n")
        return exc.exit_code


def _dispatch(args) -> int:
    from . import fixtures

    if args.cmd == "check":
        doc = _read(args.path, args.strict)
        certs = run_check(doc)
        ok = all(c.ok for c in certs)
        rep = {"path": Path(args.path).name, "kind": doc["kind"], "warnings": doc["warnings"],
               "checks": [c.to_json() for c in certs], "status": "ok" if ok else "fail"}
        lines = [f"{c.check}: {c.status}" for c in certs] + doc["warnings"]
        _emit(rep, args.json, "\n".join(lines))
        return 0 if ok else 1
    if args.cmd == "compute":
        doc = _read(args.path, args.strict)
        res = run_compute(doc, args.what, args)
        _emit({"compute": args.what, "result": res}, True)
        return 0
    if args.cmd == "verify":
        seeds = parse_seeds(args.seeds) if args.seeds else ([args.seed] if args.seed is not None else None)
        rep = run_verify(args.suite, seeds, args.instances, args.model, args.D, args.N)
        summ = rep.summary()
        text = f"{rep.suite}: {summ['status']} ({summ['checks']} checks, {summ['by_status']}, " \
               f"{summ['controls']} negative controls)"
        _emit(rep.to_json(timings=args.timings), args.json, text)
        return 0 if rep.ok else 1
    if args.cmd == "gen":
        _emit(run_gen(args), True)
        return 0
    if args.cmd == "fixtures":
        if args.action == "list":
            names = fixtures.list_fixtures()
            _emit({"fixtures": names, "directory": str(fixtures.fixture_dir())}, args.json,
                  "\n".join(names))
            return 0
        if not args.name:
            raise SchemaError("fixtures dump needs a fixture name")
        path = fixtures.fixture_path(args.name)
        if not path.is_file():
            raise SchemaError(f"no fixture named {args.name!r}", available=fixtures.list_fixtures())
        sys.stdout.write(path.read_text())
        return 0
    raise SchemaError(f"unknown command {args.cmd!r}")


if __name__ == "__main__":
    sys.exit(main())
