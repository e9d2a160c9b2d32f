"""Shipped ModelFile fixtures: how each one is built, where they live, and
how to load them.

The JSON files under ``fixtures/`` are generated once by :func:`build_all`
and then frozen; a test regenerates them and compares byte for byte.
``VHSJET_FIXTURES`` points the loader at another directory.
"""

from __future__ import annotations

import os
from pathlib import Path

from .cech_ks.io import connection_to_json, dumps, model_file, parse_model_file
from .exact_series import ONE, QI, SeriesMatrix, qi_zeros

FIXTURE_ENV = "VHSJET_FIXTURES"


def fixture_dir() -> Path:
    env = os.environ.get(FIXTURE_ENV)
    return Path(env) if env else Path(__file__).with_name("fixtures")


def _const_connection_file(levels, s, N, jets: list[dict], description: str) -> dict:
    from .filtered_connection import Connection, FilteredModule

    r = len(levels)
    mats = tuple(SeriesMatrix(s, N, (r, r), j) for j in jets)
    c = Connection(FilteredModule(tuple(levels), s, N), mats)
    return model_file("connection", s, N, connection_to_json(c), description=description)


def _rank3_n():
    Nm = qi_zeros((3, 3))
    Nm[1, 0] = ONE
    Nm[2, 1] = ONE
    return Nm


def _annulus():
    from .cech_ks import annulus_ksform, annulus_model

    m = annulus_model(3)
    ks = annulus_ksform(m, 3)
    doc = model_file("cech", 1, 3, m.to_json(), ks.to_json(),
                     "Annulus w ~ 2w with Laurent window |k| <= 3; theta(t) = (1 + 2t) w d/dw on V_b.")
    doc["expectations"] = {"h1_theta": 1, "h10": 1, "h01": 1}
    return doc


def _abelian():
    from .cech_ks import abelian_model
    from .cech_ks.classes import theta_retract
    from .cech_ks.ops import potential_ksform

    m = abelian_model("torus", 2)
    H = theta_retract(m).H[1]
    ks = potential_ksform(m, 2, 2, {(1, 0): H[0], (0, 1): H[1] + H[0], (2, 0): H[1],
                                    (1, 1): H[2] * QI(3)})
    doc = model_file("cech", 2, 2, m.to_json(), ks.to_json(),
                     "Constant-coefficient abelian model on a 7-vertex torus nerve, g = 2, weight 2.")
    doc["expectations"] = {"h1_theta": 4, "h0_theta": 2}
    return doc


def _non_flat():
    A1, A2 = qi_zeros((2, 2)), qi_zeros((2, 2))
    A1[0, 1] = ONE
    A2[1, 0] = ONE
    return _const_connection_file((0, 0), 2, 1, [{(0, 0): A1}, {(0, 0): A2}],
                                  "Negative fixture: [A_1, A_2] != 0.")


def _non_transversal():
    A = qi_zeros((3, 3))
    A[2, 0] = ONE
    return _const_connection_file((2, 1, 0), 1, 1, [{(0,): A}],
                                  "Negative fixture: an entry drops the level by two.")


BUILDERS = {
    "annulus": _annulus,
    "abelian-torus": _abelian,
    "rank3-n": lambda: _const_connection_file(
        (2, 1, 0), 1, 2, [{(0,): _rank3_n()}], "Constant nilpotent A = N on levels (2, 1, 0)."),
    "rank3-n-plus-tm": lambda: _const_connection_file(
        (2, 1, 0), 1, 2, [{(0,): _rank3_n(), (1,): _m_matrix()}],
        "A = N + t M with M of degree -2; II equals the class of M. "
        "Transversal at t = 0 only, so `check` reports the order-t level drop."),
    "non-flat": _non_flat,
    "non-transversal": _non_transversal,
}


def _m_matrix():
    M = qi_zeros((3, 3))
    M[2, 0] = ONE
    return M


def build(name: str) -> str:
    return dumps(BUILDERS[name]())


def build_all(directory: Path | None = None) -> list[Path]:
    directory = directory or Path(__file__).with_name("fixtures")
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name in BUILDERS:
        p = directory / f"{name}.json"
        p.write_text(build(name))
        out.append(p)
    return out


def list_fixtures() -> list[str]:
    d = fixture_dir()
    return sorted(p.stem for p in d.glob("*.json")) if d.is_dir() else []


def fixture_path(name: str) -> Path:
    return fixture_dir() / f"{name}.json"


def load(name: str, strict: bool = True) -> dict:
    return parse_model_file(fixture_path(name).read_text(), strict)
