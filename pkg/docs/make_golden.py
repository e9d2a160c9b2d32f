"""Regenerate the golden examples referenced from format.md.

    python3 docs/make_golden.py          # rewrite docs/golden/
"""

import io
import json
from contextlib import redirect_stdout
from pathlib import Path

from vhsjet import fixtures
from vhsjet.cech_ks import annulus_ksform, annulus_model
from vhsjet.cech_ks.io import dumps, model_file
from vhsjet.cli import main

HERE = Path(__file__).with_name("golden")


def _cli(*argv) -> str:
    buf = io.StringIO()
    with redirect_stdout(buf):
        main(list(argv))
    return buf.getvalue()


def golden() -> dict[str, str]:
    m = annulus_model(1)
    cech = model_file("cech", 1, 1, m.to_json(), annulus_ksform(m, 1).to_json(),
                      "Annulus w ~ 2w with Laurent window |k| <= 1; theta(t) = (1 + 2t) w d/dw on V_b.")
    cech["expectations"] = {"h1_theta": 1, "h10": 1, "h01": 1}
    conn = fixtures.fixture_path("rank3-n-plus-tm")
    return {
        "connection.json": fixtures.build("rank3-n-plus-tm"),
        "cech.json": dumps(cech),
        "check-report.json": _cli("check", str(conn), "--json").replace(str(conn), conn.name),
        "compute-ii.json": _cli("compute", str(conn), "ii", "--xi", "1", "--zeta", "1", "--p", "0"),
        "verify-report.json": _cli("verify", "lemmas", "--seed", "1", "--json"),
        "error.json": _cli("compute", str(fixtures.fixture_path("non-transversal")), "dphi",
                           "--xi", "1", "--json"),
    }


if __name__ == "__main__":
    HERE.mkdir(exist_ok=True)
    for name, text in golden().items():
        json.loads(text)
        (HERE / name).write_text(text)
        print(name)
