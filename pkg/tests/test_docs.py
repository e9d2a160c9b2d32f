import json
import runpy
from pathlib import Path

import pytest

from vhsjet.cech_ks.io import parse_model_file

DOCS = Path(__file__).resolve().parents[1] / "docs"


@pytest.fixture(scope="module")
def golden():
    return runpy.run_path(str(DOCS / "make_golden.py"))["golden"]()


def test_golden_files_are_current(golden):
    for name, text in golden.items():
        assert (DOCS / "golden" / name).read_text() == text, name


def test_golden_model_files_parse():
    for name in ("connection.json", "cech.json"):
        doc = parse_model_file((DOCS / "golden" / name).read_text())
        assert doc["kind"] == name.split(".")[0]
    err = json.loads((DOCS / "golden" / "error.json").read_text())
    assert err["error"]["kind"] == "NotTransversal"


def test_golden_cech_expectations_hold():
    from vhsjet.cli import run_check

    doc = parse_model_file((DOCS / "golden" / "cech.json").read_text())
    assert all(c.ok for c in run_check(doc))
