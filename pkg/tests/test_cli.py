import json

import pytest

from vhsjet import fixtures
from vhsjet.cli import main, parse_seeds


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def fx(name):
    return str(fixtures.fixture_path(name))


def test_check_exit_codes(capsys):
    assert run(capsys, "check", fx("annulus"))[0] == 0
    assert run(capsys, "check", fx("rank3-n"))[0] == 0
    code, out, _ = run(capsys, "check", fx("non-flat"), "--json")
    assert code == 1 and json.loads(out)["status"] == "fail"
    assert run(capsys, "check", fx("non-transversal"))[0] == 1


def test_parse_error_reports_position(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(fixtures.fixture_path("rank3-n").read_text()[:40])
    code, _, err = run(capsys, "check", str(p))
    assert code == 2
    assert "error.kind=ParseError" in err and "line=" in err


def test_compute_dphi_is_n(capsys):
    code, out, _ = run(capsys, "compute", fx("rank3-n"), "dphi", "--xi", "1")
    assert code == 0
    res = json.loads(out)["result"]
    assert res == json.loads(run(capsys, "compute", fx("rank3-n"), "dphi", "--xi", "1")[1])["result"]
    code, out, _ = run(capsys, "compute", fx("rank3-n"), "ii", "--xi", "1", "--zeta", "1", "--p", "1")
    assert code == 0


def test_compute_kappa2(capsys):
    code, out, _ = run(capsys, "compute", fx("abelian-torus"), "kappa2", "--k", "1", "--l", "2")
    assert code == 0 and "pairs" in json.loads(out)["result"]


def test_fixtures_list_dump_and_override(tmp_path, capsys, monkeypatch):
    code, out, _ = run(capsys, "fixtures", "list")
    assert code == 0 and "annulus" in out.split()
    code, out, _ = run(capsys, "fixtures", "dump", "rank3-n")
    assert out == fixtures.fixture_path("rank3-n").read_text()
    (tmp_path / "mine.json").write_text(out)
    monkeypatch.setenv(fixtures.FIXTURE_ENV, str(tmp_path))
    assert run(capsys, "fixtures", "list")[1].split() == ["mine"]
    assert run(capsys, "fixtures", "dump", "annulus")[0] != 0


def test_verify_deterministic(capsys):
    a = run(capsys, "verify", "lemmas", "--seeds", "7", "--json")
    b = run(capsys, "verify", "lemmas", "--seeds", "7", "--json")
    assert a[0] == 0 and a[1] == b[1]


def test_gen_round_trips_through_check(tmp_path, capsys):
    code, out, _ = run(capsys, "gen", "--seed", "3", "--r", "3", "--s", "1", "--N", "2")
    assert code == 0
    p = tmp_path / "g.json"
    p.write_text(out)
    assert run(capsys, "check", str(p))[0] == 0


def test_parse_seeds():
    assert parse_seeds("1..4") == [1, 2, 3, 4]
    assert parse_seeds("1,4,7") == [1, 4, 7]
