import pytest

from vhsjet import fixtures


@pytest.mark.parametrize("name", sorted(fixtures.BUILDERS))
def test_shipped_fixture_is_reproducible(name):
    assert fixtures.build(name) == fixtures.fixture_path(name).read_text()


def test_fixtures_parse():
    for name in fixtures.BUILDERS:
        doc = fixtures.load(name)
        assert doc["kind"] in ("cech", "connection")
