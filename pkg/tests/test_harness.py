import json

import pytest

from vhsjet.errors import SpecInfeasible
from vhsjet.filtered_connection import check_integrable, check_transversal, d_phi
from vhsjet.harness import (
    gen_flat_transversal,
    normalize_spec,
    random_spec,
    suite_lemmas,
    suite_prop1,
)


def test_generator_is_deterministic():
    spec = {"r": 4, "s": 2, "N": 2}
    assert gen_flat_transversal(spec, 9).mats == gen_flat_transversal(spec, 9).mats
    assert gen_flat_transversal(spec, 9).mats != gen_flat_transversal(spec, 10).mats
    assert random_spec(3, 1) == random_spec(3, 1)


@pytest.mark.parametrize("seed", range(8))
def test_generated_instances_are_certified(seed):
    c = gen_flat_transversal(random_spec(seed), seed)
    assert check_integrable(c).ok and check_transversal(c).ok


@pytest.mark.parametrize("spec", [
    {"r": 0, "s": 1, "N": 1},
    {"r": 3, "s": 2, "N": 1, "mode": "generic"},
    {"r": 3, "s": 2, "N": 2, "perturb": True},
    {"r": 3, "s": 1, "N": 1, "levels": [1, 0]},
    {"r": 3, "s": 1, "N": 1, "colour": "red"},
])
def test_infeasible_specs(spec):
    with pytest.raises(SpecInfeasible):
        normalize_spec(spec)


def test_zero_mode_gives_zero_differential():
    c = gen_flat_transversal({"r": 3, "s": 1, "N": 2, "mode": "zero"}, 1)
    assert not any(d_phi(c, 0).flat)


def test_reports_are_byte_deterministic_and_controls_pass():
    a = json.dumps(suite_lemmas(seeds=[4]).to_json(), sort_keys=True)
    b = json.dumps(suite_lemmas(seeds=[4]).to_json(), sort_keys=True)
    assert a == b
    rep = suite_prop1(seeds=[2])
    assert rep.ok
    assert rep.controls and all(c["status"] == "ok" for c in rep.controls)
    assert "timings" not in rep.to_json()
