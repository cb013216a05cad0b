import json

import pytest

from gnvar.sampling import SplitMix64, box_points, random_config_strings
from gnvar.scenario import (BUNDLED, DEFAULT_TOLERANCES, SUITES, ScenarioError, ScenarioParseError,
                            load_scenario, parse_scenario, read_scenario_bytes)

from _support import FLAT_THETA, ZERO_OMEGA, ZERO_PSI


def _doc(**over):
    doc = {
        "name": "t",
        "constants": {"m": 1.0},
        "fields": {"theta": list(FLAT_THETA), "omega": list(ZERO_OMEGA), "psi": list(ZERO_PSI)},
        "automorphism": {"mode": "kosmann", "xi": ["1", "0", "0", "0"]},
        "sampling": {"lo": [-1] * 4, "hi": [1] * 4, "points": 3, "seed": 1},
    }
    doc.update(over)
    return doc


def test_splitmix_reference_stream():
    # published reference values for seed 0
    r = SplitMix64(0)
    assert [r.next_u64() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4,
                                                0x06C45D188009454F]


def test_box_points_deterministic_and_bounded():
    a = box_points(SplitMix64(9), (-1, 0, 2, 3), (1, 1, 4, 3.5), 50)
    b = box_points(SplitMix64(9), (-1, 0, 2, 3), (1, 1, 4, 3.5), 50)
    assert a == b and len(a) == 50
    assert all(-1 <= p[0] < 1 and 0 <= p[1] < 1 and 2 <= p[2] < 4 and 3 <= p[3] < 3.5 for p in a)


def test_random_config_strings_shape():
    th, om, ps = random_config_strings(SplitMix64(3))
    assert (len(th), len(om), len(ps)) == (16, 24, 8)


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_scenarios_load(name):
    sc = load_scenario(name)
    assert sc.expression_count == 48
    assert sc.name == name and len(sc.source_hash) == 64
    assert set(sc.suites) <= set(SUITES)


def test_flat_vacuum_fixture():
    sc = load_scenario("flat_vacuum")
    assert sc.expression_count == 48 and sc.automorphism.mode == "kosmann"


def test_missing_theta_names_key():
    doc = _doc()
    del doc["fields"]["theta"]
    with pytest.raises(ScenarioError) as err:
        parse_scenario(doc)
    assert err.value.key == "fields.theta"


def test_parse_error_has_offset():
    doc = _doc()
    doc["fields"]["psi"] = ["0"] * 7 + ["1 + x5"]
    with pytest.raises(ScenarioParseError) as err:
        parse_scenario(doc)
    assert err.value.key == "fields.psi[7]" and err.value.offset == 4


@pytest.mark.parametrize("mutate, key", [
    (lambda d: d["fields"].update(omega=["0"] * 23), "fields.omega"),
    (lambda d: d["sampling"].update(points=0), "sampling.points"),
    (lambda d: d["automorphism"].update(mode="weird"), "automorphism.mode"),
    (lambda d: d["fields"]["psi"].__setitem__(0, "q*x0"), "constants"),
    (lambda d: d.update(suites=["nope"]), "suites"),
    (lambda d: d.update(tolerances={"fuzzy": 1}), "tolerances.fuzzy"),
    (lambda d: d["automorphism"].update(mode="explicit"), "automorphism.xi_v"),
    (lambda d: d["automorphism"].update(perturb={"plane": 7, "amount": 0.1}),
     "automorphism.perturb.plane"),
    (lambda d: d.pop("sampling"), "sampling"),
])
def test_invalid_documents(mutate, key):
    doc = _doc()
    mutate(doc)
    with pytest.raises(ScenarioError) as err:
        parse_scenario(doc)
    assert err.value.key == key


def test_defaults_and_overrides():
    sc = parse_scenario(_doc(tolerances={"exact": 1e-9}))
    assert sc.suites == SUITES
    assert sc.tolerances["exact"] == 1e-9
    assert sc.tolerances["two_path"] == DEFAULT_TOLERANCES["two_path"]
    assert sc.config.m == 1.0 and sc.config.k == 1.0


def test_json_and_toml_agree(tmp_path):
    raw, _ = read_scenario_bytes("plane_wave_dirac")
    toml_path = tmp_path / "pw.toml"
    toml_path.write_bytes(raw)
    a = load_scenario(toml_path)
    import sys
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    json_path = tmp_path / "pw.json"
    json_path.write_text(json.dumps(tomllib.loads(raw.decode())))
    b = load_scenario(json_path)
    assert a.sources == b.sources and a.sampling == b.sampling and a.lattice == b.lattice


def test_unknown_path():
    with pytest.raises(FileNotFoundError):
        load_scenario("/nonexistent/scenario.toml")


def test_garbage_file(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("this is [ not toml")
    with pytest.raises(ScenarioError):
        load_scenario(p)
