import hashlib
import json

import jsonschema
import pytest

from gbverify.cli import families_catalog, load_schema, main
from gbverify.metric import FAMILIES

FOOTBALL = {"surface": {"model": "sphere"},
            "metric": {"family": "football", "params": {"beta": 0.5}},
            "checks": ["gauss_bonnet"]}


def run(tmp_path, config, *extra, name="cfg"):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(config))
    out = tmp_path / f"out_{name}"
    return main(["run", str(path), "--out", str(out), *extra]), out


def test_football_run_passes(tmp_path, capsys):
    code, out = run(tmp_path, FOOTBALL)
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert abs(report["residual"]) <= 1e-4
    assert report["checks"]["gauss_bonnet"]["verdict"] == "PASS"
    jsonschema.validate(report, load_schema("report.schema.json"))
    assert "gauss_bonnet: PASS" in capsys.readouterr().out


def test_csv_format(tmp_path):
    _, out = run(tmp_path, FOOTBALL)
    raw = (out / "ladder_gauss_bonnet_total.csv").read_bytes()
    lines = raw.split(b"\r\n")
    assert lines[0] == b"epsilon,value"
    assert lines[-1] == b""
    eps, value = lines[1].split(b",")
    assert float(eps) == 0.1
    assert len(value.replace(b".", b"").lstrip(b"0")) >= 15


def test_all_checks_write_reports(tmp_path):
    config = dict(FOOTBALL, checks=["gauss_bonnet", "green", "flux", "decay", "lp", "energy",
                                    {"check": "hurwitz", "n": 2}])
    code, out = run(tmp_path, config)
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert {"ladder_flux_p0.csv", "ladder_decay_p1.csv", "ladder_hurwitz_total.csv"} <= names
    report = json.loads((out / "report.json").read_text())
    assert report["checks"]["hurwitz"]["chi_pullback"] == 6
    jsonschema.validate(report, load_schema("report.schema.json"))


def test_fail_verdict_exit_code(tmp_path):
    config = {"surface": {"model": "sphere"},
              "metric": {"family": "football", "params": {"beta": -0.5}}}
    code, _ = run(tmp_path, config, "--tolerance", "1e-9")
    assert code == 1


@pytest.mark.parametrize("config,field", [
    ({"surface": {"model": "sphere"}, "metric": {"family": "football", "params": {"beta": 0.5}},
      "divisor": [{"chart": "z", "location": [0, 0], "kind": "cone", "order": -1.5}]},
     "divisor[0].order"),
    ({"surface": {"model": "disk", "radius": 1.5}, "metric": {"family": "cusp_model"}},
     "surface.radius"),
    ({"surface": {"model": "sphere"}, "metric": {"family": "football"}}, "metric.params.beta"),
    ({"surface": {"model": "sphere"}, "metric": {"family": "football", "params": {"beta": 0.5}},
      "divisor": [{"chart": "z", "location": [0, 0], "kind": "cone", "order": 0.25}]},
     "divisor[0].order"),
    ({"surface": {"model": "disk", "radius": 0.5}, "metric": {"family": "flat_cone",
      "params": {"beta": 0.5}}, "checks": ["gauss_bonnet"]}, "checks[0]"),
    ({"surface": {"model": "sphere"}, "metric": {"family": "football", "params": {"beta": 0.5},
      "perturbations": [{"center": [0.1, 0], "amplitude": 0.3, "width": 0.2}]}},
     "metric.perturbations[0]"),
    ({"surface": {"model": "sphere"}, "metric": {"family": "nope"}}, "metric.family"),
    ({"surface": {"model": "sphere"}, "metric": {"family": "round_sphere"}, "bogus": 1}, "<root>"),
])
def test_validation_errors(tmp_path, capsys, config, field):
    code, out = run(tmp_path, config)
    assert code == 2
    assert field in capsys.readouterr().err
    assert not out.exists()


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{\"surface\": ")
    assert main(["run", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "line 1" in capsys.readouterr().err


def test_numerical_error_exit_code(tmp_path, capsys):
    config = {"surface": {"model": "sphere"},
              "metric": {"family": "round_sphere",
                         "perturbations": [{"center": [2, 0], "amplitude": 400, "width": 0.3}]},
              "checks": [{"check": "lp", "p": 2}]}
    code, _ = run(tmp_path, config)
    assert code == 3
    assert "non-finite" in capsys.readouterr().err


def test_marked_point_is_accepted(tmp_path):
    config = {"surface": {"model": "sphere"}, "metric": {"family": "round_sphere"},
              "divisor": [{"chart": "z", "location": [0.3, 0.1], "kind": "cone", "order": 0}],
              "checks": ["gauss_bonnet", "flux"]}
    code, out = run(tmp_path, config)
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["chi"] == 2.0 and len(report["per_singularity"]) == 1


def test_effective_config_lists_defaults(tmp_path, capsys):
    config = {"surface": {"model": "disk", "radius": 0.5},
              "metric": {"family": "flat_cone", "params": {"beta": 0.5}}}
    code, _ = run(tmp_path, config, "--print-effective-config")
    assert code == 0
    text = capsys.readouterr().out
    effective = json.loads(text[:text.index("\n}\n") + 2])
    assert effective["checks"] == [{"check": "flux"}, {"check": "decay"}]
    assert effective["scheme"]["radial_levels"] == 32
    assert effective["tolerance"] == 1e-4


def test_report_is_deterministic(tmp_path):
    _, a = run(tmp_path, FOOTBALL, name="a")
    _, b = run(tmp_path, FOOTBALL, name="b")
    for name in ("report.json", "ladder_gauss_bonnet_total.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_families_catalog(capsys):
    assert main(["families"]) == 0
    text = capsys.readouterr().out
    assert "football: chi = 2 + 2*beta" in text
    assert "flat_torus: chi = 0" in text


CATALOG_CONFIGS = {
    "football": {"surface": {"model": "sphere"}, "params": {"beta": 0.5}},
    "round_sphere": {"surface": {"model": "sphere"}, "params": {}},
    "cusp_sphere": {"surface": {"model": "sphere"}, "params": {"beta": 0.5}},
    "flat_torus": {"surface": {"model": "torus", "tau": [0.2, 1.1]}, "params": {}},
    "flat_cone": {"surface": {"model": "disk", "radius": 0.5}, "params": {"beta": -0.5}},
    "cusp_model": {"surface": {"model": "disk", "radius": 0.5}, "params": {}},
}


def test_catalog_round_trip(tmp_path):
    listed = [line.split(":")[0] for line in families_catalog().splitlines()
              if not line.startswith(" ")]
    assert sorted(listed) == sorted(FAMILIES) == sorted(CATALOG_CONFIGS)
    for name in listed:
        entry = CATALOG_CONFIGS[name]
        config = {"surface": entry["surface"], "metric": {"family": name, "params": entry["params"]}}
        code, _ = run(tmp_path, config, name=name)
        assert code == 0, name


def test_config_schema_is_valid():
    jsonschema.Draft202012Validator.check_schema(load_schema("config.schema.json"))
    jsonschema.Draft202012Validator.check_schema(load_schema("report.schema.json"))
