import json

import numpy as np
import pytest

from hoscat.errors import ConfigError
from hoscat.harness import REGISTRY, list_scenarios, make_config, run_scenario
from hoscat.harness.cli import main
from hoscat.harness.config import load_schema, read_config, validate
from hoscat.harness.results import compare, read_csv

SPEC_SCENARIOS = {"thm11_forward", "thm11_backward", "thm13_recurrence", "thm13_recurrence_flat",
                  "thm41_nonresonant", "thm42_resonant", "thm24_high_energy", "lemma21_escape",
                  "lemma23_rate", "scaling_identities", "egorov_flat_exact", "h0_identities",
                  "assumption_audit"}


def test_registry_covers_the_catalogue():
    assert SPEC_SCENARIOS <= set(REGISTRY)
    names = [n for n, _ in list_scenarios()]
    assert len(names) == len(set(names)) == len(REGISTRY)


def test_cli_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in ("thm11_forward", "thm42_resonant", "lemma21_escape"):
        assert name in out


def test_defaults_validate():
    for name in REGISTRY:
        cfg = make_config(name)
        assert cfg.scenario == name


@pytest.mark.parametrize("bad", [
    {"schema_version": 1, "scenario": "h0_identities", "colour": "red"},
    {"schema_version": 2, "scenario": "h0_identities"},
    {"schema_version": 1, "scenario": "h0_identities", "field": {"family": "rational", "mu": 0.5}},
    {"schema_version": 1, "scenario": "h0_identities", "field": {"family": "rational", "extra": 1}},
    {"schema_version": 1, "scenario": "h0_identities", "grid": {"L": 20.0, "N": 4096, "M": 1}},
    {"scenario": "h0_identities"},
])
def test_schema_rejects(bad):
    with pytest.raises(ConfigError):
        validate(bad)


def test_schema_is_published():
    schema = load_schema()
    assert schema["additionalProperties"] is False
    assert "scenario" in schema["required"]


def test_unknown_scenario():
    with pytest.raises(ConfigError):
        make_config("thm99")


def test_hash_ignores_output_location():
    a = make_config("wf_calibration", {"out_dir": "/tmp/a"})
    b = make_config("wf_calibration", {"out_dir": "/tmp/b", "plots": True})
    c = make_config("wf_calibration", {"seed": 3})
    assert a.hash == b.hash != c.hash


def test_rerun_is_byte_identical(tmp_path):
    s1 = run_scenario(make_config("flow_flat_exact"), tmp_path / "a")
    s2 = run_scenario(make_config("flow_flat_exact"), tmp_path / "b")
    assert s1.passed and s2.passed
    a, b = (tmp_path / "a" / "flow_errors.csv"), (tmp_path / "b" / "flow_errors.csv")
    assert a.read_bytes() == b.read_bytes()
    head = a.read_text().splitlines()[:2]
    assert head == ["# scenario=flow_flat_exact", f"# config_hash={s1.config_hash}"]


def test_summary_records_measured_and_threshold(tmp_path):
    s = run_scenario("wf_calibration", tmp_path)
    data = json.loads((tmp_path / "summary.json").read_text())
    assert data["passed"] == s.passed
    assert data["statement"] and data["config_hash"] == s.config_hash
    for c in data["criteria"]:
        assert {"name", "measured", "threshold", "op", "passed"} <= set(c)
    cols, rows = read_csv(tmp_path / "wf_calibration.csv")
    assert cols[0] == "h_sequence" and rows


def test_failures_carry_values():
    s = run_scenario(make_config("flow_flat_exact", {"samples": 3, "tolerances": {"flow": 1e-3}}))
    assert not s.passed
    bad = s.failures()[0]
    assert bad.measured > bad.threshold
    assert "FAIL" in bad.line() and "measured" in bad.line()


def test_internal_errors_are_recorded():
    s = run_scenario(make_config("thm11_forward", {"times": [4.0]}))
    assert s.error and not s.passed


def test_cli_run_and_plot(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scenario": "lemma23_rate", "lambdas": [32, 64, 128]}))
    out = tmp_path / "out"
    code = main(["run", "lemma23_rate", "--config", str(cfg), "--out", str(out), "--plots"])
    assert code == 0
    assert "PASS" in capsys.readouterr().out
    assert list(out.glob("*.png"))
    csv_path = out / "high_energy_forward.csv"
    cols, rows = read_csv(csv_path)
    assert cols == ["lambda", "error"] and len(rows) == 3
    assert main(["plot", str(csv_path), "--out", str(tmp_path / "p.png")]) == 0
    assert (tmp_path / "p.png").stat().st_size > 0


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"scenario": "lemma23_rate", "nonsense": 1}))
    assert main(["run", "lemma23_rate", "--config", str(bad)]) == 2
    cfg = tmp_path / "fail.json"
    cfg.write_text(json.dumps({"scenario": "flow_flat_exact", "samples": 2,
                               "tolerances": {"flow": 1e-3}}))
    assert main(["run", "flow_flat_exact", "--config", str(cfg)]) == 1
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ConfigError):
        read_config(broken)


@pytest.mark.parametrize("measured,threshold,op,expected", [
    (1.0, 2.0, "<=", True), (2.0, 2.0, "<", False), (3.0, 2.0, ">", True),
    (-1.0, [-1.3, -0.7], "in", True), (-2.0, [-1.3, -0.7], "in", False),
    ([0.4, 0.6], [0.35, 0.65], "in_all", True), ([0.4, 0.7], [0.35, 0.65], "in_all", False),
    (True, True, "==", True),
])
def test_compare(measured, threshold, op, expected):
    assert compare(measured, threshold, op) is expected


def test_compare_unknown_op():
    with pytest.raises(ValueError):
        compare(1, 1, "~")


def test_assumption_audit_scenario():
    s = run_scenario("assumption_audit")
    assert s.passed, s.report()


def test_scenario_rng_is_seeded():
    a = make_config("scaling_identities").rng().random(3)
    b = make_config("scaling_identities").rng().random(3)
    assert np.array_equal(a, b)
