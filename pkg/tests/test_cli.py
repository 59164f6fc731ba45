import csv
import json
import subprocess
import sys

import pytest
import yaml

from greenwalk.cli import main
from greenwalk.cli.config import ConfigError, bundled_scenarios, defaults_document, load_config, load_text
from greenwalk.cli.runner import EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_PARSE, EXIT_PASS, ladders_csv, report_document, run_scenario

TINY_F2 = """
name: tiny-f2
group: F_2
measure: srw
seed: 5
estimators:
  - {kind: speed, metric: green, n: [100, 200], trials: 500}
  - {kind: speed, metric: word, n: [100, 200], trials: 500}
  - {kind: entropy_convolution, n_max: 10}
  - {kind: entropy_pointwise, n: 8, trials: 500}
checks:
  - green_speed_le_entropy
  - green_first_moment_le_entropy
"""

TINY_Z3 = """
name: tiny-z3
group: Z^3
measure: srw
seed: 6
estimators:
  - {kind: entropy_convolution, n_max: 8}
  - {kind: speed, metric: green, n: [50, 100], trials: 200}
checks:
  - {name: entropy_equals_green_speed, absolute_bound: 0.2}
"""

BUNDLED = {
    "biasedz-remark22",
    "f2-fundamental-ineq",
    "f2-green-identities",
    "f2-maximal-ineq",
    "f2-theorem11",
    "f3-theorem11",
    "z3-fundamental-ineq",
    "z3-green-identities",
    "z3-heatkernel",
    "z3-theorem11",
}


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_bundled_scenarios_parse():
    names = set(bundled_scenarios())
    assert BUNDLED <= names
    for name in names:
        cfg = load_config(name)
        assert cfg.name == name and cfg.checks


def test_list_and_defaults(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in BUNDLED)
    assert main(["list", "z3"]) == 0
    assert "f2-" not in capsys.readouterr().out
    assert main(["show-defaults"]) == 0
    doc = yaml.safe_load(capsys.readouterr().out)
    assert doc == defaults_document()
    assert doc["scenario"]["budgets"]["atoms"] > 0
    assert "speed" in doc["estimators"] and "fundamental_inequality" in doc["checks"]


@pytest.mark.parametrize(
    "text",
    [
        "group: F_1",
        "measure: srw",
        "group: F_2\nmeasure: biased(0.5)",
        "group: F_2\nseed: -1",
        "group: F_2\nseed: 1.5",
        "group: F_2\ncolour: red",
        "group: F_2\nestimators: [{kind: teleport}]",
        "group: F_2\nestimators: [{kind: speed, horizon: 3}]",
        "group: F_2\nestimators: [speed, speed]",
        "group: F_2\nchecks: [all_good]",
        "group: F_2\nbudgets: {atoms: 0}",
        "group: [F_2",
        "- just a list",
    ],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        load_text(text)


def test_parse_errors_exit_2(tmp_path, capsys):
    assert main(["run", write(tmp_path, "group: F_1\n")]) == EXIT_PARSE
    assert "config error" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.yaml")]) == EXIT_PARSE
    assert main(["run", write(tmp_path, TINY_F2), "--threads", "0"]) == EXIT_PARSE
    assert main(["run", write(tmp_path, TINY_F2), "--budget-atoms", "0"]) == EXIT_PARSE
    assert main(["frobnicate"]) == EXIT_PARSE


def test_defaults_are_filled_in():
    cfg = load_text("group: F_2\nestimators: [speed]\nchecks: [fundamental_inequality]")
    doc = cfg.to_dict()
    assert doc["estimators"][0]["trials"] == 10000 and doc["estimators"][0]["name"] == "speed_green"
    assert doc["checks"][0]["metrics"] == ["word", "green"]
    assert doc["budgets"]["steps"] > 0


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", write(tmp_path, TINY_F2), "--out", str(out)])
    assert code == EXIT_PASS
    summary = capsys.readouterr().out
    assert summary.splitlines()[-1].split() == ["verdict", "pass"]
    rep = json.loads((out / "report.json").read_text())
    assert rep["verdict"] == "pass" and rep["seed"] == 5
    assert {e["name"] for e in rep["estimators"]} == {"speed_green", "speed_word", "entropy_convolution", "entropy_pointwise"}
    assert rep["config"]["estimators"][0]["trials"] == 500
    with open(out / "ladders.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["estimator", "n", "value", "stderr"]
    assert {r[0] for r in rows[1:]} >= {"speed_green", "entropy_convolution"}


def test_seed_override_changes_results(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cfg = write(tmp_path, TINY_F2)
    main(["run", cfg, "--out", str(a)])
    main(["run", cfg, "--out", str(b), "--seed", "99"])
    ra, rb = json.loads((a / "report.json").read_text()), json.loads((b / "report.json").read_text())
    assert rb["seed"] == 99
    assert ra["estimators"][0]["value"] != rb["estimators"][0]["value"]


def test_runs_are_byte_identical_across_threads(tmp_path):
    cfg = write(tmp_path, TINY_F2)
    outs = []
    for i, threads in enumerate(["1", "1", "3"]):
        d = tmp_path / f"run{i}"
        main(["run", cfg, "--out", str(d), "--threads", threads])
        outs.append(((d / "report.json").read_bytes(), (d / "ladders.csv").read_bytes()))
    assert outs[0] == outs[1] == outs[2]


def test_budget_exhaustion_is_inconclusive(tmp_path):
    cfg = write(tmp_path, TINY_Z3)
    assert main(["run", cfg, "--out", str(tmp_path / "ok")]) == EXIT_PASS
    code = main(["run", cfg, "--out", str(tmp_path / "cut"), "--budget-atoms", "10"])
    assert code == EXIT_INCONCLUSIVE
    rep = json.loads((tmp_path / "cut" / "report.json").read_text())
    assert rep["verdict"] == "inconclusive"


def test_step_budget_is_inconclusive(tmp_path):
    cfg = write(tmp_path, TINY_F2)
    assert main(["run", cfg, "--out", str(tmp_path / "s"), "--budget-steps", "150"]) == EXIT_INCONCLUSIVE


def test_violation_exits_1(tmp_path):
    # an absolute bound of 0.05 is false for a walk with positive entropy
    text = TINY_F2 + "  - {name: entropy_equals_green_speed, absolute_bound: 0.05}\n"
    assert main(["run", write(tmp_path, text), "--out", str(tmp_path / "v")]) == EXIT_FAIL


def test_missing_estimators_make_checks_inconclusive():
    res = run_scenario(load_text("group: F_2\nchecks: [green_speed_le_entropy, fundamental_inequality]"))
    assert res.verdict == "inconclusive" and res.exit_code == EXIT_INCONCLUSIVE


def test_report_is_json_safe():
    res = run_scenario(load_text(TINY_Z3))
    doc = report_document(res)
    json.dumps(doc, allow_nan=False)
    assert doc["oracle"]["method"] == "lattice_dp"
    assert ladders_csv(res).startswith("estimator,n,value,stderr\n")


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "greenwalk", "list", "f2"], capture_output=True, text=True, check=True)
    assert "f2-theorem11" in out.stdout
