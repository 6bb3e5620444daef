import json

import numpy as np
import pytest

from optauction import io
from optauction.cli import main
from optauction.model import coverage_matrix
from conftest import data_path


def run(args):
    code = main([str(a) for a in args])
    return code


def test_run_four_item_covers_demand(tmp_path, capsys):
    out = tmp_path / "outcome.json"
    code = run(["run", data_path("four_item_scenario.json"), data_path("four_item_bids.json"), "-o", out])
    assert code == 0
    doc = json.loads(out.read_text())
    x = np.array([a["quantity"] for a in doc["allocation"]])
    scenario = io.load_scenario(data_path("four_item_scenario.json"))
    assert np.all(coverage_matrix(scenario) @ x >= scenario.demands - 1e-9)
    assert set(doc) >= {"allocation", "payments", "objective", "virtual_costs"}
    assert "payment" in capsys.readouterr().out


def test_verify_kth_price_one_item_fails_with_gain(tmp_path):
    out = tmp_path / "findings.json"
    code = run(["verify", data_path("one_item_scenario.json"), "--mechanism", "kth-price",
                "--bids", data_path("one_item_bids.json"), "--seller", 4, "-o", out])
    assert code == 1
    doc = json.loads(out.read_text())
    assert doc["best_response_gap"]["value"] == pytest.approx(940.0)
    assert doc["best_response_gap"]["bid"][1] == 490.0
    assert set(doc) >= {"condition1", "condition2", "condition3", "best_response_gap", "details"}


def test_verify_optimal_passes(tmp_path):
    out = tmp_path / "findings.json"
    code = run(["verify", data_path("one_item_scenario.json"), "--mechanism", "optimal",
                "--bids", data_path("one_item_bids.json"), "--cost-points", 11, "--capacity-points", 5, "-o", out])
    assert code == 0
    assert json.loads(out.read_text())["passed"] is True


def test_verify_is_seed_deterministic(tmp_path):
    docs = []
    for k in range(2):
        out = tmp_path / f"f{k}.json"
        run(["verify", data_path("mixed_scenario.json"), "--mechanism", "optimal", "--seed", 3,
             "--cost-points", 5, "--capacity-points", 3, "--scan-steps", 32, "-o", out])
        docs.append(out.read_text())
    assert docs[0] == docs[1]


def test_regularity_command(tmp_path):
    assert run(["regularity", data_path("one_item_scenario.json")]) == 0
    out = tmp_path / "reg.json"
    assert run(["regularity", data_path("nonregular_scenario.json"), "-o", out]) == 1
    doc = json.loads(out.read_text())
    assert doc["sellers"][0]["regular"] is False


def test_schema_error_exit_code(tmp_path, capsys):
    doc = json.loads(open(data_path("four_item_scenario.json")).read())
    doc["sellers"][2]["capacity_range"] = "lots"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert run(["regularity", bad]) == 2
    assert "sellers[2].capacity_range" in capsys.readouterr().err


def test_infeasible_exit_code(tmp_path):
    doc = json.loads(open(data_path("four_item_scenario.json")).read())
    doc["items"][0]["demand"] = 10_000
    bad = tmp_path / "inf.json"
    bad.write_text(json.dumps(doc))
    assert run(["run", bad, data_path("four_item_bids.json")]) == 3


def test_refusal_exit_code():
    assert run(["run", data_path("nonregular_scenario.json"), data_path("mixed_bids.json")]) == 4
    assert run(["xor", "run", data_path("xor_histogram.json")]) == 4


def test_unknown_flag_is_rejected():
    with pytest.raises(SystemExit) as info:
        main(["run", data_path("four_item_scenario.json"), data_path("four_item_bids.json"), "--fast"])
    assert info.value.code == 2


def test_xor_commands(tmp_path):
    out = tmp_path / "xor.json"
    assert run(["xor", "run", data_path("xor_example.json"), "-o", out]) == 0
    doc = json.loads(out.read_text())
    assert doc["objective"] == 5.0
    assert [s["bundle"] for s in doc["selection"]] == [1, 1]
    csv = tmp_path / "regions.csv"
    assert run(["xor", "regions", data_path("xor_example.json"), "--bidder", 2, "--grid", 9, "-o", csv]) == 0
    lines = csv.read_text().strip().splitlines()
    assert len(lines) == 10 and all(len(l.split(",")) == 10 for l in lines)


def test_compare_command(tmp_path):
    out = tmp_path / "cmp.json"
    assert run(["compare", data_path("one_item_scenario.json"), "--mechanisms", "optimal,kth-price",
                "--samples", 20, "--scan-steps", 16, "-o", out]) == 0
    doc = json.loads(out.read_text())
    assert [r["mechanism"] for r in doc["results"]] == ["optimal", "kth-price"]
    assert "paired_difference" in doc["results"][1]
    assert run(["compare", data_path("one_item_scenario.json"), "--mechanisms", "optimal,bogus"]) == 2


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["verify", "--help"])
    text = capsys.readouterr().out
    assert "default: 0" in text and "--cost-points" in text
