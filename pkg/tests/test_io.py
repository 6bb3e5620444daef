import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from optauction import io
from optauction.verify import random_scenario
from conftest import data_path


def load(name):
    with open(data_path(name)) as fh:
        return json.load(fh)


@pytest.mark.parametrize("name", ["one_item_scenario.json", "four_item_scenario.json", "mixed_scenario.json"])
def test_shipped_scenarios_round_trip(name):
    scenario = io.load_scenario(data_path(name))
    again = io.scenario_from_dict(json.loads(io.dumps(io.scenario_to_dict(scenario))))
    assert again == scenario


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_random_scenarios_round_trip_exactly(seed):
    scenario = random_scenario(np.random.default_rng(seed), 4, 3)
    text = io.dumps(io.scenario_to_dict(scenario))
    assert io.scenario_from_dict(json.loads(text)) == scenario


def test_xor_round_trip():
    bidders, items = io.load_xor(data_path("xor_histogram.json"))
    again = io.xor_from_dict(json.loads(io.dumps(io.xor_to_dict(bidders, items))))
    assert again == (bidders, items)


def test_bids_round_trip(four_item):
    scenario, bids = four_item
    assert io.bids_from_dict(io.bids_to_dict(bids), scenario) == bids


def _mutate(doc, path, value):
    target = doc
    for key in path[:-1]:
        target = target[key]
    if value is KeyError:
        del target[path[-1]]
    else:
        target[path[-1]] = value
    return doc


@pytest.mark.parametrize("path, value, where", [
    (("sellers", 1, "cost_range"), "cheap", "sellers[1].cost_range"),
    (("sellers", 0, "bundle"), ["A", "Z"], "sellers[0].bundle"),
    (("sellers", 2, "distribution", "family"), "gaussian", "sellers[2].distribution.family"),
    (("items", 0, "demand"), -5, "items[0].demand"),
    (("sellers", 3, "id"), 7, "sellers[3].id"),
    (("sellers", 0, "capacity_range"), [100.0, 50.0], "sellers[0].capacity_range"),
    (("items", 1, "demand"), KeyError, "items[1]"),
])
def test_schema_errors_name_the_field(path, value, where):
    doc = _mutate(load("four_item_scenario.json"), path, value)
    with pytest.raises(io.SchemaError) as info:
        io.scenario_from_dict(doc)
    assert info.value.path == where


def test_distribution_parameters_are_checked():
    doc = load("mixed_scenario.json")
    doc["sellers"][0]["distribution"]["params"]["mass"] = [[0.5, 0.5, 0.5], [0.1, 0.1, 0.1]]
    with pytest.raises(io.SchemaError) as info:
        io.scenario_from_dict(doc)
    assert info.value.path == "sellers[0].distribution.params"
    doc = load("mixed_scenario.json")
    del doc["sellers"][1]["distribution"]["params"]["slope"]
    with pytest.raises(io.SchemaError, match="slope"):
        io.scenario_from_dict(doc)


def test_bid_errors(four_item):
    scenario, _ = four_item
    doc = load("four_item_bids.json")
    doc["bids"][2]["cost"] = 1000.0
    with pytest.raises(io.SchemaError) as info:
        io.bids_from_dict(doc, scenario)
    assert info.value.path == "bids[2].cost"
    doc = load("four_item_bids.json")
    doc["bids"].pop()
    with pytest.raises(io.SchemaError, match="missing"):
        io.bids_from_dict(doc, scenario)
    doc = load("four_item_bids.json")
    doc["bids"][1]["seller"] = 1
    with pytest.raises(io.SchemaError, match="duplicate"):
        io.bids_from_dict(doc, scenario)


def test_xor_errors():
    doc = load("xor_example.json")
    doc["bidders"][0]["bundle2"] = ["A"]
    with pytest.raises(io.SchemaError) as info:
        io.xor_from_dict(doc)
    assert info.value.path == "bidders[0]"
    doc = load("xor_example.json")
    doc["bidders"][1]["bids"] = [1.0, 20.0]
    with pytest.raises(io.SchemaError) as info:
        io.xor_from_dict(doc)
    assert info.value.path == "bidders[1].bids[1]"


def test_invalid_json_is_a_schema_error(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(io.SchemaError):
        io.load_scenario(p)


def test_outcome_document_layout(one_item):
    from optauction.auction import KthPriceAuction
    scenario, bids = one_item
    doc = io.outcome_to_dict(KthPriceAuction().run(scenario, bids))
    assert doc["allocation"][3] == {"seller": 4, "quantity": 500.0}
    assert doc["payments"][3] == {"seller": 4, "amount": 5000.0}
    assert doc["price"] == 10.0 and doc["virtual_costs"] is None
