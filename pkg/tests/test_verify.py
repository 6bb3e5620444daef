import copy

import numpy as np
import pytest

from optauction.auction import EfficientAuction, KthPriceAuction, OptimalAuction, PostedPriceAuction, ZeroSurplusAuction
from optauction.dist import IndependentUniform
from optauction.model import Item, Scenario, SellerSpec
from optauction.verify import (best_response_gap, check_incentive_conditions, compare_costs, draw_types, evaluate_utility,
                               expected_cost, expected_stats, random_scenario, xor_best_response_gap)
from optauction.xor import random_instance


def truthful_profile(bids):
    return [(b.reported_cost, b.reported_capacity) for b in bids]


def single_seller(demand=10.0):
    spec = SellerSpec(1, frozenset("A"), (0.0, 1.0), (10.0, 20.0), IndependentUniform(0.0, 1.0, 10.0, 20.0))
    return Scenario([Item("A", demand)], [spec])


def test_random_scenarios_are_feasible_and_seeded():
    a = random_scenario(np.random.default_rng(3), 5, 4)
    b = random_scenario(np.random.default_rng(3), 5, 4)
    assert a == b
    for it in a.items:
        assert it.demand <= sum(s.capacity_lo for s in a.sellers if it.id in s.bundle)


def test_truthful_utility_equals_offered_surplus(one_item):
    scenario, bids = one_item
    prof = truthful_profile(bids)
    ev = evaluate_utility(OptimalAuction(), scenario, 4, prof[3], prof[3], prof)
    assert ev.utility == ev.offered_surplus == pytest.approx(2000.0, abs=1e-6)


def test_optimal_auction_passes_all_conditions_on_a_random_scenario():
    rng = np.random.default_rng(0)
    scenario = random_scenario(rng, 4, 3)
    prof = draw_types(scenario, rng)
    mech = OptimalAuction(scan_steps=64)
    for s in scenario.sellers:
        rep = check_incentive_conditions(mech, scenario, s.id, profiles=[prof], cost_points=11, capacity_points=6)
        assert rep.passed, rep
        assert rep.condition1.worst <= 1e-6


def test_kth_price_fails_the_characterisation(one_item):
    scenario, bids = one_item
    rep = check_incentive_conditions(KthPriceAuction(), scenario, 4, profiles=[truthful_profile(bids)])
    assert not rep.passed
    assert not rep.condition1.passed


def test_zero_surplus_payment_breaks_the_integral_identity(one_item):
    scenario, bids = one_item
    rep = check_incentive_conditions(ZeroSurplusAuction(), scenario, 4, profiles=[truthful_profile(bids)])
    assert not rep.condition1.passed
    assert rep.condition1.worst >= 1000.0


def test_kth_price_capacity_deviation_gain(one_item):
    scenario, bids = one_item
    prof = truthful_profile(bids)
    br = best_response_gap(KthPriceAuction(), scenario, 4, prof[3], profiles=[prof])
    # truthful: (10 - 6) * 500 = 2000; shading to 490: (12 - 6) * 490 = 2940
    assert br.gap == pytest.approx(940.0, abs=1e-9)
    assert br.best_bid[1] == 490.0


def test_optimal_auction_has_no_profitable_deviation(one_item):
    scenario, bids = one_item
    prof = truthful_profile(bids)
    for sid in (2, 4):
        br = best_response_gap(OptimalAuction(), scenario, sid, prof[sid - 1], profiles=[prof])
        assert br.gap <= 1e-6


def test_single_seller_market_has_zero_gap():
    scenario = single_seller()
    br = best_response_gap(OptimalAuction(), scenario, 1, (0.4, 15.0), profiles=[[(0.4, 15.0)]])
    assert br.gap == 0.0


def test_bic_mode_averages_over_draws():
    rng = np.random.default_rng(1)
    scenario = random_scenario(rng, 3, 2)
    mech = OptimalAuction(scan_steps=32)
    truth = draw_types(scenario, rng)[0]
    br = best_response_gap(mech, scenario, 1, truth, n_draws=4, seed=5, cost_points=5, capacity_points=3)
    assert br.mode == "bic" and br.gap <= 1e-6
    rep = check_incentive_conditions(mech, scenario, 1, n_draws=4, seed=5, cost_points=5, capacity_points=3)
    assert rep.mode == "bic" and rep.passed


def test_zero_demand_costs_nothing():
    est = expected_cost(OptimalAuction(scan_steps=16), single_seller(0.0), 20, seed=1)
    assert est.mean == 0.0 and est.se == 0.0


def test_single_seller_mean_cost_is_top_cost_times_demand():
    est = expected_cost(OptimalAuction(scan_steps=16), single_seller(10.0), 30, seed=2)
    assert est.mean == pytest.approx(10.0, abs=1e-9)
    assert est.se == pytest.approx(0.0, abs=1e-9)


def test_seed_determinism(one_item):
    scenario, _ = one_item
    a = expected_stats(KthPriceAuction(), scenario, 200, seed=9)
    b = expected_stats(KthPriceAuction(), scenario, 200, seed=9)
    assert a == b
    assert expected_cost(KthPriceAuction(), scenario, 50, seed=1) != expected_cost(KthPriceAuction(), scenario, 50, seed=2)


def test_standard_error_shrinks_with_sample_size(one_item):
    scenario, _ = one_item
    small = expected_cost(KthPriceAuction(), scenario, 1000, seed=0)
    large = expected_cost(KthPriceAuction(), scenario, 4000, seed=0)
    assert small.se / large.se == pytest.approx(2.0, rel=0.25)


def test_optimal_not_costlier_than_posted_prices_on_20_scenarios():
    for seed in range(20):
        scenario = random_scenario(np.random.default_rng(100 + seed), 4, 3)
        cmp = compare_costs(OptimalAuction(scan_steps=32), PostedPriceAuction(scan_steps=32), scenario, 30, seed=seed)
        assert cmp.baseline_not_worse, (seed, cmp)


def test_optimal_not_costlier_than_efficient():
    for seed in range(3):
        scenario = random_scenario(np.random.default_rng(200 + seed), 4, 3)
        cmp = compare_costs(OptimalAuction(scan_steps=32), EfficientAuction(scan_steps=32), scenario, 40, seed=seed)
        assert cmp.baseline_not_worse, (seed, cmp)


def test_harness_leaves_inputs_untouched(one_item):
    scenario, bids = one_item
    before = copy.deepcopy(scenario)
    prof = truthful_profile(bids)
    check_incentive_conditions(OptimalAuction(scan_steps=32), scenario, 1, profiles=[prof], cost_points=5, capacity_points=3)
    assert scenario == before


def test_xor_best_response_gap_is_tiny():
    bidders, items = random_instance(np.random.default_rng(8), 3, 4)
    for pos in range(3):
        assert xor_best_response_gap(bidders, items, pos, grid=11).gap <= 1e-6
