from fractions import Fraction

import numpy as np
import pytest

from caresim import allocation as al
from caresim.allocation import (
    BUY_FORMAL,
    CHILD,
    SOCIAL,
    TIME_OFF,
    AllocationParams,
    CareHousehold,
    CarePrices,
    CareWorld,
    ChildUnit,
    MemberSupply,
    SocialReceiver,
    WeightTree,
    Worker,
    allocate_week,
    informal_child_care_value,
    informal_or_formal,
    means_test,
    public_hours_for,
    sample_index,
    sample_receiver,
    sample_supplier,
    wealth_funded_hours,
    wealth_weekly_budget,
    weekly_supply,
)
from caresim.health import CARE_NEED_HOURS
from caresim.policy import PRESETS, apply_policy

PRICES = CarePrices(5.0, 17.5)
PARAMS = AllocationParams()


def levers(name="benchmark", year=2030):
    return apply_policy(PRESETS[name], year)


def member(aid, status):
    return MemberSupply(aid, tuple(float(x) for x in al.supply_row(status)))


def household(hid, town=0, statuses=(), budget=0.0, workers=(), child_need=0.0, n_children=0, first_id=None):
    base = hid * 100 if first_id is None else first_id
    members = [member(base + i, s) for i, s in enumerate(statuses)]
    return CareHousehold(hid, town, members, list(workers), budget, child_need, n_children)


# -- supply table


TABLE_2 = {
    "teenager": (12, 0, 0, 0),
    "student": (16, 8, 4, 0),
    "employed": (16, 12, 8, 4),
    "retired": (56, 28, 16, 8),
}


@pytest.mark.parametrize("status", sorted(TABLE_2))
@pytest.mark.parametrize("d", [0, 1, 2, 3])
def test_supply_table(status, d):
    assert weekly_supply(status, d) == TABLE_2[status][d]


def test_supply_rules():
    assert weekly_supply("teenager", 0) == 12
    assert weekly_supply("student", 3) == 0
    assert weekly_supply("retired", 1, same_town=False) == 0
    assert weekly_supply("retired", None) == 0
    assert weekly_supply("retired", 0, care_need_level=2) == 0
    assert weekly_supply("retired", 0, care_need_level=1) == 56
    assert weekly_supply("child", 0) == 0
    assert weekly_supply("unemployed", 1) == TABLE_2["student"][1]


# -- sampling


def test_sampler_zero_weight_never_drawn_and_proportions():
    rng = np.random.default_rng(2024)
    n = 10_000
    counts = np.zeros(3)
    for _ in range(n):
        counts[sample_receiver([10.0, 0.0, 30.0], rng)] += 1
    assert counts[1] == 0
    expected = np.array([0.25, 0.75]) * n
    chi2 = float(np.sum((counts[[0, 2]] - expected) ** 2 / expected))
    assert chi2 < 6.635  # chi-square 99% point, one degree of freedom


def test_sampler_edge_cases():
    rng = np.random.default_rng(0)
    assert all(sample_receiver([0.0, 5.0, 0.0], rng) == 1 for _ in range(100))
    assert sample_receiver([0.0, 0.0], rng) is None
    assert sample_receiver([], rng) is None
    assert sample_supplier([0.0, 2.0], rng) == 1


def test_sample_index_boundaries():
    assert sample_index([1.0, 1.0], 0.0) == 0
    assert sample_index([1.0, 1.0], 0.5) == 1
    assert sample_index([0.0, 1.0, 0.0], 0.999999) == 1


def test_weight_tree_matches_linear_scan():
    rng = np.random.default_rng(9)
    for _ in range(300):
        n = int(rng.integers(1, 60))
        w = (rng.integers(0, 20, n) * 0.25).tolist()
        tree = WeightTree(w)
        for _ in range(10):
            i = int(rng.integers(n))
            w[i] = float(rng.integers(0, 20) * 0.25)
            tree.set(i, w[i])
            u = float(rng.random())
            assert tree.sample(u) == sample_index(w, u)
    assert WeightTree([0.0, 0.0]).sample(0.3) is None


# -- decisions and prices


def test_time_off_threshold_social():
    assert informal_or_formal(8.0, SOCIAL, 0, PRICES, theta=0.0, alpha=0.2) == TIME_OFF
    assert informal_or_formal(8.0, SOCIAL, 0, PRICES, theta=0.5, alpha=0.2) == TIME_OFF
    assert informal_or_formal(9.0, SOCIAL, 0, PRICES, theta=0.5, alpha=0.2) == BUY_FORMAL
    assert informal_or_formal(None, SOCIAL, 0, PRICES, theta=0.0, alpha=0.2) == BUY_FORMAL


def test_informal_child_care_value():
    assert informal_child_care_value(PRICES, 0.2, 3) == pytest.approx(12.0)
    assert informal_or_formal(10.0, CHILD, 3, PRICES, theta=0.0, alpha=0.2) == TIME_OFF
    assert informal_or_formal(10.0, CHILD, 1, PRICES, theta=0.0, alpha=0.2) == BUY_FORMAL


# -- means test


def test_means_test_low_savings_low_income():
    assert means_test(4, 4, 10_000, 150.0, 200.0) == 200.0


def test_means_test_tariff():
    # income exactly at the guarantee, so only the tariff is charged
    tariff = Fraction(18_000 - 14_250, 250)
    assert tariff == 15
    assert means_test(4, 4, 18_000, 189.0, 200.0) == 200.0 - 15.0
    # income above the guarantee adds to the user's share
    assert means_test(4, 4, 18_000, 200.0, 200.0) == 200.0 - 15.0 - 11.0


def test_means_test_upper_threshold():
    assert means_test(4, 4, 30_000, 0.0, 200.0) == 0.0
    assert means_test(4, 4, 23_250, 0.0, 200.0) == 0.0
    assert means_test(4, 4, 23_249.99, 0.0, 200.0) > 0.0


def test_means_test_ineligible_level():
    assert means_test(3, 4, 0.0, 0.0, 200.0) == 0.0
    assert means_test(3, 3, 0.0, 0.0, 200.0) == 200.0


def test_public_hours_on_grid_and_capped():
    lv = levers("P4")
    # price 8.75; contribution 84 * 8.75 - 15 = 720 -> 82.2857 hours -> 82.25 on the grid
    hours = public_hours_for(4, 84.0, 18_000.0, 189.0, lv, PRICES)
    assert hours == 82.25
    assert public_hours_for(4, 84.0, 0.0, 0.0, lv, PRICES) == 84.0
    assert public_hours_for(3, 36.0, 0.0, 0.0, levers(), PRICES) == 0.0
    assert public_hours_for(3, 36.0, 0.0, 0.0, levers("P3"), PRICES) == 36.0


def test_wealth_budget_and_hours():
    assert wealth_funded_hours(0.0, PRICES, 0.0) == 0.0
    r_low = wealth_funded_hours(10_000.0, PRICES, 0.0) / 10_000.0
    r_high = wealth_funded_hours(100_000.0, PRICES, 0.0) / 100_000.0
    assert r_high >= r_low
    assert wealth_weekly_budget(52_000.0) == pytest.approx(52_000.0 * 0.04 / 52)


def test_drawdown_reaches_means_test_eligibility():
    savings = 60_000.0
    lv = levers()
    history = []
    for _ in range(200):
        history.append((savings, public_hours_for(4, 84.0, savings, 0.0, lv, PRICES)))
        savings -= 52 * wealth_weekly_budget(savings)
    crossed = [i for i, (s, _) in enumerate(history) if s < 23_250]
    assert crossed, "draw-down never crossed the upper threshold"
    first = crossed[0]
    assert all(h == 0 for _, h in history[:first])
    assert all(h > 0 for _, h in history[first:])


# -- weekly allocation walk-throughs


def run_week(world, lv=None, seed=0):
    return allocate_week(world, lv or levers(), PRICES, np.random.default_rng(seed), PARAMS)


def check_partition(ledger):
    for r in list(ledger.social.values()) + list(ledger.child.values()):
        assert r.informal + r.private_formal + r.public + r.unmet == r.need
        for v in (r.informal, r.private_formal, r.public, r.unmet):
            assert v >= 0 and (v * 4) == int(v * 4)


def test_low_need_met_by_retired_partner():
    hh = household(1, statuses=("retired",), first_id=11)
    r = SocialReceiver(10, 1, 0, 1, 8.0, 0.0, 0.0, {1: 0})
    ledger = run_week(CareWorld({1: hh}, [], [r]))
    led = ledger.social[10]
    assert (led.informal, led.unmet) == (8.0, 0.0)
    assert ledger.transfers == 2
    check_partition(ledger)


def test_child_care_exhausts_household_time():
    worker = Worker(21, wage=10.0)
    hh = household(2, statuses=("employed",), workers=[worker], child_need=72.0, n_children=2, first_id=21)
    child = ChildUnit(2, 0, 72.0, 2, {2: 0})
    # the receiver lives next door; household-scope routing keeps hh unmixed
    own = household(3)
    receiver = SocialReceiver(22, 3, 0, 1, 8.0, 0.0, 0.0, {3: 0, 2: 1})
    params = AllocationParams(mixed_routing_scope="household")
    ledger = allocate_week(CareWorld({2: hh, 3: own}, [child], [receiver]), levers(), PRICES, np.random.default_rng(0), params)
    assert not hh.mixed
    c = ledger.child[2]
    assert (c.informal, c.private_formal, c.unmet) == (16.0, 0.0, 56.0)
    assert hh.time_available(0, 4.0) == 0.0
    assert ledger.social[22].informal == 0.0 and ledger.social[22].unmet == 8.0
    check_partition(ledger)


def test_mixed_household_routing_follows_relative_price():
    def world():
        w = Worker(31, wage=30.0)
        hh = household(3, statuses=("retired", "employed"), workers=[w], budget=1000.0,
                       child_need=24.0, n_children=3, first_id=30)
        child = ChildUnit(3, 0, 24.0, 3, {3: 0})
        receiver = SocialReceiver(39, 3, 0, 2, 16.0, 0.0, 0.0, {3: 0})
        return CareWorld({3: hh}, [child], [receiver]), hh

    # ICV 12 > 8.75: time goes to the children, income to social care
    cw, hh = world()
    ledger = run_week(cw, levers("P4"))
    assert hh.mixed and hh.time_for_child and not hh.income_for_child
    assert ledger.child[3].informal == 24.0 and ledger.child[3].private_formal == 0.0
    check_partition(ledger)
    # ICV 12 < 17.5: income goes to the children
    cw, hh = world()
    ledger = run_week(cw, levers())
    assert hh.mixed and not hh.time_for_child and hh.income_for_child
    assert ledger.child[3].informal == 0.0 and ledger.child[3].private_formal == 24.0
    check_partition(ledger)


def test_supplier_chosen_in_proportion_to_time():
    hits = {4: 0, 5: 0}
    n = 4000
    for seed in range(n):
        a = household(4, statuses=("student",))          # 8 hours at class I
        b = household(5, statuses=("employed", "employed"))  # 12 + 12 at class I
        own = household(6)
        r = SocialReceiver(60, 6, 0, 1, 4.0, 0.0, 0.0, {6: 0, 4: 1, 5: 1})
        run_week(CareWorld({4: a, 5: b, 6: own}, [], [r]), seed=seed)
        for hh in (a, b):
            if any(m.used for m in hh.members):
                hits[hh.hid] += 1
    assert hits[4] + hits[5] == n
    p = 0.25
    sd = np.sqrt(n * p * (1 - p))
    assert abs(hits[4] - n * p) < 3.5 * sd


def test_other_town_time_is_excluded():
    far = household(7, town=1, statuses=("retired",))
    own = household(8)
    r = SocialReceiver(80, 8, 0, 1, 8.0, 0.0, 0.0, {8: 0, 7: 1})
    ledger = run_week(CareWorld({7: far, 8: own}, [], [r]))
    assert ledger.social[80].informal == 0.0 and ledger.social[80].unmet == 8.0
    assert far.members[0].used == 0


def test_other_town_income_buys_formal_not_time_off():
    w = Worker(90, wage=5.0)
    far = household(9, town=1, statuses=("employed",), workers=[w], budget=500.0, first_id=90)
    own = household(10)
    r = SocialReceiver(100, 10, 0, 1, 8.0, 0.0, 0.0, {10: 0, 9: 1})
    ledger = run_week(CareWorld({9: far, 10: own}, [], [r]))
    led = ledger.social[100]
    assert led.private_formal == 8.0 and w.hours_off == 0.0
    assert far.budget == pytest.approx(500.0 - 8 * 17.5)


def test_low_wage_same_town_worker_takes_time_off():
    w = Worker(110, wage=5.0)
    kin = household(11, statuses=(), workers=[w], budget=500.0)
    own = household(12)
    r = SocialReceiver(120, 12, 0, 1, 8.0, 0.0, 0.0, {12: 0, 11: 1})
    ledger = run_week(CareWorld({11: kin, 12: own}, [], [r]))
    assert ledger.social[120].informal == 8.0
    assert w.hours_off == 8.0 and ledger.hours_off_by_worker[110] == 8.0
    assert kin.budget == pytest.approx(500.0 - 8 * 5.0)


def test_receiver_never_takes_time_off_for_themselves():
    w = Worker(130, wage=5.0)
    hh = household(13, workers=[w], budget=500.0)
    r = SocialReceiver(130, 13, 0, 1, 8.0, 0.0, 0.0, {13: 0})
    ledger = run_week(CareWorld({13: hh}, [], [r]))
    assert w.hours_off == 0.0
    assert ledger.social[130].private_formal == 8.0


def test_public_first_for_eligible_receiver():
    carer = household(14, statuses=("retired",))
    r = SocialReceiver(140, 14, 0, 4, 84.0, 0.0, 0.0, {14: 0})
    ledger = run_week(CareWorld({14: carer}, [], [r]))
    led = ledger.social[140]
    assert led.public == 84.0 and led.informal == 0.0
    assert ledger.means_tested_public == 84.0 * 17.5
    check_partition(ledger)


def test_wealth_pays_when_no_kin():
    own = household(15)
    r = SocialReceiver(150, 15, 0, 1, 8.0, 200_000.0, 0.0, {15: 0})
    ledger = run_week(CareWorld({15: own}, [], [r]))
    led = ledger.social[150]
    assert led.private_formal == 8.0
    assert ledger.wealth_spend[150] == pytest.approx(8 * 17.5)


def test_theta_subsidy_accounting():
    own = household(16, budget=1000.0)
    r = SocialReceiver(160, 16, 0, 1, 8.0, 0.0, 0.0, {16: 0})
    ledger = run_week(CareWorld({16: own}, [], [r]), levers("P4"))
    assert ledger.social[160].private_formal == 8.0
    assert ledger.theta_subsidy == pytest.approx(8 * 8.75)
    assert own.budget == pytest.approx(1000.0 - 8 * 8.75)


def test_child_subsidy_capped():
    hh = household(17, budget=1000.0, child_need=36.0, n_children=1)
    hh.subsidy_left = 10.0
    child = ChildUnit(17, 0, 36.0, 1, {17: 0})
    ledger = run_week(CareWorld({17: hh}, [child], []))
    assert ledger.child[17].private_formal == 36.0
    assert ledger.child_subsidy == pytest.approx(10.0)
    assert hh.budget == pytest.approx(1000.0 - (36 * 5.0 - 10.0))


def test_allocation_is_deterministic_per_seed():
    def world():
        hs = {i: household(i, statuses=("retired", "employed"), budget=80.0) for i in range(5)}
        rs = [
            SocialReceiver(1000 + i, i, 0, 1 + i % 4, CARE_NEED_HOURS[1 + i % 4], 0.0, 0.0,
                           {j: (0 if j == i else 1) for j in range(5)})
            for i in range(5)
        ]
        return CareWorld(hs, [], rs)

    a = run_week(world(), seed=3)
    b = run_week(world(), seed=3)
    assert {k: vars(v) for k, v in a.social.items()} == {k: vars(v) for k, v in b.social.items()}
    check_partition(a)
