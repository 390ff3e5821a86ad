"""Weekly two-stage allocation of child care, then social care, over kinship networks.

Each iteration samples a receiving unit with probability proportional to its
unmet need, then a supplying household (or the receiver's own wealth) with
probability proportional to the hours it could provide, and transfers one
quantum of care. Child care is allocated first; social care gets whatever
time and income remain.

Hours live on a fixed grid (``hour_resolution``, a power of two fraction), so
every ledger identity holds exactly in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from caresim.policy import Levers

# hours per week an agent can supply, by status and kinship distance 0..III
SUPPLY_TABLE: dict[str, tuple[int, int, int, int]] = {
    "teenager": (12, 0, 0, 0),
    "student": (16, 8, 4, 0),
    "employed": (16, 12, 8, 4),
    "retired": (56, 28, 16, 8),
}
# statuses without a row of their own borrow one
SUPPLY_ROW_ALIAS = {"unemployed": "student"}

TIME_OFF = "timeOff"
BUY_FORMAL = "buyFormal"
SOCIAL = "social"
CHILD = "child"


def supply_row(status: str) -> tuple[int, int, int, int]:
    status = SUPPLY_ROW_ALIAS.get(status, status)
    return SUPPLY_TABLE.get(status, (0, 0, 0, 0))


def weekly_supply(
    status: str,
    distance: int | None,
    same_town: bool = True,
    care_need_level: int = 0,
    need_threshold: int = 2,
) -> int:
    """Informal care hours an agent can give a receiver at ``distance``."""
    if distance is None or not same_town or care_need_level >= need_threshold:
        return 0
    if not 0 <= distance <= 3:
        return 0
    return supply_row(status)[distance]


@dataclass(frozen=True)
class CarePrices:
    formal_child_care: float = 5.0
    formal_social_care: float = 17.5


@dataclass(frozen=True)
class AllocationParams:
    quantum: float = 4.0
    hour_resolution: float = 0.25
    wealth_share_brackets: tuple[float, ...] = (25_000.0, 100_000.0)
    wealth_share_rates: tuple[float, ...] = (0.02, 0.04, 0.06)
    means_test_lower: float = 14_250.0
    means_test_upper: float = 23_250.0
    means_test_tariff_step: float = 250.0
    minimum_income_guarantee: float = 189.0
    weeks_per_year: int = 52
    mixed_routing_scope: str = "kin"

    @classmethod
    def from_config(cls, cfg) -> "AllocationParams":
        return cls(
            quantum=cfg.quantum,
            hour_resolution=cfg.hour_resolution,
            wealth_share_brackets=tuple(cfg.wealth_share_brackets),
            wealth_share_rates=tuple(cfg.wealth_share_rates),
            means_test_lower=cfg.means_test_lower,
            means_test_upper=cfg.means_test_upper,
            means_test_tariff_step=cfg.means_test_tariff_step,
            minimum_income_guarantee=cfg.minimum_income_guarantee,
            weeks_per_year=cfg.weeks_per_year,
            mixed_routing_scope=cfg.mixed_routing_scope,
        )


def to_grid(hours: float, resolution: float = 0.25) -> float:
    """Round down onto the hour grid."""
    return math.floor(hours / resolution + 1e-9) * resolution


def round_to_grid(hours: float, resolution: float = 0.25) -> float:
    return round(hours / resolution) * resolution


# -- sampling -----------------------------------------------------------------


def sample_index(weights: Sequence[float], u: float) -> int | None:
    """Categorical draw given one uniform ``u`` in [0, 1); zero weights are never hit."""
    total = 0.0
    for w in weights:
        if w > 0:
            total += w
    if total <= 0:
        return None
    target = u * total
    acc = 0.0
    last = None
    for i, w in enumerate(weights):
        if w > 0:
            acc += w
            last = i
            if target < acc:
                return i
    return last


class WeightTree:
    """Fenwick tree over non-negative weights supporting the same draw as
    :func:`sample_index` in logarithmic time."""

    def __init__(self, weights: Sequence[float]):
        self.n = len(weights)
        self.w = [0.0] * self.n
        self.tree = [0.0] * (self.n + 1)
        for i, w in enumerate(weights):
            self.set(i, w)

    def set(self, i: int, w: float) -> None:
        w = w if w > 0 else 0.0
        delta = w - self.w[i]
        if delta == 0:
            return
        self.w[i] = w
        j = i + 1
        while j <= self.n:
            self.tree[j] += delta
            j += j & -j

    def total(self) -> float:
        s, j = 0.0, self.n
        while j > 0:
            s += self.tree[j]
            j -= j & -j
        return s

    def sample(self, u: float) -> int | None:
        total = self.total()
        if total <= 0:
            return None
        target = u * total
        pos, step = 0, 1 << self.n.bit_length()
        while step:
            nxt = pos + step
            if nxt <= self.n and self.tree[nxt] <= target:
                pos = nxt
                target -= self.tree[nxt]
            step >>= 1
        if pos < self.n and self.w[pos] > 0:
            return pos
        return sample_index(self.w, u)


def sample_receiver(weights: Sequence[float], rng: np.random.Generator) -> int | None:
    """Index of a unit drawn with probability proportional to its unmet need.

    Returns ``None`` when no unit has positive need, which ends the loop.
    """
    w = np.asarray(weights, dtype=float)
    if not np.any(w > 0):
        return None
    return sample_index(w.tolist(), rng.random())


def sample_supplier(supply_hours: Sequence[float], rng: np.random.Generator) -> int | None:
    """Index of a candidate supplier drawn proportionally to its available hours."""
    return sample_receiver(supply_hours, rng)


# -- prices and decisions -------------------------------------------------------


def effective_social_price(prices: CarePrices, theta: float) -> float:
    return prices.formal_social_care * (1.0 - theta)


def informal_child_care_value(prices: CarePrices, alpha: float, n_children: int) -> float:
    """Formal child-care cost avoided per informal hour: one carer covers all children."""
    return prices.formal_child_care * (1.0 - alpha) * n_children


def informal_or_formal(
    lowest_wage: float | None,
    receiver_kind: str,
    n_children: int,
    prices: CarePrices,
    theta: float,
    alpha: float,
) -> str:
    """Whether a household's care income is better spent on formal care or on
    its lowest-paid worker taking time off."""
    if lowest_wage is None:
        return BUY_FORMAL
    if receiver_kind == SOCIAL:
        price = effective_social_price(prices, theta)
    else:
        price = informal_child_care_value(prices, alpha, n_children)
    return TIME_OFF if lowest_wage < price else BUY_FORMAL


def means_test(
    level: int,
    gamma: int,
    savings: float,
    weekly_income: float,
    weekly_cost: float,
    params: AllocationParams = AllocationParams(),
) -> float:
    """Weekly public contribution to a receiver's social-care cost.

    Below the lower savings threshold the state pays whatever the receiver
    cannot afford without income dropping under the minimum income guarantee.
    Between the thresholds the receiver also pays a tariff of one pound per
    ``tariff_step`` of savings above the lower threshold. At or above the upper
    threshold, or below the eligibility level, the state pays nothing.
    """
    if level < gamma or savings >= params.means_test_upper or weekly_cost <= 0:
        return 0.0
    tariff = 0.0
    if savings >= params.means_test_lower:
        tariff = (savings - params.means_test_lower) / params.means_test_tariff_step
    user_share = max(0.0, weekly_income - params.minimum_income_guarantee) + tariff
    return max(0.0, weekly_cost - user_share)


def wealth_share(wealth: float, params: AllocationParams = AllocationParams()) -> float:
    import bisect

    return params.wealth_share_rates[bisect.bisect_left(list(params.wealth_share_brackets), wealth)]


def wealth_weekly_budget(wealth: float, params: AllocationParams = AllocationParams()) -> float:
    if wealth <= 0:
        return 0.0
    return wealth * wealth_share(wealth, params) / params.weeks_per_year


def wealth_funded_hours(
    wealth: float,
    prices: CarePrices,
    theta: float,
    params: AllocationParams = AllocationParams(),
) -> float:
    """Weekly formal social-care hours a receiver's financial wealth can fund."""
    budget = wealth_weekly_budget(wealth, params)
    if budget <= 0:
        return 0.0
    price = effective_social_price(prices, theta)
    return math.inf if price <= 0 else budget / price


def public_hours_for(
    level: int,
    need: float,
    savings: float,
    weekly_income: float,
    levers: Levers,
    prices: CarePrices,
    params: AllocationParams = AllocationParams(),
) -> float:
    """Weekly publicly funded hours: the means-tested contribution converted at
    the effective social-care price, rounded down to the hour grid and capped
    at the need."""
    if level < levers.gamma or need <= 0:
        return 0.0
    price = effective_social_price(prices, levers.theta)
    contribution = means_test(level, levers.gamma, savings, weekly_income, need * price, params)
    if contribution <= 0:
        return 0.0
    hours = need if price <= 0 else contribution / price
    return min(need, to_grid(hours, params.hour_resolution))


# -- allocation state -----------------------------------------------------------


@dataclass
class MemberSupply:
    agent_id: int
    capacity: tuple[float, float, float, float]
    used: float = 0.0
    used_by_class: list = field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0])

    def available(self, distance: int) -> float:
        total = self.capacity[0] - self.used
        if distance == 0:
            return total
        return min(total, self.capacity[distance] - self.used_by_class[distance])

    def give(self, hours: float, distance: int) -> None:
        self.used += hours
        self.used_by_class[distance] += hours


@dataclass
class Worker:
    agent_id: int
    wage: float
    max_off: float = 40.0
    hours_off: float = 0.0

    @property
    def room(self) -> float:
        return self.max_off - self.hours_off


@dataclass
class CareHousehold:
    hid: int
    town: int
    members: list[MemberSupply] = field(default_factory=list)
    workers: list[Worker] = field(default_factory=list)
    budget: float = 0.0
    child_need: float = 0.0
    n_children: int = 0
    subsidy_left: float = 0.0
    mixed: bool = False
    # routing for mixed households during the child-care stage
    time_for_child: bool = True
    income_for_child: bool = True

    # cached full-quantum availability per distance class, reset on every gift
    _cache: dict = field(default_factory=dict, repr=False)

    def time_available(self, distance: int, q: float, exclude: int | None = None) -> float:
        if exclude is None:
            key = (distance, q)
            got = self._cache.get(key)
            if got is None:
                got = self._cache[key] = self._time_available(distance, q, None)
            return got
        return self._time_available(distance, q, exclude)

    def give(self, member: MemberSupply, hours: float, distance: int) -> None:
        member.give(hours, distance)
        self._cache.clear()

    def _time_available(self, distance: int, q: float, exclude: int | None) -> float:
        total = 0.0
        for m in self.members:
            if m.agent_id == exclude:
                continue
            a = m.available(distance)
            if a >= q:
                total += a
        return total

    def pick_member(self, distance: int, q: float, exclude: int | None = None) -> MemberSupply | None:
        best, best_a = None, 0.0
        for m in self.members:
            if m.agent_id == exclude:
                continue
            a = m.available(distance)
            if a >= q and a > best_a:
                best, best_a = m, a
        return best

    def lowest_wage_worker(self, q: float) -> Worker | None:
        best = None
        for w in self.workers:
            if w.room >= q and (best is None or w.wage < best.wage):
                best = w
        return best


@dataclass
class ChildUnit:
    hid: int
    town: int
    need: float
    n_children: int
    network: dict[int, int]  # household id -> kinship distance class


@dataclass
class SocialReceiver:
    agent_id: int
    hid: int
    town: int
    level: int
    need: float
    savings: float
    weekly_income: float
    network: dict[int, int]


@dataclass
class CareWorld:
    households: dict[int, CareHousehold]
    child_units: list[ChildUnit]
    social_receivers: list[SocialReceiver]


@dataclass
class ReceiverLedger:
    need: float
    informal: float = 0.0
    private_formal: float = 0.0
    public: float = 0.0
    unmet: float = 0.0
    # receiver inputs kept for counterfactual accounting
    level: int = 0
    savings: float = 0.0
    weekly_income: float = 0.0
    n_children: int = 0

    @property
    def delivered(self) -> float:
        return self.informal + self.private_formal + self.public


@dataclass
class HouseholdLedger:
    hours_off: float = 0.0
    private_spend: float = 0.0
    public_spend: float = 0.0


@dataclass
class CareLedger:
    """Weekly care flows. Multiply by weeks-per-year for annual totals."""

    social: dict[int, ReceiverLedger] = field(default_factory=dict)
    child: dict[int, ReceiverLedger] = field(default_factory=dict)
    households: dict[int, HouseholdLedger] = field(default_factory=dict)
    wealth_spend: dict[int, float] = field(default_factory=dict)
    informal_social_by_carer: dict[int, float] = field(default_factory=dict)
    hours_off_by_worker: dict[int, float] = field(default_factory=dict)
    child_subsidy: float = 0.0
    theta_subsidy: float = 0.0
    means_tested_public: float = 0.0
    transfers: int = 0

    def household(self, hid: int) -> HouseholdLedger:
        hl = self.households.get(hid)
        if hl is None:
            hl = self.households[hid] = HouseholdLedger()
        return hl

    def totals(self) -> dict[str, float]:
        s = self.social.values()
        c = self.child.values()
        return {
            "social_need": math.fsum(r.need for r in s),
            "informal": math.fsum(r.informal for r in s),
            "private_formal": math.fsum(r.private_formal for r in s),
            "public": math.fsum(r.public for r in s),
            "unmet": math.fsum(r.unmet for r in s),
            "child_need": math.fsum(r.need for r in c),
            "child_informal": math.fsum(r.informal for r in c),
            "child_formal": math.fsum(r.private_formal for r in c),
            "child_unmet": math.fsum(r.unmet for r in c),
            "hours_off": math.fsum(h.hours_off for h in self.households.values()),
        }


# -- the weekly loop -------------------------------------------------------------


class _Draws:
    """Buffered uniforms from one generator; consumption order is deterministic."""

    __slots__ = ("gen", "buf", "i")

    def __init__(self, gen: np.random.Generator, size: int = 4096):
        self.gen = gen
        self.buf = gen.random(size)
        self.i = 0

    def __call__(self) -> float:
        if self.i >= len(self.buf):
            self.buf = self.gen.random(len(self.buf))
            self.i = 0
        u = self.buf[self.i]
        self.i += 1
        return float(u)


def _mark_mixed(world: CareWorld, prices: CarePrices, levers: Levers, scope: str) -> None:
    """Route a household's time to its costlier need and its income to the cheaper one.

    A household is mixed when it has child-care need and also social-care
    need among its members (or, with scope ``kin``, among first-degree kin in
    the same town whom it could help).
    """
    social_hids: set[int] = set()
    for r in world.social_receivers:
        social_hids.add(r.hid)
        if scope == "kin":
            for hid, d in r.network.items():
                if d <= 1:
                    hh = world.households.get(hid)
                    if hh is not None and hh.town == r.town:
                        social_hids.add(hid)
    social_price = effective_social_price(prices, levers.theta)
    for hh in world.households.values():
        if hh.child_need <= 0 or hh.hid not in social_hids:
            continue
        hh.mixed = True
        icv = informal_child_care_value(prices, levers.alpha, hh.n_children)
        if icv < social_price:
            hh.time_for_child = False
        else:
            hh.income_for_child = False


def allocate_week(
    world: CareWorld,
    levers: Levers,
    prices: CarePrices,
    rng: np.random.Generator,
    params: AllocationParams = AllocationParams(),
) -> CareLedger:
    """Allocate one representative week of care and return its ledger.

    ``world`` is mutated: supplier time, budgets and worker hours are consumed.
    """
    ledger = CareLedger()
    draw = _Draws(rng)
    quantum = params.quantum
    hh_map = world.households
    _mark_mixed(world, prices, levers, params.mixed_routing_scope)

    # ---- stage 1: child care, households as receiving units
    units = [u for u in world.child_units if u.need > 0]
    for u in world.child_units:
        ledger.child[u.hid] = ReceiverLedger(u.need, n_children=u.n_children)
    remaining = [u.need for u in units]
    weights = WeightTree(remaining)
    cands_by_unit = []
    for u in units:
        cands = []
        for hid, d in sorted(u.network.items()):
            hh = hh_map.get(hid)
            if hh is not None:
                cands.append((hh, d, hh.town == u.town, hid == u.hid))
        cands_by_unit.append(cands)
    child_price = prices.formal_child_care
    while True:
        i = weights.sample(draw())
        if i is None:
            break
        u = units[i]
        q = min(quantum, remaining[i])
        led = ledger.child[u.hid]
        options = []  # (weight, household, distance, resource, worker)
        for hh, d, same_town, own in cands_by_unit[i]:
            if same_town and hh.time_for_child:
                t = hh.time_available(d, q)
                if t > 0:
                    options.append((t, hh, d, "time", None))
            if own and hh.income_for_child and hh.budget > 0:
                w = _time_off_worker(hh, q, same_town, None, CHILD, u.n_children, prices, levers)
                cash = w.wage * q if w is not None else _child_formal_cost(hh, q, child_price, levers.alpha)
                if hh.budget >= cash:
                    per_hour = max(child_price * (1 - levers.alpha), 1e-12)
                    options.append((hh.budget / per_hour, hh, d, "income", w))
        j = sample_index([o[0] for o in options], draw())
        if j is None:
            weights.set(i, 0.0)
            continue
        _, hh, d, resource, w = options[j]
        if resource == "time":
            hh.give(hh.pick_member(d, q), q, d)
            led.informal += q
        elif w is not None:
            _take_time_off(ledger, hh, w, q)
            led.informal += q
        else:
            subsidy = min(levers.alpha * child_price * q, hh.subsidy_left)
            cost = child_price * q - subsidy
            hh.subsidy_left -= subsidy
            hh.budget -= cost
            led.private_formal += q
            hl = ledger.household(hh.hid)
            hl.private_spend += cost
            hl.public_spend += subsidy
            ledger.child_subsidy += subsidy
        remaining[i] -= q
        weights.set(i, remaining[i])
        ledger.transfers += 1
    for u, rem in zip(units, remaining):
        ledger.child[u.hid].unmet = rem

    # ---- stage 2: social care, individuals as receiving units
    social_price_full = prices.formal_social_care
    social_price = effective_social_price(prices, levers.theta)
    receivers = list(world.social_receivers)
    remaining = []
    wealth_budget = []
    for r in receivers:
        led = ledger.social[r.agent_id] = ReceiverLedger(
            r.need, level=r.level, savings=r.savings, weekly_income=r.weekly_income
        )
        # the state funds eligible receivers first, subject to the means test
        hours = public_hours_for(r.level, r.need, r.savings, r.weekly_income, levers, prices, params)
        if hours > 0:
            led.public = hours
            ledger.means_tested_public += hours * social_price
            ledger.theta_subsidy += hours * (social_price_full - social_price)
            ledger.household(r.hid).public_spend += hours * social_price_full
        remaining.append(r.need - hours)
        led.unmet = r.need - hours
        wealth_budget.append(wealth_weekly_budget(r.savings, params))
    weights = WeightTree(remaining)
    cands_by_unit = []
    for r in receivers:
        cands = []
        for hid, d in sorted(r.network.items()):
            hh = hh_map.get(hid)
            if hh is not None:
                cands.append((hh, d, hh.town == r.town, r.agent_id if hid == r.hid else None))
        cands_by_unit.append(cands)
    theta_per_hour = social_price_full - social_price
    while True:
        i = weights.sample(draw())
        if i is None:
            break
        r = receivers[i]
        q = min(quantum, remaining[i])
        led = ledger.social[r.agent_id]
        options = []
        for hh, d, same_town, excl in cands_by_unit[i]:
            if same_town:
                t = hh.time_available(d, q, exclude=excl)
                if t > 0:
                    options.append((t, hh, d, "time", None))
            if d <= 1 and hh.budget > 0:
                w = _time_off_worker(hh, q, same_town, r.agent_id, SOCIAL, 0, prices, levers)
                cash = w.wage * q if w is not None else social_price * q
                if hh.budget >= cash:
                    options.append((hh.budget / max(social_price, 1e-12), hh, d, "income", w))
        if wealth_budget[i] > 0 and wealth_budget[i] >= social_price * q:
            options.append((wealth_budget[i] / max(social_price, 1e-12), None, 0, "wealth", None))
        j = sample_index([o[0] for o in options], draw())
        if j is None:
            weights.set(i, 0.0)
            continue
        _, hh, d, resource, w = options[j]
        if resource == "time":
            m = hh.pick_member(d, q, exclude=r.agent_id)
            hh.give(m, q, d)
            led.informal += q
            _add(ledger.informal_social_by_carer, m.agent_id, q)
        elif resource == "income" and w is not None:
            _take_time_off(ledger, hh, w, q)
            led.informal += q
            _add(ledger.informal_social_by_carer, w.agent_id, q)
        elif resource == "income":
            cost = social_price * q
            hh.budget -= cost
            led.private_formal += q
            hl = ledger.household(hh.hid)
            hl.private_spend += cost
            hl.public_spend += theta_per_hour * q
            ledger.theta_subsidy += theta_per_hour * q
        else:
            cost = social_price * q
            wealth_budget[i] -= cost
            led.private_formal += q
            _add(ledger.wealth_spend, r.agent_id, cost)
            ledger.theta_subsidy += theta_per_hour * q
        remaining[i] -= q
        weights.set(i, remaining[i])
        ledger.transfers += 1
    for r, rem in zip(receivers, remaining):
        ledger.social[r.agent_id].unmet = rem
    return ledger


def _time_off_worker(
    hh: CareHousehold,
    q: float,
    same_town: bool,
    receiver_id: int | None,
    kind: str,
    n_children: int,
    prices: CarePrices,
    levers: Levers,
) -> Worker | None:
    """The worker who takes time off if the household's income is drawn, or
    ``None`` when the income buys formal care instead.

    Time off is informal care, so it is only possible in the receiver's town
    and never by the receiver.
    """
    if not same_town:
        return None
    best = None
    for w in hh.workers:
        if w.room >= q and w.agent_id != receiver_id and (best is None or w.wage < best.wage):
            best = w
    if best is None:
        return None
    branch = informal_or_formal(best.wage, kind, n_children, prices, levers.theta, levers.alpha)
    return best if branch == TIME_OFF else None


def _take_time_off(ledger: CareLedger, hh: CareHousehold, w: Worker, q: float) -> None:
    w.hours_off += q
    hh.budget -= w.wage * q
    ledger.household(hh.hid).hours_off += q
    _add(ledger.hours_off_by_worker, w.agent_id, q)


def _add(d: dict, key: int, value: float) -> None:
    d[key] = d.get(key, 0.0) + value


def _child_formal_cost(hh: CareHousehold, q: float, price: float, alpha: float) -> float:
    return price * q - min(alpha * price * q, hh.subsidy_left)
