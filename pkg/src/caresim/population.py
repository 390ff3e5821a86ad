"""Agents, households, towns, kinship networks, partnerships and relocation.

Agents refer to each other by id. Dead agents stay in ``World.agents`` so
genealogy links (grandparents, aunts) survive their deaths; only living
agents appear in households and in kinship networks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from caresim.allocation import supply_row
from caresim.economy import logistic
from caresim.errors import ConfigError, TableError
from caresim.health import CARE_NEED_HOURS, child_net_need, parse_age_band

STATUSES = ("child", "teenager", "student", "employed", "unemployed", "retired")
ADULT_STATUSES = frozenset(("student", "employed", "unemployed", "retired"))
MALE, FEMALE = "male", "female"

# distance classes: 0 same household, 1..3 for classes I..III
CLASS_LABELS = ("0", "I", "II", "III")
LHA_WEEKLY = {1: (80.0, 100.0, 120.0), 2: (100.0, 130.0, 160.0), 3: (140.0, 180.0, 230.0)}


@dataclass(eq=False, slots=True)
class Agent:
    id: int
    sex: str
    birth_year: int
    mother_id: int | None = None
    father_id: int | None = None
    partner_id: int | None = None
    children_ids: list = field(default_factory=list)
    household_id: int | None = None
    status: str = "child"
    care_need_level: int = 0
    cumulative_unmet_care: float = 0.0
    ses_group: int = 1
    education_level: int = 0
    work_experience: float = 0.0
    hourly_wage: float = 0.0
    financial_wealth: float = 0.0
    total_wealth: float = 0.0
    accumulated_salary: float = 0.0
    final_wage: float = 0.0
    pension: float = 0.0
    worked_share: float = 0.0
    years_in_town: int = 0
    alive: bool = True
    ill_health_retired: bool = False
    wealth_assigned: bool = False

    def age(self, year: int) -> int:
        return year - self.birth_year

    @property
    def parent_ids(self) -> tuple[int, ...]:
        return tuple(p for p in (self.mother_id, self.father_id) if p is not None)


@dataclass(eq=False)
class Household:
    id: int
    town_id: int
    member_ids: list = field(default_factory=list)
    years_at_address: int = 0
    weekly_income: float = 0.0
    care_income_budget: float = 0.0
    child_care_need: float = 0.0

    @property
    def size(self) -> int:
        return len(self.member_ids)


@dataclass(eq=False)
class Town:
    id: int
    x: float
    y: float
    density_weight: float
    lha_band: int
    capacity: int = 0
    occupied: int = 0
    lha_rates: tuple = (100.0, 130.0, 160.0)

    def __post_init__(self) -> None:
        if min(self.lha_rates) <= 0:
            raise ValueError("LHA rates must be positive")

    @property
    def free_houses(self) -> int:
        return max(0, self.capacity - self.occupied)

    def lha_rate(self, household_size: int) -> float:
        return self.lha_rates[min(max(household_size, 1), len(self.lha_rates)) - 1]


# -- map and tables ------------------------------------------------------------


def synthetic_map(size: int = 3) -> list[Town]:
    """A ``size`` x ``size`` grid with a dense centre and a cheaper periphery."""
    if size < 1:
        raise ConfigError("map size must be at least 1")
    c = (size - 1) / 2.0
    scale = max(c, 1.0)
    towns = []
    for y in range(size):
        for x in range(size):
            r2 = ((x - c) ** 2 + (y - c) ** 2) / scale**2
            # a little east-west asymmetry so towns at equal distance differ
            w = round(0.5 + 1.3 * math.exp(-1.5 * r2) + 0.1 * (x < c) - 0.1 * (x > c), 3)
            band = 3 if w >= 1.5 else 2 if w >= 0.8 else 1
            towns.append(Town(len(towns), float(x), float(y), w, band, lha_rates=LHA_WEEKLY[band]))
    return towns


def load_map(path: str | Path) -> list[Town]:
    """Read ``townId,x,y,densityWeight,lhaBand``."""
    towns = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["townId", "x", "y", "densityWeight", "lhaBand"]:
            raise TableError(f"{path}: header must be 'townId,x,y,densityWeight,lhaBand'")
        for row in reader:
            band = int(row["lhaBand"])
            if band not in LHA_WEEKLY:
                raise TableError(f"{path}: lhaBand must be one of {sorted(LHA_WEEKLY)}")
            towns.append(
                Town(
                    int(row["townId"]),
                    float(row["x"]),
                    float(row["y"]),
                    float(row["densityWeight"]),
                    band,
                    lha_rates=LHA_WEEKLY[band],
                )
            )
    if not towns:
        raise TableError(f"{path}: no towns")
    towns.sort(key=lambda t: t.id)
    if [t.id for t in towns] != list(range(len(towns))):
        raise TableError(f"{path}: town ids must be 0..n-1")
    return towns


def set_capacities(towns: Sequence[Town], total_houses: int) -> None:
    w = sum(t.density_weight for t in towns)
    for t in towns:
        t.capacity = max(1, math.ceil(total_houses * t.density_weight / w))


DEFAULT_DIVORCE_BANDS = (
    ("16-24", 0.02),
    ("25-34", 0.02),
    ("35-44", 0.015),
    ("45-54", 0.01),
    ("55-64", 0.005),
    ("65+", 0.002),
)


class DivorceTable:
    """Annual divorce probability by the male partner's age band."""

    def __init__(self, rows: Iterable[tuple[int, int, float]]):
        self.rows = list(rows)

    def probability(self, male_age: int) -> float:
        for lo, hi, p in self.rows:
            if lo <= male_age <= hi:
                return p
        return 0.0

    @classmethod
    def default(cls) -> "DivorceTable":
        return cls((*parse_age_band(b), p) for b, p in DEFAULT_DIVORCE_BANDS)

    @classmethod
    def constant(cls, p: float) -> "DivorceTable":
        return cls([(0, 10_000, p)])

    @classmethod
    def from_csv(cls, path: str | Path) -> "DivorceTable":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["ageBand", "probability"]:
                raise TableError(f"{path}: header must be 'ageBand,probability'")
            for row in reader:
                p = float(row["probability"])
                if not 0 <= p <= 1:
                    raise TableError(f"{path}: probability out of range")
                rows.append((*parse_age_band(row["ageBand"]), p))
        return cls(rows)


# -- parameters -------------------------------------------------------------------


@dataclass(frozen=True)
class PartnershipParams:
    min_age: int = 17
    max_age: int = 60
    base_prob: float = 0.35
    geo_weight: float = 0.5
    age_weight: float = 0.3
    ses_weight: float = 0.5

    @classmethod
    def from_config(cls, cfg) -> "PartnershipParams":
        return cls(
            cfg.partnership_min_age,
            cfg.partnership_max_age,
            cfg.partnership_base_prob,
            cfg.partner_geo_weight,
            cfg.partner_age_weight,
            cfg.partner_ses_weight,
        )


@dataclass(frozen=True)
class RelocationParams:
    care_weight: float = 1.0
    housing_weight: float = 0.5
    lha_weight: float = 0.5  # per 100 currency units of weekly rent
    ses_weight: float = 0.5
    care_lambda: float = 0.02
    kappa: float = 0.05
    cap_years: float = 20.0
    intercept: float = -4.0
    care_move_base: float = 0.5
    care_move_half_supply: float = 28.0
    care_move_min_level: int = 3
    need_threshold: int = 2

    @classmethod
    def from_config(cls, cfg) -> "RelocationParams":
        return cls(
            cfg.attraction_care_weight,
            cfg.attraction_housing_weight,
            cfg.attraction_lha_weight,
            cfg.attraction_ses_weight,
            cfg.care_attraction_lambda,
            cfg.relocation_cost_kappa,
            cfg.relocation_cost_cap_years,
            cfg.relocation_intercept,
            cfg.care_move_base,
            cfg.care_move_half_supply,
            cfg.care_move_min_level,
            cfg.supply_need_threshold,
        )


# -- world -----------------------------------------------------------------------


class World:
    """All agents (living and dead), households and towns of one run."""

    def __init__(self, towns: Sequence[Town], adult_age: int = 16):
        self.towns = list(towns)
        self.agents: dict[int, Agent] = {}
        self.living: dict[int, Agent] = {}
        self.households: dict[int, Household] = {}
        self.adult_age = adult_age
        self.year = 0
        self._next_agent = 0
        self._next_household = 0
        self._kin: dict[int, dict[int, int]] = {}

    # membership
    def new_agent(self, sex: str, birth_year: int, **kw) -> Agent:
        a = Agent(self._next_agent, sex, birth_year, **kw)
        self._next_agent += 1
        self.agents[a.id] = a
        self.living[a.id] = a
        for pid in a.parent_ids:
            self.agents[pid].children_ids.append(a.id)
        return a

    def new_household(self, town_id: int) -> Household:
        h = Household(self._next_household, town_id)
        self._next_household += 1
        self.households[h.id] = h
        self.towns[town_id].occupied += 1
        return h

    def _drop_if_empty(self, h: Household) -> None:
        if not h.member_ids:
            del self.households[h.id]
            self.towns[h.town_id].occupied -= 1

    def move_agent(self, agent: Agent, household: Household) -> None:
        old = self.households.get(agent.household_id) if agent.household_id is not None else None
        if old is household:
            return
        if old is not None:
            old.member_ids.remove(agent.id)
        household.member_ids.append(agent.id)
        agent.household_id = household.id
        if old is None or old.town_id != household.town_id:
            agent.years_in_town = 0
        if old is not None:
            self._drop_if_empty(old)

    def move_household(self, h: Household, town_id: int) -> None:
        if h.town_id == town_id:
            return
        self.towns[h.town_id].occupied -= 1
        self.towns[town_id].occupied += 1
        h.town_id = town_id
        h.years_at_address = 0
        for aid in h.member_ids:
            self.agents[aid].years_in_town = 0

    def kill(self, agent: Agent) -> None:
        agent.alive = False
        self.living.pop(agent.id, None)
        if agent.partner_id is not None:
            p = self.agents[agent.partner_id]
            if p.partner_id == agent.id:
                p.partner_id = None
        h = self.households.get(agent.household_id)
        if h is not None:
            h.member_ids.remove(agent.id)
            self._drop_if_empty(h)
        agent.household_id = None

    def members(self, h: Household) -> list[Agent]:
        return [self.agents[i] for i in h.member_ids]

    def household_of(self, agent: Agent) -> Household:
        return self.households[agent.household_id]

    def town_of(self, agent: Agent) -> Town:
        return self.towns[self.households[agent.household_id].town_id]

    def has_adult(self, h: Household) -> bool:
        return any(self.agents[i].age(self.year) >= self.adult_age for i in h.member_ids)

    # kinship
    def invalidate_kin(self) -> None:
        self._kin.clear()

    def relatives(self, agent: Agent) -> dict[int, int]:
        """Living relatives of ``agent`` as id -> class (1..3), affinal links included."""
        got = self._kin.get(agent.id)
        if got is None:
            got = self._kin[agent.id] = _relatives(self.agents, agent)
        return got

    def kin_network(self, agent: Agent) -> dict[int, int]:
        """Household id -> nearest distance class over ``agent``'s living kin."""
        net = {agent.household_id: 0}
        for rid, d in self.relatives(agent).items():
            hid = self.agents[rid].household_id
            if net.get(hid, 4) > d:
                net[hid] = d
        return net

    def household_network(self, h: Household) -> dict[int, int]:
        net: dict[int, int] = {h.id: 0}
        for aid in h.member_ids:
            for hid, d in self.kin_network(self.agents[aid]).items():
                if net.get(hid, 4) > d:
                    net[hid] = d
        return net

    def check_partition(self) -> None:
        """Raise AssertionError if a living agent is not in exactly one household."""
        seen: dict[int, int] = {}
        for h in self.households.values():
            assert h.member_ids, f"empty household {h.id}"
            assert 0 <= h.town_id < len(self.towns)
            for aid in h.member_ids:
                assert aid not in seen, f"agent {aid} in two households"
                seen[aid] = h.id
                assert self.agents[aid].household_id == h.id
        assert set(seen) == set(self.living), "household membership differs from living set"
        for t in self.towns:
            assert t.occupied == sum(1 for h in self.households.values() if h.town_id == t.id)


def _blood(agents: dict[int, Agent], a: Agent) -> dict[int, int]:
    """Blood relatives of ``a`` by class, dead ones included."""
    # closest classes are filled first so later writes never overwrite
    out: dict[int, int] = {}
    parents = a.parent_ids
    for p in parents:
        out[p] = 1
    for c in a.children_ids:
        out[c] = 1
    siblings = set()
    for p in parents:
        siblings.update(agents[p].children_ids)
    siblings.discard(a.id)
    for c in a.children_ids:
        for g in agents[c].children_ids:
            out.setdefault(g, 2)
    for p in parents:
        for gp in agents[p].parent_ids:
            out.setdefault(gp, 2)
    for s in siblings:
        out.setdefault(s, 2)
    for p in parents:
        for gp in agents[p].parent_ids:
            for au in agents[gp].children_ids:
                if au not in parents:
                    out.setdefault(au, 3)
    for s in siblings:
        for n in agents[s].children_ids:
            out.setdefault(n, 3)
    out.pop(a.id, None)
    return out


def _relatives(agents: dict[int, Agent], a: Agent) -> dict[int, int]:
    """Blood kin of ``a``, of ``a``'s partner, and partners of ``a``'s blood kin."""
    out = _blood(agents, a)
    for rid, d in list(out.items()):
        pid = agents[rid].partner_id
        # a dead relative keeps a stale partner id, so require the link both ways
        if pid is None or pid == a.id or agents[pid].partner_id != rid:
            continue
        if out.get(pid, 4) > d:
            out[pid] = d
    if a.partner_id is not None:
        partner = agents[a.partner_id]
        for rid, d in _blood(agents, partner).items():
            if rid != a.id and out.get(rid, 4) > d:
                out[rid] = d
        out[a.partner_id] = 1
    return {i: d for i, d in out.items() if agents[i].alive}


def kinship_distance(world: World, a: Agent, b: Agent) -> int | None:
    """Distance class between two living agents: 0 if they share a household,
    otherwise 1..3 for classes I..III, or ``None`` when not kin."""
    if a.id == b.id or a.household_id == b.household_id:
        return 0
    return world.relatives(a).get(b.id)


# -- partnership ------------------------------------------------------------------


def partner_weight(
    geo_distance: float | np.ndarray,
    age_diff: float | np.ndarray,
    ses_diff: float | np.ndarray,
    params: PartnershipParams,
):
    return np.exp(
        -params.geo_weight * np.asarray(geo_distance)
        - params.age_weight * np.abs(age_diff)
        - params.ses_weight * np.abs(ses_diff)
    )


def eligible_singles(world: World, params: PartnershipParams) -> list[Agent]:
    y = world.year
    return [
        a
        for a in world.living.values()
        if a.partner_id is None
        and a.status in ADULT_STATUSES
        and params.min_age <= a.age(y) <= params.max_age
    ]


def form_partnerships(
    world: World,
    singles: Sequence[Agent],
    params: PartnershipParams,
    rng: np.random.Generator,
    relocation: RelocationParams | None = None,
) -> list[tuple[Agent, Agent]]:
    """Pair single men with single women and set up their joint household.

    Men are visited in random order; each samples one still-unpaired woman
    with the exponential kernel weight and pairs with probability
    ``params.base_prob``. Close kin (class II or nearer) never pair.
    """
    men = [a for a in singles if a.sex == MALE]
    women = [a for a in singles if a.sex == FEMALE]
    if not men or not women:
        return []
    y = world.year
    towns = world.towns
    wx = np.array([towns[world.households[w.household_id].town_id].x for w in women])
    wy = np.array([towns[world.households[w.household_id].town_id].y for w in women])
    wage = np.array([w.age(y) for w in women], dtype=float)
    wses = np.array([w.ses_group for w in women], dtype=float)
    open_ = np.ones(len(women), dtype=bool)
    pairs = []
    order = rng.permutation(len(men))
    draws = rng.random((len(men), 2))
    for k, mi in enumerate(order):
        if not open_.any():
            break
        m = men[mi]
        t = towns[world.households[m.household_id].town_id]
        geo = np.hypot(wx - t.x, wy - t.y)
        w = partner_weight(geo, wage - m.age(y), wses - m.ses_group, params) * open_
        cum = np.cumsum(w)
        if cum[-1] <= 0:
            continue
        j = int(np.searchsorted(cum, draws[k, 0] * cum[-1], side="right"))
        j = min(j, len(women) - 1)
        if draws[k, 1] >= params.base_prob:
            continue
        woman = women[j]
        d = world.relatives(m).get(woman.id)
        if d is not None and d <= 2:
            continue
        open_[j] = False
        pairs.append((m, woman))
    for m, woman in pairs:
        _join(world, m, woman, rng, relocation or RelocationParams())
    if pairs:
        world.invalidate_kin()
    return pairs


def _dependants(world: World, parent: Agent) -> list[Agent]:
    """Co-resident children of ``parent`` below adult age."""
    out = []
    for cid in parent.children_ids:
        c = world.agents[cid]
        if c.alive and c.household_id == parent.household_id and c.age(world.year) < world.adult_age:
            out.append(c)
    return out


def _join(world: World, m: Agent, w: Agent, rng: np.random.Generator, params: RelocationParams) -> None:
    m.partner_id, w.partner_id = w.id, m.id
    coin = rng.random()
    movers = [m, w] + _dependants(world, m) + _dependants(world, w)
    hm, hw = world.household_of(m), world.household_of(w)
    town = hm.town_id if coin < 0.5 else hw.town_id
    # a sole occupant's home can be kept; otherwise a new house is needed
    for h in ((hm, hw) if coin < 0.5 else (hw, hm)):
        if all(world.agents[i] in movers for i in h.member_ids):
            for a in movers:
                world.move_agent(a, h)
            return
    if world.towns[town].free_houses <= 0:
        alt = choose_destination(world, None, rng, params, size=len(movers))
        if alt is None:
            for a in movers:
                world.move_agent(a, hm)
            return
        town = alt
    h = world.new_household(town)
    for a in movers:
        world.move_agent(a, h)


def dissolve_partnerships(
    world: World,
    couples: Sequence[tuple[Agent, Agent]],
    table: DivorceTable,
    rng: np.random.Generator,
    relocation: RelocationParams | None = None,
) -> list[tuple[Agent, Agent]]:
    """Divorce couples with the male partner's age-band probability.

    The man moves alone to a new house; the couple's children stay with the
    mother.
    """
    params = relocation or RelocationParams()
    divorced = []
    u = rng.random(len(couples))
    for (m, w), ui in zip(couples, u):
        if ui < table.probability(m.age(world.year)):
            divorced.append((m, w))
    for m, w in divorced:
        m.partner_id = None
        w.partner_id = None
        town = choose_destination(world, None, rng, params, size=1)
        if town is None:
            town = world.household_of(m).town_id
            world.towns[town].capacity += 1
        h = world.new_household(town)
        world.move_agent(m, h)
    if divorced:
        world.invalidate_kin()
    return divorced


def couples(world: World) -> list[tuple[Agent, Agent]]:
    out = []
    for a in world.living.values():
        if a.sex == MALE and a.partner_id is not None:
            out.append((a, world.agents[a.partner_id]))
    return out


# -- relocation -------------------------------------------------------------------


@dataclass
class TownStats:
    """Per-town SES profile (shares by group 1..5 among adults)."""

    ses_profile: np.ndarray

    def __post_init__(self) -> None:
        self._tail = np.cumsum(self.ses_profile[::-1])[::-1].tolist()

    def share_at_or_above(self, ses: int) -> float:
        return self._tail[ses - 1]


def town_stats(world: World, n_groups: int = 5) -> list[TownStats]:
    counts = np.zeros((len(world.towns), n_groups))
    for h in world.households.values():
        for aid in h.member_ids:
            a = world.agents[aid]
            if a.status in ADULT_STATUSES:
                counts[h.town_id, a.ses_group - 1] += 1
    out = []
    for row in counts:
        total = row.sum()
        out.append(TownStats(row / total if total > 0 else np.full(n_groups, 1.0 / n_groups)))
    return out


def kin_care_hours(world: World, h: Household, need_threshold: int = 2) -> np.ndarray:
    """Weekly hours kin households in each town could give ``h`` (own household excluded)."""
    hours = np.zeros(len(world.towns))
    for hid, d in world.household_network(h).items():
        if hid == h.id:
            continue
        k = world.households[hid]
        s = 0
        for aid in k.member_ids:
            a = world.agents[aid]
            if a.care_need_level < need_threshold:
                s += supply_row(a.status)[d]
        hours[k.town_id] += s
    return hours


def care_attraction(kin_hours: float, lam: float) -> float:
    return 1.0 - math.exp(-lam * kin_hours)


def town_attraction(
    world: World,
    h: Household | None,
    town: Town,
    kin_hours: float = 0.0,
    params: RelocationParams = RelocationParams(),
    stats: TownStats | None = None,
    size: int | None = None,
    ses: int | None = None,
) -> float:
    """Total attraction of ``town`` for household ``h``.

    Care attraction saturates in the weekly hours kin there could supply;
    housing availability is the share of free houses; rent is the weekly LHA
    rate for the household's size, per 100 currency units.
    """
    if size is None:
        size = h.size if h is not None else 1
    if ses is None:
        ses = _household_ses(world, h) if h is not None else 3
    avail = town.free_houses / town.capacity if town.capacity > 0 else 0.0
    ses_share = stats.share_at_or_above(ses) if stats is not None else 0.0
    return (
        params.care_weight * care_attraction(kin_hours, params.care_lambda)
        + params.housing_weight * avail
        - params.lha_weight * town.lha_rate(size) / 100.0
        + params.ses_weight * ses_share
    )


def attraction_scores(
    world: World,
    kin: np.ndarray,
    params: RelocationParams,
    stats: list[TownStats] | None,
    size: int,
    ses: int,
) -> np.ndarray:
    """:func:`town_attraction` for every town at once."""
    towns = world.towns
    avail = np.array([t.free_houses / t.capacity if t.capacity > 0 else 0.0 for t in towns])
    rent = np.array([t.lha_rate(size) for t in towns])
    share = np.array([st.share_at_or_above(ses) for st in stats]) if stats else np.zeros(len(towns))
    return (
        params.care_weight * (1.0 - np.exp(-params.care_lambda * kin))
        + params.housing_weight * avail
        - params.lha_weight * rent / 100.0
        + params.ses_weight * share
    )


def _household_ses(world: World, h: Household) -> int:
    groups = [world.agents[i].ses_group for i in h.member_ids if world.agents[i].status in ADULT_STATUSES]
    return max(groups) if groups else 3


def relocation_cost(years_in_town: Iterable[int], kappa: float, cap_years: float) -> float:
    """Social capital lost by moving: ``kappa`` times capped tenure summed over members."""
    return kappa * sum(min(y, cap_years) for y in years_in_town)


def household_relocation_cost(world: World, h: Household, params: RelocationParams) -> float:
    return relocation_cost((world.agents[i].years_in_town for i in h.member_ids), params.kappa, params.cap_years)


def choose_destination(
    world: World,
    h: Household | None,
    rng: np.random.Generator,
    params: RelocationParams,
    size: int = 1,
    stats: list[TownStats] | None = None,
    exclude: int | None = None,
) -> int | None:
    """Sample a town with free housing, softmax-weighted by attraction."""
    towns = [t for t in world.towns if t.free_houses > 0 and t.id != exclude]
    if not towns:
        return None
    kin = kin_care_hours(world, h, params.need_threshold) if h is not None else np.zeros(len(world.towns))
    scores = np.array(
        [
            town_attraction(
                world, h, t, kin[t.id], params,
                stats[t.id] if stats is not None else None,
                size=h.size if h is not None else size,
            )
            for t in towns
        ]
    )
    w = np.exp(scores - scores.max())
    cum = np.cumsum(w)
    j = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return towns[min(j, len(towns) - 1)].id


JOB, PARTNERSHIP, DIVORCE, CARE_MOVE, NONE = "job", "partnership", "divorce", "care-move", "none"


def decide_relocation(
    world: World,
    h: Household,
    trigger: str,
    rng: np.random.Generator,
    params: RelocationParams = RelocationParams(),
    stats: list[TownStats] | None = None,
) -> int | None:
    """Town the household moves to, or ``None`` to stay.

    Forced triggers (job, partnership, divorce) always move when any house is
    free, drawing the destination by attraction. Without a trigger the
    household compares its best alternative with its current town, net of
    the social capital it would lose.
    """
    if trigger in (JOB, PARTNERSHIP, DIVORCE):
        return choose_destination(world, h, rng, params, stats=stats)
    if trigger != NONE:
        raise ValueError(f"unknown relocation trigger {trigger!r}")
    if len(world.towns) < 2:
        return None
    u = rng.random()
    kin = kin_care_hours(world, h, params.need_threshold)
    scores = attraction_scores(world, kin, params, stats, h.size, _household_ses(world, h))
    current = scores[h.town_id]
    best, best_score = None, -math.inf
    for t in world.towns:
        if t.id != h.town_id and t.free_houses > 0 and scores[t.id] > best_score:
            best, best_score = t.id, scores[t.id]
    if best is None:
        return None
    p = logistic(best_score - current - household_relocation_cost(world, h, params) + params.intercept)
    return best if u < p else None


def spare_supply(world: World, h: Household, need_threshold: int = 2) -> float:
    """Own-household care supply left after the household's own needs."""
    supply = 0.0
    need = h.child_care_need
    for aid in h.member_ids:
        a = world.agents[aid]
        if a.care_need_level < need_threshold:
            supply += supply_row(a.status)[0]
        need += CARE_NEED_HOURS[a.care_need_level]
    return max(0.0, supply - need)


def care_move_probability(level: int, spare: float, params: RelocationParams = RelocationParams()) -> float:
    """Rises with the parent's need level and the child household's spare supply."""
    if level < params.care_move_min_level or spare <= 0:
        return 0.0
    steps = 4 - params.care_move_min_level + 1
    need_term = (level - params.care_move_min_level + 1) / steps
    supply_term = spare / (spare + params.care_move_half_supply)
    return min(1.0, max(0.0, params.care_move_base * need_term * supply_term))


def decide_care_move(
    world: World,
    agent: Agent,
    rng: np.random.Generator,
    params: RelocationParams = RelocationParams(),
) -> Household | None:
    """Child household a retired agent in high need moves into, if any."""
    u = rng.random()
    if agent.status != "retired" or agent.care_need_level < params.care_move_min_level:
        return None
    best, best_spare = None, 0.0
    for cid in agent.children_ids:
        c = world.agents[cid]
        if not c.alive or c.household_id == agent.household_id or c.age(world.year) < world.adult_age:
            continue
        h = world.households[c.household_id]
        s = spare_supply(world, h, params.need_threshold)
        if best is None or s > best_spare or (s == best_spare and h.id < best.id):
            best, best_spare = h, s
    if best is None:
        return None
    return best if u < care_move_probability(agent.care_need_level, best_spare, params) else None


def adopt_orphans(world: World, orphans: Sequence[Agent], rng: np.random.Generator) -> list[tuple[Agent, Household]]:
    """Place each orphan with its nearest kin household that has an adult,
    breaking ties at random, or else with a random household with an adult."""
    placements = []
    for o in orphans:
        u = rng.random()
        net = world.kin_network(o)
        best_d, cands = 4, []
        for hid, d in net.items():
            if hid == o.household_id:
                continue
            h = world.households[hid]
            if not world.has_adult(h):
                continue
            if d < best_d:
                best_d, cands = d, [h]
            elif d == best_d:
                cands.append(h)
        if not cands:
            cands = [h for h in world.households.values() if h.id != o.household_id and world.has_adult(h)]
        if not cands:
            continue
        cands.sort(key=lambda h: h.id)
        target = cands[min(int(u * len(cands)), len(cands) - 1)]
        world.move_agent(o, target)
        placements.append((o, target))
    return placements


def household_child_need(world: World, h: Household, beta: float, school_hours: float, base_need: float) -> tuple[float, int, bool]:
    """(weekly net child-care need, number of children with need, newborn present)."""
    need, n, newborn = 0.0, 0, False
    for aid in h.member_ids:
        age = world.agents[aid].age(world.year)
        if age == 0:
            newborn = True
        elif age <= 11:
            c = child_net_need(age, beta, school_hours, base_need)
            if c > 0:
                need += c
                n += 1
    return need, n, newborn
