"""Yearly orchestration of all processes, single runs and paired batches.

Within a year the order is fixed: deaths, births, ageing and status changes,
education, partnership dissolution then formation, relocation, health
progression, care allocation, hospitalisation, economy, metrics.

Every process draws from its own ``(seed, process, year)`` substream. Two
runs that differ only in policy levers therefore consume identical random
numbers up to the activation year, which is what lets a batch run the shared
prefix once and branch each scenario from a copy of the world.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from caresim import allocation as al
from caresim import population as pop
from caresim.config import SimConfig
from caresim.demography import build_demography, sample_births
from caresim.economy import (
    CONTINUE,
    EducationParams,
    assign_initial_wealth,
    care_income_budget,
    education_level_at,
    education_step,
    hourly_wage,
    pension,
    ses_table,
    update_experience,
)
from caresim.errors import PopulationExtinct
from caresim.health import CARE_NEED_HOURS, HealthParams, hospitalization, progression_probability
from caresim.policy import BENCHMARK, Levers, PolicyScenario, apply_policy
from caresim.reports import ComparisonSet, YearContext, YearlyMetrics, YearlySeries, record_year
from caresim.rng import RngStream


@dataclass
class YearRecord:
    """Everything an observer may want to inspect after a simulated year."""

    year: int
    metrics: YearlyMetrics
    ledger: al.CareLedger
    levers: Levers


class Simulation:
    """One run: a world plus the machinery to advance it a year at a time."""

    def __init__(self, config: SimConfig, scenario: PolicyScenario = BENCHMARK, seed: int | None = None):
        self.cfg = config
        self.scenario = scenario
        self.seed = int(config.rng_seed if seed is None else seed)
        RngStream(self.seed, "init")  # validates the seed range
        self.demography = build_demography(config, self._gen("projection", 0))
        self.health = HealthParams.from_config(config)
        self.ses = ses_table(config)
        self.education = EducationParams(
            config.education_intercept, config.education_income_coef, config.education_parent_coef
        )
        self.partnership = pop.PartnershipParams.from_config(config)
        self.relocation = pop.RelocationParams.from_config(config)
        self.alloc = al.AllocationParams.from_config(config)
        self.prices = al.CarePrices(config.formal_child_care_price, config.formal_social_care_price)
        self.divorce = (
            pop.DivorceTable.from_csv(config.divorce_table) if config.divorce_table else pop.DivorceTable.default()
        )
        towns = pop.load_map(config.map_file) if config.map_file else pop.synthetic_map(config.map_size)
        self.world = pop.World(towns, adult_age=config.working_age)
        self.world.year = config.start_year
        self.year = config.start_year
        self.series = YearlySeries()
        self._job_movers: list[int] = []
        self._init_population()

    # -- plumbing
    def _gen(self, stream: str, year: int) -> np.random.Generator:
        return RngStream(self.seed, stream, year).gen

    def branch(self, scenario: PolicyScenario) -> "Simulation":
        """An independent copy of this run that continues under ``scenario``."""
        twin = copy.deepcopy(self)
        twin.scenario = scenario
        return twin

    def run(self, until: int | None = None, on_year: Callable[[YearRecord], None] | None = None) -> YearlySeries:
        last = self.cfg.end_year if until is None else until
        while self.year <= last:
            rec = self.step()
            if on_year is not None:
                on_year(rec)
        return self.series

    # -- initial population
    def _init_population(self) -> None:
        cfg, world = self.cfg, self.world
        rng = self._gen("init", 0)
        n_target = max(2, round(cfg.population_scale * cfg.reference_population))
        pop.set_capacities(world.towns, math.ceil(cfg.houses_per_initial_agent * n_target))
        y0 = cfg.start_year
        weights = np.array([t.density_weight for t in world.towns])
        shares = np.asarray(cfg.ses_initial_shares)
        while len(world.living) < n_target:
            free = np.array([t.free_houses > 0 for t in world.towns], dtype=float)
            w = weights * free
            town = int(rng.choice(len(world.towns), p=w / w.sum()))
            ses = int(rng.choice(5, p=shares / shares.sum())) + 1
            h = world.new_household(town)
            if rng.random() < 0.8:
                age_m = 20 + int(rng.integers(0, 45))
                age_w = max(18, age_m - int(rng.integers(0, 5)))
                m = world.new_agent(pop.MALE, y0 - age_m, ses_group=ses)
                f = world.new_agent(pop.FEMALE, y0 - age_w, ses_group=ses)
                m.partner_id, f.partner_id = f.id, m.id
                for a in (m, f):
                    world.move_agent(a, h)
                for mother_age in range(19, min(age_w, 44) + 1):
                    if rng.random() < 0.2:
                        age_c = age_w - mother_age
                        if age_c < cfg.working_age:
                            sex = pop.MALE if rng.random() < 0.5 else pop.FEMALE
                            c = world.new_agent(sex, y0 - age_c, mother_id=f.id, father_id=m.id, ses_group=ses)
                            world.move_agent(c, h)
            else:
                age = 50 + int(rng.integers(0, 36))
                sex = pop.MALE if rng.random() < 0.5 else pop.FEMALE
                a = world.new_agent(sex, y0 - age, ses_group=ses)
                world.move_agent(a, h)
        for a in world.living.values():
            age = a.age(y0)
            a.years_in_town = min(age, int(rng.integers(0, 30)))
            if age < cfg.teen_age:
                a.status = "child"
            elif age < cfg.working_age:
                a.status = "teenager"
            else:
                a.education_level = a.ses_group - 1
                worked = max(0, min(age, cfg.retirement_age) - cfg.working_age)
                a.work_experience = (1 - cfg.experience_discount**worked) / (1 - cfg.experience_discount)
                a.hourly_wage = hourly_wage(self.ses[a.ses_group - 1], a.work_experience)
                a.accumulated_salary = a.hourly_wage * cfg.full_time_hours * cfg.weeks_per_year * worked
                if age >= cfg.retirement_age:
                    a.status = "retired"
                    a.final_wage = a.hourly_wage
                    a.pension = pension(a.final_wage, cfg.full_time_hours, cfg.replacement_rate)
                else:
                    a.status = "employed"
                    a.worked_share = 1.0
        self._update_incomes()

    # -- the year
    def step(self) -> YearRecord:
        y = self.year
        world = self.world
        world.year = y
        world.invalidate_kin()
        self._deaths(y)
        if not world.living:
            raise PopulationExtinct(y)
        self._births(y)
        self._status(y)
        self._education(y)
        self._partnership(y)
        self._relocation(y)
        self._health(y)
        levers = apply_policy(self.scenario, y, BENCHMARK, self.cfg.child_subsidy_cap)
        ledger = self._allocate(y, levers)
        hospital_cost = self._hospital(y, ledger)
        self._economy(y, ledger)
        bench = apply_policy(BENCHMARK, y, BENCHMARK, self.cfg.child_subsidy_cap)
        ctx = YearContext(
            year=y,
            weeks=self.cfg.weeks_per_year,
            working_age=self.cfg.working_age,
            retirement_age=self.cfg.retirement_age,
            full_time_hours=self.cfg.full_time_hours,
            hospital_cost=hospital_cost,
            levers=levers,
            benchmark_levers=bench,
            prices=self.prices,
            alloc=self.alloc,
        )
        metrics = record_year(world, ledger, ctx)
        self.series.append(metrics)
        for a in world.living.values():
            a.years_in_town += 1
        for h in world.households.values():
            h.years_at_address += 1
        self.year += 1
        return YearRecord(y, metrics, ledger, levers)

    def _deaths(self, y: int) -> None:
        world, cfg = self.world, self.cfg
        agents = list(world.living.values())
        if not agents:
            return
        u = self._gen("mortality", y).random(len(agents))
        ages = np.array([a.age(y) for a in agents])
        levels = np.array([a.care_need_level for a in agents])
        mult = np.array([self.ses[a.ses_group - 1].mortality_multiplier for a in agents])
        male = np.array([a.sex == pop.MALE for a in agents])
        p = np.empty(len(agents))
        capped = np.minimum(ages, cfg.max_age)
        for sex, mask in ((pop.MALE, male), (pop.FEMALE, ~male)):
            if mask.any():
                p[mask] = self.demography.mortality(sex, capped[mask], y, levels[mask], mult[mask])
        p[ages >= cfg.max_age] = 1.0
        dead = [a for a, ui, pi in zip(agents, u, p) if ui < pi]
        for a in dead:
            self._bequeath(a)
            world.kill(a)
        if dead:
            world.invalidate_kin()
            self._place_orphans(y)

    def _bequeath(self, a: pop.Agent) -> None:
        if a.total_wealth <= 0:
            return
        world = self.world
        heirs = []
        if a.partner_id is not None and world.agents[a.partner_id].alive:
            heirs = [world.agents[a.partner_id]]
        else:
            heirs = [world.agents[c] for c in a.children_ids if world.agents[c].alive]
        if heirs:
            share_t = a.total_wealth / len(heirs)
            share_f = a.financial_wealth / len(heirs)
            for h in heirs:
                h.total_wealth += share_t
                h.financial_wealth += share_f
        a.total_wealth = a.financial_wealth = 0.0

    def _place_orphans(self, y: int) -> None:
        world = self.world
        orphans = []
        for h in list(world.households.values()):
            if not world.has_adult(h):
                orphans.extend(world.agents[i] for i in h.member_ids)
        if orphans:
            pop.adopt_orphans(world, orphans, self._gen("orphans", y))
            world.invalidate_kin()

    def _births(self, y: int) -> None:
        world, cfg = self.world, self.cfg
        mothers = [
            a
            for a in world.living.values()
            if a.sex == pop.FEMALE
            and a.partner_id is not None
            and cfg.fertility_min_age <= a.age(y) <= cfg.fertility_max_age
        ]
        if not mothers:
            return
        rng = self._gen("fertility", y)
        ages = np.array([a.age(y) for a in mothers])
        mult = np.array([self.ses[a.ses_group - 1].fertility_multiplier for a in mothers])
        p = np.clip(self.demography.fertility(ages, y) * mult, 0.0, 1.0)
        births = sample_births(mothers, p, rng)
        sexes = rng.random(len(births))
        for m, s in zip(births, sexes):
            father = world.agents[m.partner_id]
            c = world.new_agent(
                pop.MALE if s < 0.5 else pop.FEMALE,
                y,
                mother_id=m.id,
                father_id=father.id,
                ses_group=max(m.ses_group, father.ses_group),
            )
            world.move_agent(c, world.household_of(m))
        if births:
            world.invalidate_kin()

    def _status(self, y: int) -> None:
        world, cfg = self.world, self.cfg
        rng = self._gen("economy", y)
        agents = list(world.living.values())
        u = rng.random(len(agents))
        for a, ui in zip(agents, u):
            age = a.age(y)
            if age < cfg.teen_age:
                a.status = "child"
            elif age < cfg.working_age:
                a.status = "teenager"
            elif a.status in ("child", "teenager"):
                a.status = "student"
            elif a.status in ("employed", "unemployed"):
                if age >= cfg.retirement_age:
                    self._retire(a, 0)
                elif a.care_need_level >= cfg.ill_health_retirement_level:
                    self._retire(a, cfg.retirement_age - age)
                    a.ill_health_retired = True
                else:
                    p = cfg.unemployment_rate * self.ses[a.ses_group - 1].unemployment_factor
                    a.status = "unemployed" if ui < p else "employed"

    def _retire(self, a: pop.Agent, years_early: int) -> None:
        cfg = self.cfg
        a.status = "retired"
        a.final_wage = a.hourly_wage
        a.pension = pension(a.final_wage, cfg.full_time_hours, cfg.replacement_rate, years_early, cfg.early_penalty)

    def _education(self, y: int) -> None:
        world, cfg = self.world, self.cfg
        rng = self._gen("education", y)
        students = [a for a in world.living.values() if a.status == "student"]
        draws = rng.random((len(students), 2))
        for a, (u_job, u_unemp) in zip(students, draws):
            age = a.age(y)
            # decisions fall on even offsets from the working age; the last
            # chance is at 22, after which students finish at 24
            if (age - cfg.working_age) % 2 == 1 and age <= self.education.last_decision_age + 1:
                continue
            h = world.household_of(a)
            pc_income = h.weekly_income / max(1, h.size)
            parent_edu = max(
                (world.agents[p].education_level for p in a.parent_ids), default=0
            )
            if education_step(age, pc_income, parent_edu, _Fixed(u_unemp), self.education) == CONTINUE:
                continue
            a.education_level = education_level_at(age, cfg.working_age, self.education.top_level)
            a.ses_group = a.education_level + 1
            a.status = "employed"
            a.worked_share = 1.0
            a.hourly_wage = hourly_wage(self.ses[a.ses_group - 1], a.work_experience)
            if a.partner_id is None and u_job < cfg.job_move_prob[a.ses_group - 1] and any(
                world.agents[p].household_id == a.household_id for p in a.parent_ids
            ):
                self._job_movers.append(a.id)

    def _partnership(self, y: int) -> None:
        world = self.world
        pop.dissolve_partnerships(
            world, pop.couples(world), self.divorce, self._gen("divorce", y), self.relocation
        )
        singles = pop.eligible_singles(world, self.partnership)
        pop.form_partnerships(world, singles, self.partnership, self._gen("partnership", y), self.relocation)

    def _relocation(self, y: int) -> None:
        world, cfg = self.world, self.cfg
        rng = self._gen("relocation", y)
        stats = pop.town_stats(world)
        # leaving home for a job
        for aid in self._job_movers:
            a = world.agents[aid]
            if not a.alive or a.partner_id is not None:
                continue
            town = pop.choose_destination(world, None, rng, self.relocation, size=1, stats=stats)
            if town is not None:
                world.move_agent(a, world.new_household(town))
        self._job_movers = []
        world.invalidate_kin()
        # voluntary moves
        hids = sorted(world.households)
        review = rng.random(len(hids))
        for hid, u in zip(hids, review):
            h = world.households.get(hid)
            if h is None or u >= cfg.relocation_review_share:
                continue
            dest = pop.decide_relocation(world, h, pop.NONE, rng, self.relocation, stats)
            if dest is not None:
                world.move_household(h, dest)
        # moving in with an adult child
        for a in sorted(world.living.values(), key=lambda a: a.id):
            if a.status != "retired" or a.care_need_level < self.relocation.care_move_min_level:
                continue
            target = pop.decide_care_move(world, a, rng, self.relocation)
            if target is None:
                continue
            movers = [a]
            if a.partner_id is not None and world.agents[a.partner_id].household_id == a.household_id:
                movers.append(world.agents[a.partner_id])
            for m in movers:
                world.move_agent(m, target)

    def _health(self, y: int) -> None:
        world = self.world
        agents = list(world.living.values())
        u = self._gen("health", y).random(len(agents))
        for a, ui in zip(agents, u):
            if a.care_need_level >= 4:
                continue
            p = progression_probability(
                a.care_need_level, a.age(y), a.sex, a.cumulative_unmet_care, a.ses_group, self.health
            )
            if ui < p:
                a.care_need_level += 1

    def _update_incomes(self) -> None:
        world, cfg = self.world, self.cfg
        for h in world.households.values():
            income = 0.0
            for aid in h.member_ids:
                income += self._weekly_income(world.agents[aid])
            h.weekly_income = income
            h.care_income_budget = care_income_budget(
                income, h.size, cfg.income_share_brackets, cfg.income_share_rates
            )

    def _weekly_income(self, a: pop.Agent) -> float:
        if a.status == "employed":
            return a.hourly_wage * self.cfg.full_time_hours
        if a.status == "retired":
            return a.pension
        return 0.0

    def _allocate(self, y: int, levers: Levers) -> al.CareLedger:
        world, cfg = self.world, self.cfg
        self._update_incomes()
        res = cfg.hour_resolution
        threshold = cfg.supply_need_threshold
        care_hh: dict[int, al.CareHousehold] = {}
        child_units: list[al.ChildUnit] = []
        for hid, h in world.households.items():
            need, n_children, newborn = pop.household_child_need(
                world, h, levers.beta, cfg.school_hours, cfg.child_base_need
            )
            need = al.round_to_grid(need, res)
            h.child_care_need = need
            busy_mothers = set()
            if newborn:
                for aid in h.member_ids:
                    c = world.agents[aid]
                    if c.age(y) == 0 and c.mother_id is not None:
                        busy_mothers.add(c.mother_id)
            ch = al.CareHousehold(
                hid,
                h.town_id,
                budget=h.care_income_budget,
                child_need=need,
                n_children=n_children,
                subsidy_left=levers.child_subsidy_cap * n_children / cfg.weeks_per_year,
            )
            for aid in h.member_ids:
                a = world.agents[aid]
                if aid in busy_mothers or a.care_need_level >= threshold:
                    continue
                if a.status == "employed":
                    ch.workers.append(al.Worker(aid, a.hourly_wage, cfg.full_time_hours))
                row = al.supply_row(a.status)
                if row[0] > 0:
                    ch.members.append(al.MemberSupply(aid, tuple(float(x) for x in row)))
            care_hh[hid] = ch
            if need > 0:
                child_units.append(al.ChildUnit(hid, h.town_id, need, n_children, world.household_network(h)))
        receivers = []
        for a in world.living.values():
            if a.care_need_level <= 0:
                continue
            h = world.household_of(a)
            receivers.append(
                al.SocialReceiver(
                    a.id,
                    h.id,
                    h.town_id,
                    a.care_need_level,
                    float(CARE_NEED_HOURS[a.care_need_level]),
                    a.financial_wealth,
                    self._weekly_income(a),
                    world.kin_network(a),
                )
            )
        cw = al.CareWorld(care_hh, child_units, receivers)
        return al.allocate_week(cw, levers, self.prices, self._gen("allocation", y), self.alloc)

    def _hospital(self, y: int, ledger: al.CareLedger) -> float:
        rng = self._gen("hospital", y)
        cost = []
        for aid in sorted(ledger.social):
            r = ledger.social[aid]
            a = self.world.agents[aid]
            ep = hospitalization(a.care_need_level, r.unmet, rng, self.health)
            if ep is not None:
                cost.append(ep.cost)
        return math.fsum(cost)

    def _economy(self, y: int, ledger: al.CareLedger) -> None:
        world, cfg = self.world, self.cfg
        weeks = cfg.weeks_per_year
        for aid, r in ledger.social.items():
            world.agents[aid].cumulative_unmet_care += weeks * r.unmet
        for aid, spend in ledger.wealth_spend.items():
            a = world.agents[aid]
            annual = min(a.financial_wealth, weeks * spend)
            a.financial_wealth -= annual
            a.total_wealth = max(a.financial_wealth, a.total_wealth - annual)
        for a in world.living.values():
            if a.status == "employed":
                off = ledger.hours_off_by_worker.get(a.id, 0.0)
                a.worked_share = max(0.0, 1.0 - off / cfg.full_time_hours)
                a.accumulated_salary += weeks * a.hourly_wage * cfg.full_time_hours * a.worked_share
                a.work_experience = update_experience(a.work_experience, a.worked_share, cfg.experience_discount)
                a.hourly_wage = hourly_wage(self.ses[a.ses_group - 1], a.work_experience)
            elif a.status == "unemployed":
                a.worked_share = 0.0
                a.work_experience = update_experience(a.work_experience, 0.0, cfg.experience_discount)
                a.hourly_wage = hourly_wage(self.ses[a.ses_group - 1], a.work_experience)
        if y >= cfg.data_start_year:
            if y == cfg.data_start_year:
                cohort = [a for a in world.living.values() if a.age(y) >= cfg.working_age]
            else:
                cohort = [a for a in world.living.values() if a.status == "retired" and not a.wealth_assigned]
            if cohort:
                wealth = assign_initial_wealth(
                    [a.accumulated_salary for a in cohort],
                    cfg.wealth_decile_shares,
                    cfg.mean_wealth * len(cohort),
                    self._gen("economy", y * 1000 + 1),
                )
                for a, w in zip(cohort, wealth):
                    a.total_wealth += float(w)
                    a.financial_wealth += cfg.financial_share * float(w)
                    a.wealth_assigned = True


class _Fixed:
    """Generator stand-in that returns a pre-drawn uniform, so one process can
    take a fixed number of draws per agent regardless of branching."""

    __slots__ = ("u",)

    def __init__(self, u: float):
        self.u = float(u)

    def random(self) -> float:
        return self.u


def run_simulation(
    config: SimConfig,
    scenario: PolicyScenario = BENCHMARK,
    seed: int | None = None,
    on_year: Callable[[YearRecord], None] | None = None,
) -> YearlySeries:
    """Run ``config.start_year``..``config.end_year`` and return one metrics row per year."""
    return Simulation(config, scenario, seed).run(on_year=on_year)


def run_batch(
    config: SimConfig,
    scenarios: Sequence[PolicyScenario],
    replicates: int,
    base_seed: int = 0,
    share_prefix: bool = True,
    progress: Callable[[str, int], None] | None = None,
) -> ComparisonSet:
    """Run every scenario for each replicate seed ``base_seed + i``.

    With ``share_prefix`` the years before the earliest activation year are
    simulated once per replicate and every scenario continues from a copy;
    this yields the same series as independent runs.
    """
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    scenarios = list(scenarios)
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise ValueError("scenario names must be unique")
    out = ComparisonSet({s.name: [] for s in scenarios}, [])
    for i in range(replicates):
        seed = base_seed + i
        out.seeds.append(seed)
        if share_prefix:
            split = min(s.activation_year for s in scenarios)
            split = max(config.start_year, min(split, config.end_year + 1))
            trunk = Simulation(config, BENCHMARK, seed)
            trunk.run(until=split - 1)
            for s in scenarios:
                sim = trunk.branch(s)
                out.series[s.name].append(sim.run())
                if progress:
                    progress(s.name, seed)
        else:
            for s in scenarios:
                out.series[s.name].append(run_simulation(config, s, seed))
                if progress:
                    progress(s.name, seed)
    return out
