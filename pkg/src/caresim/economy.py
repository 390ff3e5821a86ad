"""Wages, work experience, education, pensions, wealth and care budgets."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class SesParams:
    initial_wage: float
    final_wage: float
    growth_rate: float
    unemployment_factor: float = 1.0
    mortality_multiplier: float = 1.0
    fertility_multiplier: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.initial_wage <= self.final_wage:
            raise ValueError("require 0 < initial_wage <= final_wage")
        if self.growth_rate <= 0:
            raise ValueError("growth_rate must be positive")


def ses_table(cfg) -> tuple[SesParams, ...]:
    return tuple(
        SesParams(*vals)
        for vals in zip(
            cfg.ses_initial_wage,
            cfg.ses_final_wage,
            cfg.ses_wage_growth,
            cfg.ses_unemployment_factor,
            cfg.ses_mortality_multiplier,
            cfg.ses_fertility_multiplier,
        )
    )


def hourly_wage(ses: SesParams, experience: float) -> float:
    """Gompertz salary curve ``F exp(c exp(-r h))`` with ``c = ln(I / F)``."""
    if experience < 0:
        raise ValueError("experience must be non-negative")
    c = math.log(ses.initial_wage / ses.final_wage)
    return ses.final_wage * math.exp(c * math.exp(-ses.growth_rate * experience))


def update_experience(experience: float, worked_share: float, delta: float) -> float:
    """One year of discounted work experience: ``delta * h + worked_share``."""
    return delta * experience + worked_share


def logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@dataclass(frozen=True)
class EducationParams:
    intercept: float = -3.5
    income_coef: float = 0.5
    parent_coef: float = 0.5
    last_decision_age: int = 22
    top_level: int = 4


CONTINUE = "continue"
ENTER_WORKFORCE = "enterWorkforce"


def education_continue_probability(
    per_capita_income: float, parent_education: int, params: EducationParams
) -> float:
    x = (
        params.intercept
        + params.income_coef * math.log(max(per_capita_income, 1.0))
        + params.parent_coef * parent_education
    )
    return logistic(x)


def education_step(
    age: int,
    per_capita_income: float,
    parent_education: int,
    rng: np.random.Generator,
    params: EducationParams = EducationParams(),
) -> str:
    """Decide at ages 16, 18, 20 and 22 whether a student carries on studying.

    Anyone past the last decision age (24 and over) enters the workforce.
    """
    if age > params.last_decision_age:
        return ENTER_WORKFORCE
    p = education_continue_probability(per_capita_income, parent_education, params)
    return CONTINUE if rng.random() < p else ENTER_WORKFORCE


def education_level_at(age: int, working_age: int = 16, top_level: int = 4) -> int:
    """Completed education level for someone leaving study at ``age``."""
    return max(0, min(top_level, (age - working_age) // 2))


def pension(
    final_wage: float,
    full_time_hours: float,
    replacement_rate: float,
    years_early: int = 0,
    early_penalty: float = 0.05,
) -> float:
    """Weekly pension, reduced linearly for each year of early retirement."""
    return replacement_rate * final_wage * full_time_hours * max(0.0, 1.0 - early_penalty * years_early)


def assign_initial_wealth(
    accumulated_salaries: Sequence[float],
    decile_shares: Sequence[float],
    total_wealth: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Hand out ``total_wealth`` by salary rank.

    Agents are sorted by accumulated salary (random tie-break) and split into
    ``len(decile_shares)`` equal rank groups; each group receives its share of
    the total, divided evenly among its members. Empty groups (fewer agents
    than groups) have their share redistributed pro rata.
    """
    salaries = np.asarray(accumulated_salaries, dtype=float)
    n = len(salaries)
    out = np.zeros(n)
    if n == 0:
        return out
    shares = np.asarray(decile_shares, dtype=float)
    k = len(shares)
    order = np.lexsort((rng.random(n), salaries))
    groups = (np.arange(n) * k) // n
    counts = np.bincount(groups, minlength=k)
    present = counts > 0
    norm = shares[present].sum()
    per_member = np.zeros(k)
    per_member[present] = total_wealth * shares[present] / norm / counts[present]
    out[order] = per_member[groups]
    return out


def bracket_rate(value: float, brackets: Sequence[float], rates: Sequence[float]) -> float:
    """Step function: ``rates[i]`` for the i-th bracket; upper bounds inclusive."""
    return rates[bisect.bisect_left(list(brackets), value)]


def care_income_budget(
    weekly_income: float,
    household_size: int,
    brackets: Sequence[float] = (200.0, 500.0),
    rates: Sequence[float] = (0.1, 0.2, 0.3),
) -> float:
    """Weekly household income set aside for care."""
    if weekly_income <= 0 or household_size <= 0:
        return 0.0
    return weekly_income * bracket_rate(weekly_income / household_size, brackets, rates)
