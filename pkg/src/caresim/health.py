"""Care-need levels, their progression, hospitalisation and child-care need."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from caresim.errors import InvalidLevel, TableError

CARE_NEED_HOURS: tuple[int, ...] = (0, 8, 16, 36, 84)
CARE_NEED_CATEGORIES: tuple[str, ...] = ("None", "Low", "Moderate", "Substantial", "Critical")
MAX_LEVEL = 4


@dataclass(frozen=True)
class CareNeedLevel:
    level: int

    def __post_init__(self) -> None:
        if not 0 <= self.level <= MAX_LEVEL:
            raise InvalidLevel(f"care need level must be 0-4, got {self.level}")

    @property
    def weekly_hours(self) -> int:
        return CARE_NEED_HOURS[self.level]

    @property
    def category(self) -> str:
        return CARE_NEED_CATEGORIES[self.level]


def care_need_hours(level: int) -> int:
    if isinstance(level, bool) or not isinstance(level, (int, np.integer)) or not 0 <= level <= MAX_LEVEL:
        raise InvalidLevel(f"care need level must be an integer 0-4, got {level!r}")
    return CARE_NEED_HOURS[int(level)]


@dataclass(frozen=True)
class HealthParams:
    onset_base: dict  # sex -> base rate at the reference age
    onset_age_rate: float
    onset_reference_age: float
    progression_base: tuple[float, ...]  # indexed by current level 0..3
    progression_age_rate: float
    progression_reference_age: float
    unmet_uplift: float
    ses_multiplier: tuple[float, ...]  # by SES group 1..5, strictly decreasing
    hospital_base: tuple[float, ...]  # by level 0..4
    hospital_unmet_coef: float
    hospital_mean_weeks: float
    hospital_weekly_cost: float
    onset_table: "OnsetTable | None" = None

    @classmethod
    def from_config(cls, cfg) -> "HealthParams":
        table = OnsetTable.from_csv(cfg.onset_table) if cfg.onset_table else None
        return cls(
            onset_base={"male": cfg.onset_base_male, "female": cfg.onset_base_female},
            onset_age_rate=cfg.onset_age_rate,
            onset_reference_age=cfg.onset_reference_age,
            progression_base=tuple(cfg.progression_base),
            progression_age_rate=cfg.progression_age_rate,
            progression_reference_age=cfg.progression_reference_age,
            unmet_uplift=cfg.unmet_uplift,
            ses_multiplier=tuple(cfg.ses_health_multiplier),
            hospital_base=tuple(cfg.hospital_base),
            hospital_unmet_coef=cfg.hospital_unmet_coef,
            hospital_mean_weeks=cfg.hospital_mean_weeks,
            hospital_weekly_cost=cfg.hospital_weekly_cost,
            onset_table=table,
        )


class OnsetTable:
    """Onset (0 -> 1) probabilities by sex and age band, from ``sex,ageBand,probability``."""

    def __init__(self, rows: Sequence[tuple[str, int, int, float]]):
        self.rows = list(rows)

    def rate(self, sex: str, age: int) -> float:
        for s, lo, hi, p in self.rows:
            if s == sex and lo <= age <= hi:
                return p
        return 0.0

    @classmethod
    def from_csv(cls, path: str | Path) -> "OnsetTable":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["sex", "ageBand", "probability"]:
                raise TableError(f"{path}: header must be 'sex,ageBand,probability'")
            for row in reader:
                lo, hi = parse_age_band(row["ageBand"])
                p = float(row["probability"])
                if not 0 <= p <= 1:
                    raise TableError(f"{path}: probability out of range")
                rows.append((row["sex"], lo, hi, p))
        return cls(rows)


def parse_age_band(band: str) -> tuple[int, int]:
    band = band.strip()
    if band.endswith("+"):
        return int(band[:-1]), 10_000
    if "-" in band:
        lo, hi = band.split("-")
        return int(lo), int(hi)
    return int(band), int(band)


def _clamp01(x: float) -> float:
    return 0.0 if x < 0 else 1.0 if x > 1 else x


def progression_probability(
    level: int,
    age: float,
    sex: str,
    cumulative_unmet: float,
    ses_group: int,
    params: HealthParams,
) -> float:
    """Probability of moving from ``level`` to ``level + 1`` this year.

    Level 4 is absorbing. Onset (level 0) uses the sex- and age-specific
    base rate; higher levels use the per-level base with exponential age
    dependence. Both are scaled up by cumulative unmet hours and down by SES.
    """
    if level >= MAX_LEVEL:
        return 0.0
    unmet_term = 1.0 + params.unmet_uplift * cumulative_unmet / 1000.0
    ses_term = params.ses_multiplier[ses_group - 1]
    if level == 0:
        if params.onset_table is not None:
            base = params.onset_table.rate(sex, int(age))
        else:
            base = params.onset_base[sex] * math.exp(
                params.onset_age_rate * (age - params.onset_reference_age)
            )
    else:
        base = params.progression_base[level] * math.exp(
            params.progression_age_rate * (age - params.progression_reference_age)
        )
    return _clamp01(base * unmet_term * ses_term)


def hospitalization_probability(level: int, unmet_weekly_hours: float, params: HealthParams) -> float:
    return _clamp01(params.hospital_base[level] + params.hospital_unmet_coef * unmet_weekly_hours)


@dataclass(frozen=True)
class HospitalEpisode:
    weeks: int
    cost: float


def episode_cost(weeks: int, weekly_cost: float) -> float:
    return weeks * weekly_cost


def hospitalization(
    level: int,
    unmet_weekly_hours: float,
    rng: np.random.Generator,
    params: HealthParams,
) -> HospitalEpisode | None:
    """Sample whether an agent is hospitalised this year and for how long.

    Duration is geometric on {1, 2, ...} with the configured mean.
    """
    p = hospitalization_probability(level, unmet_weekly_hours, params)
    u = rng.random()
    if p <= 0.0 or u >= p:
        return None
    weeks = int(rng.geometric(1.0 / max(params.hospital_mean_weeks, 1.0)))
    return HospitalEpisode(weeks, episode_cost(weeks, params.hospital_weekly_cost))


def state_hours(age: int, beta: float, school_hours: float) -> float:
    """Weekly hours of care the state covers for a child of ``age``."""
    if 3 <= age <= 4:
        return beta
    if 5 <= age <= 11:
        return school_hours
    return 0.0


def child_net_need(age: int, beta: float, school_hours: float, base_need: float = 56.0) -> float:
    if not 1 <= age <= 11:
        return 0.0
    return max(0.0, base_need - state_hours(age, beta, school_hours))


def household_child_care_need(
    child_ages: Iterable[int],
    beta: float,
    school_hours: float,
    base_need: float = 56.0,
) -> tuple[float, bool]:
    """Weekly net child-care need of a household and whether it has a newborn.

    Newborns (age 0) are excluded from the sum: their mother's whole care
    supply goes to them instead.
    """
    ages = list(child_ages)
    need = sum(child_net_need(a, beta, school_hours, base_need) for a in ages)
    return need, any(a == 0 for a in ages)
