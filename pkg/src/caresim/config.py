"""Simulation configuration and the flat ``key = value`` config file format.

Keys in files are camelCase (``retirementAge = 60``); attributes on
:class:`SimConfig` are the snake_case equivalents. Sequence-valued keys take
comma-separated numbers. Lines starting with ``#`` and trailing ``# ...``
comments are ignored.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from caresim.errors import InvariantViolation, MissingFile, ParseError, UnknownKey


def _t(*values: float) -> tuple[float, ...]:
    return field(default=tuple(float(v) for v in values))


@dataclass(frozen=True)
class SimConfig:
    # clock and scale
    start_year: int = 1860
    end_year: int = 2050
    policy_start_year: int = 2020
    population_scale: float = 1e-4
    # size of the synthetic country in 1860; initial agents = scale * this
    reference_population: float = 5_000_000.0
    retirement_age: int = 65
    working_age: int = 16
    child_age_limit: int = 11
    teen_age: int = 12
    weeks_per_year: int = 52
    max_age: int = 100
    rng_seed: int = 0

    # map
    map_file: str = ""
    map_size: int = 4
    houses_per_initial_agent: float = 4.0

    # mortality
    gm_male: tuple[float, ...] = _t(0.0055, 4.0e-5, 0.095)
    gm_female: tuple[float, ...] = _t(0.0050, 2.5e-5, 0.097)
    data_start_year: int = 1951
    projection_start_year: int = 2009
    mortality_table_male: str = ""
    mortality_table_female: str = ""
    fertility_table: str = ""
    lc_sigma: float = 0.0
    need_mortality_uplift: float = 0.15
    # fertility (partnered women)
    fertility_min_age: int = 17
    fertility_max_age: int = 45
    fertility_peak_age: float = 27.0
    fertility_spread: float = 6.0
    fertility_peak_rate: float = 0.22
    # pre-data fertility falls linearly from this multiple of the base level to 1
    early_fertility_multiplier: float = 1.5
    early_fertility_decline_end: int = 1935

    # partnership and divorce
    partnership_min_age: int = 17
    partnership_max_age: int = 60
    partnership_base_prob: float = 0.35
    partner_geo_weight: float = 0.5
    partner_age_weight: float = 0.3
    partner_ses_weight: float = 0.5
    divorce_table: str = ""

    # relocation
    attraction_care_weight: float = 1.0
    attraction_housing_weight: float = 0.5
    attraction_lha_weight: float = 0.5
    attraction_ses_weight: float = 0.5
    care_attraction_lambda: float = 0.02
    relocation_cost_kappa: float = 0.05
    relocation_cost_cap_years: float = 20.0
    relocation_intercept: float = -4.0
    relocation_review_share: float = 1.0
    # chance of leaving the parental home for a job on entering work, by SES group
    job_move_prob: tuple[float, ...] = _t(0.0, 0.1, 0.3, 0.6, 0.9)
    care_move_base: float = 0.5
    care_move_half_supply: float = 28.0
    care_move_min_level: int = 3

    # economy
    ses_initial_wage: tuple[float, ...] = _t(6, 8, 10, 12, 16)
    ses_final_wage: tuple[float, ...] = _t(9, 14, 20, 28, 40)
    ses_wage_growth: tuple[float, ...] = _t(0.25, 0.2, 0.15, 0.12, 0.1)
    ses_unemployment_factor: tuple[float, ...] = _t(1.6, 1.3, 1.0, 0.8, 0.6)
    ses_mortality_multiplier: tuple[float, ...] = _t(1.2, 1.1, 1.0, 0.9, 0.8)
    ses_fertility_multiplier: tuple[float, ...] = _t(1.1, 1.05, 1.0, 0.95, 0.9)
    ses_initial_shares: tuple[float, ...] = _t(0.6, 0.25, 0.1, 0.04, 0.01)
    unemployment_rate: float = 0.15
    experience_discount: float = 0.95
    full_time_hours: float = 40.0
    replacement_rate: float = 0.6
    early_penalty: float = 0.05
    education_intercept: float = -4.0
    education_income_coef: float = 0.5
    education_parent_coef: float = 1.5
    income_share_brackets: tuple[float, ...] = _t(200, 500)
    income_share_rates: tuple[float, ...] = _t(0.1, 0.2, 0.3)
    wealth_decile_shares: tuple[float, ...] = _t(
        0.001, 0.006, 0.015, 0.03, 0.05, 0.07, 0.10, 0.14, 0.20, 0.388
    )
    mean_wealth: float = 100_000.0
    financial_share: float = 0.25

    # health
    onset_table: str = ""
    onset_age_rate: float = 0.09
    onset_base_male: float = 0.0012
    onset_base_female: float = 0.0015
    onset_reference_age: float = 40.0
    progression_base: tuple[float, ...] = _t(0.0, 0.05, 0.05, 0.05)
    progression_age_rate: float = 0.07
    progression_reference_age: float = 65.0
    unmet_uplift: float = 0.2
    ses_health_multiplier: tuple[float, ...] = _t(1.3, 1.15, 1.0, 0.85, 0.7)
    hospital_base: tuple[float, ...] = _t(0.0, 0.02, 0.04, 0.08, 0.12)
    hospital_unmet_coef: float = 0.004
    hospital_mean_weeks: float = 2.0
    hospital_weekly_cost: float = 2000.0
    supply_need_threshold: int = 2
    ill_health_retirement_level: int = 3

    # child care
    child_base_need: float = 56.0
    school_hours: float = 30.0

    # allocation
    quantum: float = 4.0
    hour_resolution: float = 0.25
    formal_child_care_price: float = 5.0
    formal_social_care_price: float = 17.5
    child_subsidy_cap: float = 2000.0
    benchmark_alpha: float = 0.2
    mixed_routing_scope: str = "kin"
    wealth_share_brackets: tuple[float, ...] = _t(25_000, 100_000)
    wealth_share_rates: tuple[float, ...] = _t(0.02, 0.04, 0.06)
    means_test_lower: float = 14_250.0
    means_test_upper: float = 23_250.0
    means_test_tariff_step: float = 250.0
    minimum_income_guarantee: float = 189.0

    def __post_init__(self) -> None:
        validate(self)

    def replace(self, **changes: Any) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    @property
    def n_years(self) -> int:
        return self.end_year - self.start_year + 1


def validate(cfg: SimConfig) -> None:
    def bad(key: str, msg: str) -> None:
        raise InvariantViolation(snake_to_camel(key), msg)

    if not cfg.start_year < cfg.policy_start_year <= cfg.end_year:
        if cfg.start_year >= cfg.end_year:
            bad("end_year", "startYear must precede endYear")
        bad("policy_start_year", "require startYear < policyStartYear <= endYear")
    if cfg.population_scale <= 0:
        bad("population_scale", "must be positive")
    if not cfg.retirement_age > cfg.working_age > cfg.child_age_limit:
        bad("retirement_age", "require retirementAge > workingAge > childAgeLimit")
    if cfg.weeks_per_year <= 0:
        bad("weeks_per_year", "must be positive")
    if not 0 <= cfg.rng_seed < 2**64:
        bad("rng_seed", "must be a 64-bit unsigned integer")
    for key in ("gm_male", "gm_female"):
        v = getattr(cfg, key)
        if len(v) != 3 or min(v) < 0:
            bad(key, "expects three non-negative values A, B, gamma")
    for key in (
        "ses_initial_wage",
        "ses_final_wage",
        "ses_wage_growth",
        "ses_unemployment_factor",
        "ses_mortality_multiplier",
        "ses_fertility_multiplier",
        "ses_initial_shares",
        "ses_health_multiplier",
        "job_move_prob",
    ):
        if len(getattr(cfg, key)) != 5:
            bad(key, "expects one value per SES group (5)")
    for i, f in zip(cfg.ses_initial_wage, cfg.ses_final_wage):
        if not 0 < i <= f:
            bad("ses_final_wage", "require 0 < initial wage <= final wage")
    if not all(0 <= p <= 1 for p in cfg.job_move_prob):
        bad("job_move_prob", "probabilities must lie in [0, 1]")
    if cfg.early_fertility_multiplier <= 0:
        bad("early_fertility_multiplier", "must be positive")
    if min(cfg.ses_wage_growth) <= 0:
        bad("ses_wage_growth", "must be positive")
    if not 0 < cfg.experience_discount < 1:
        bad("experience_discount", "must lie in (0, 1)")
    if len(cfg.income_share_rates) != len(cfg.income_share_brackets) + 1:
        bad("income_share_rates", "needs one more rate than brackets")
    if list(cfg.income_share_rates) != sorted(cfg.income_share_rates):
        bad("income_share_rates", "must be non-decreasing")
    if len(cfg.wealth_share_rates) != len(cfg.wealth_share_brackets) + 1:
        bad("wealth_share_rates", "needs one more rate than brackets")
    if list(cfg.wealth_share_rates) != sorted(cfg.wealth_share_rates):
        bad("wealth_share_rates", "must be non-decreasing")
    if abs(sum(cfg.wealth_decile_shares) - 1.0) > 1e-9:
        bad("wealth_decile_shares", "must sum to 1")
    if len(cfg.progression_base) != 4 or len(cfg.hospital_base) != 5:
        bad("progression_base", "expects 4 progression and 5 hospital rates")
    if not 0 <= cfg.financial_share <= 1:
        bad("financial_share", "must lie in [0, 1]")
    if cfg.quantum <= 0 or cfg.hour_resolution <= 0:
        bad("quantum", "must be positive")
    if cfg.mixed_routing_scope not in ("household", "kin"):
        bad("mixed_routing_scope", "must be 'household' or 'kin'")
    if not cfg.fertility_min_age < cfg.fertility_max_age:
        bad("fertility_max_age", "must exceed fertilityMinAge")


_FIELDS = {f.name: f for f in fields(SimConfig)}


def camel_to_snake(name: str) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


def snake_to_camel(name: str) -> str:
    head, *rest = name.split("_")
    return head + "".join(p.capitalize() for p in rest)


def config_keys() -> list[str]:
    """All recognised file keys, in declaration order."""
    return [snake_to_camel(n) for n in _FIELDS]


def _coerce(name: str, raw: str) -> Any:
    default = _FIELDS[name].default
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        return tuple(float(p) for p in parts)
    return raw


def parse_config_text(text: str, path: str | None = None) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected 'key = value', got {line!r}", path)
        key, raw = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError(lineno, "empty key", path)
        name = camel_to_snake(key)
        if name not in _FIELDS:
            raise UnknownKey(key)
        try:
            values[name] = _coerce(name, raw)
        except ValueError as exc:
            raise ParseError(lineno, f"bad value for {key}: {exc}", path) from None
    return values


def load_config(path: str | Path | None = None, **overrides: Any) -> SimConfig:
    """Read a config file; missing keys take their defaults."""
    values: dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise MissingFile(f"config file not found: {p}")
        values = parse_config_text(p.read_text(), str(p))
        # relative table paths resolve against the config's directory
        for name, value in values.items():
            if isinstance(value, str) and value and _is_path_key(name):
                values[name] = str((p.parent / value).resolve())
    for name in overrides:
        if name not in _FIELDS:
            raise UnknownKey(name)
    values.update(overrides)
    return SimConfig(**values)


def _is_path_key(name: str) -> bool:
    return name.endswith(("_file", "_table", "_table_male", "_table_female"))


def dump_config(cfg: SimConfig) -> str:
    lines = []
    for name in _FIELDS:
        value = getattr(cfg, name)
        if isinstance(value, tuple):
            value = ", ".join(f"{v:g}" for v in value)
        lines.append(f"{snake_to_camel(name)} = {value}")
    return "\n".join(lines) + "\n"

