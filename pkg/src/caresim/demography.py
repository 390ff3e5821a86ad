"""Mortality and fertility.

Three regimes by calendar year: a Gompertz-Makeham hazard before the data
era, tabulated age x year rates during it, and a Lee-Carter projection
afterwards. Tables are plain CSV (``age,year,rate``) so real data can replace
the bundled synthetic defaults.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from caresim.errors import DegenerateMatrixError, DegenerateMatrixWarning, TableError

MORTALITY_MALE = "mortality-male"
MORTALITY_FEMALE = "mortality-female"
FERTILITY = "fertility"
KINDS = (MORTALITY_MALE, MORTALITY_FEMALE, FERTILITY)


@dataclass(frozen=True)
class GompertzMakehamParams:
    a: float
    b: float
    gamma: float

    def __post_init__(self) -> None:
        if min(self.a, self.b, self.gamma) < 0:
            raise ValueError("Gompertz-Makeham parameters must be non-negative")


def gm_hazard(age, p: GompertzMakehamParams):
    """Annual death probability ``min(1, A + B exp(gamma * age))``.

    Works elementwise on arrays.
    """
    if np.ndim(age):
        age = np.asarray(age, dtype=float)
        return np.minimum(1.0, p.a + p.b * np.exp(p.gamma * age))
    return min(1.0, p.a + p.b * math.exp(p.gamma * age))


@dataclass
class RateTable:
    """Annual probabilities on a complete age x year grid (``rates[age, year]``)."""

    ages: np.ndarray
    years: np.ndarray
    rates: np.ndarray
    kind: str

    def __post_init__(self) -> None:
        self.ages = np.asarray(self.ages, dtype=int)
        self.years = np.asarray(self.years, dtype=int)
        self.rates = np.asarray(self.rates, dtype=float)
        if self.kind not in KINDS:
            raise TableError(f"unknown table kind {self.kind!r}")
        if self.rates.shape != (len(self.ages), len(self.years)):
            raise TableError("rate grid is not rectangular")
        if not np.all(np.diff(self.ages) == 1) or not np.all(np.diff(self.years) == 1):
            raise TableError("ages and years must be contiguous ranges")
        if not np.all(np.isfinite(self.rates)) or self.rates.min(initial=0) < 0 or self.rates.max(initial=0) > 1:
            raise TableError("rates must lie in [0, 1]")

    @property
    def first_year(self) -> int:
        return int(self.years[0])

    @property
    def last_year(self) -> int:
        return int(self.years[-1])

    @property
    def max_age(self) -> int:
        return int(self.ages[-1])

    def year_column(self, year: int) -> np.ndarray:
        """Rates for one year indexed by age; years outside the grid clamp."""
        j = min(max(year - self.first_year, 0), len(self.years) - 1)
        return self.rates[:, j]

    def rate(self, age: int, year: int) -> float:
        i = min(max(age - int(self.ages[0]), 0), len(self.ages) - 1)
        return float(self.year_column(year)[i])

    def lookup(self, ages: np.ndarray, year: int) -> np.ndarray:
        col = self.year_column(year)
        idx = np.clip(np.asarray(ages, dtype=int) - int(self.ages[0]), 0, len(self.ages) - 1)
        return col[idx]

    def check_fertility_window(self, min_age: int, max_age: int) -> None:
        outside = (self.ages < min_age) | (self.ages > max_age)
        if np.any(self.rates[outside] != 0):
            raise TableError(
                f"fertility rates must be zero outside ages {min_age}-{max_age}"
            )

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["age", "year", "rate"])
            for i, age in enumerate(self.ages):
                for j, year in enumerate(self.years):
                    w.writerow([int(age), int(year), repr(float(self.rates[i, j]))])

    @classmethod
    def from_csv(cls, path: str | Path, kind: str) -> "RateTable":
        path = Path(path)
        if not path.is_file():
            raise TableError(f"rate table not found: {path}")
        cells: dict[tuple[int, int], float] = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["age", "year", "rate"]:
                raise TableError(f"{path}: header must be 'age,year,rate'")
            for n, row in enumerate(reader, start=2):
                try:
                    cells[(int(row["age"]), int(row["year"]))] = float(row["rate"])
                except (TypeError, ValueError):
                    raise TableError(f"{path}:{n}: malformed row") from None
        if not cells:
            raise TableError(f"{path}: empty table")
        ages = sorted({a for a, _ in cells})
        years = sorted({y for _, y in cells})
        ages_r = np.arange(ages[0], ages[-1] + 1)
        years_r = np.arange(years[0], years[-1] + 1)
        if len(cells) != len(ages_r) * len(years_r):
            raise TableError(f"{path}: ages and years do not form a complete grid")
        rates = np.empty((len(ages_r), len(years_r)))
        for (a, y), r in cells.items():
            rates[a - ages_r[0], y - years_r[0]] = r
        return cls(ages_r, years_r, rates, kind)


@dataclass
class LeeCarterParams:
    """``log m(x, t) = a_x + b_x k_t``, with ``sum(b) == 1`` and ``sum(k) == 0``."""

    a: np.ndarray
    b: np.ndarray
    k: np.ndarray
    drift: float
    ages: np.ndarray | None = None
    years: np.ndarray | None = None

    def reconstruct(self) -> np.ndarray:
        return self.a[:, None] + np.outer(self.b, self.k)


def lc_fit(
    log_rates: np.ndarray,
    ages: Sequence[int] | None = None,
    years: Sequence[int] | None = None,
) -> LeeCarterParams:
    """Fit Lee-Carter by SVD of the row-centred log-rate matrix (ages x years)."""
    m = np.asarray(log_rates, dtype=float)
    if m.ndim != 2 or m.shape[0] < 2 or m.shape[1] < 3:
        raise ValueError("need a matrix with at least 2 ages and 3 years")
    if not np.all(np.isfinite(m)):
        raise ValueError("log rates must be finite")
    n_age, n_year = m.shape
    a = m.mean(axis=1)
    centred = m - a[:, None]
    u, s, vt = np.linalg.svd(centred, full_matrices=False)
    scale = max(1.0, float(np.abs(m).max()))
    ages_arr = None if ages is None else np.asarray(ages)
    years_arr = None if years is None else np.asarray(years)
    if s[0] <= 1e-12 * scale * math.sqrt(m.size):
        warnings.warn(
            "centred log-rate matrix is numerically zero; using uniform b and k = 0",
            DegenerateMatrixWarning,
            stacklevel=2,
        )
        return LeeCarterParams(
            a, np.full(n_age, 1.0 / n_age), np.zeros(n_year), 0.0, ages_arr, years_arr
        )
    b = u[:, 0] * s[0]
    k = vt[0].copy()
    total = b.sum()
    if abs(total) <= 1e-12 * np.abs(b).sum():
        raise DegenerateMatrixError("age loadings sum to zero; cannot normalise sum(b) = 1")
    b = b / total
    k = k * total
    # rows are centred so mean(k) is zero up to rounding; fold the residue into a
    kbar = k.mean()
    k = k - kbar
    a = a + b * kbar
    drift = float((k[-1] - k[0]) / (n_year - 1))
    return LeeCarterParams(a, b, k, drift, ages_arr, years_arr)


def lc_project(
    params: LeeCarterParams,
    horizon_years: int,
    rng: np.random.Generator | None = None,
    sigma: float = 0.0,
    kind: str = MORTALITY_MALE,
    first_year: int | None = None,
) -> RateTable:
    """Random walk with drift on ``k``; rates ``exp(a + b k)`` clipped to [0, 1]."""
    if horizon_years < 1:
        raise ValueError("horizon_years must be >= 1")
    if sigma > 0 and rng is None:
        raise ValueError("a generator is required when sigma > 0")
    if first_year is None:
        first_year = int(params.years[-1]) + 1 if params.years is not None else len(params.k)
    ages = params.ages if params.ages is not None else np.arange(len(params.a))
    k = float(params.k[-1])
    ks = np.empty(horizon_years)
    shocks = rng.standard_normal(horizon_years) if sigma > 0 else np.zeros(horizon_years)
    for j in range(horizon_years):
        k = k + params.drift + sigma * shocks[j]
        ks[j] = k
    rates = np.clip(np.exp(params.a[:, None] + np.outer(params.b, ks)), 0.0, 1.0)
    return RateTable(ages, np.arange(first_year, first_year + horizon_years), rates, kind)


def fit_and_project(
    table: RateTable,
    end_year: int,
    rng: np.random.Generator | None = None,
    sigma: float = 0.0,
    age_window: tuple[int, int] | None = None,
) -> RateTable:
    """Project ``table`` from its last year to ``end_year``.

    With ``age_window`` only those ages are fitted (log of zero is undefined
    outside the fertile window); other ages project as zero.
    """
    horizon = end_year - table.last_year
    if horizon < 1:
        horizon = 1
    if age_window is None:
        rows = np.arange(len(table.ages))
    else:
        rows = np.flatnonzero((table.ages >= age_window[0]) & (table.ages <= age_window[1]))
    sub = table.rates[rows]
    floor = 1e-12
    lc = lc_fit(np.log(np.maximum(sub, floor)), table.ages[rows], table.years)
    proj = lc_project(lc, horizon, rng, sigma, table.kind, table.last_year + 1)
    rates = np.zeros((len(table.ages), horizon))
    rates[rows] = proj.rates
    return RateTable(table.ages, proj.years, rates, table.kind)


class DemographyModel:
    """Year-regime dispatch for mortality and fertility probabilities."""

    def __init__(
        self,
        gm: dict[str, GompertzMakehamParams],
        mortality_tables: dict[str, RateTable],
        mortality_projections: dict[str, RateTable],
        fertility_table: RateTable,
        fertility_projection: RateTable,
        pre_data_fertility: np.ndarray,
        data_start_year: int = 1951,
        projection_start_year: int = 2009,
        need_uplift: float = 0.15,
        early_fertility: tuple[int, float, int] | None = None,
    ):
        self.gm = gm
        self.mortality_tables = mortality_tables
        self.mortality_projections = mortality_projections
        self.fertility_table = fertility_table
        self.fertility_projection = fertility_projection
        self.pre_data_fertility = pre_data_fertility
        self.data_start_year = data_start_year
        self.projection_start_year = projection_start_year
        self.need_uplift = need_uplift
        # (start year, multiplier at start, year the multiplier reaches 1)
        self.early_fertility = early_fertility

    def early_fertility_multiplier(self, year: int) -> float:
        if self.early_fertility is None:
            return 1.0
        start, m0, end = self.early_fertility
        if end <= start:
            return 1.0
        frac = min(1.0, max(0.0, (end - year) / (end - start)))
        return 1.0 + (m0 - 1.0) * frac

    def regime(self, year: int) -> str:
        if year < self.data_start_year:
            return "gompertz-makeham"
        if year < self.projection_start_year:
            return "table"
        return "lee-carter"

    def base_mortality(self, sex: str, ages, year: int):
        regime = self.regime(year)
        if regime == "gompertz-makeham":
            return gm_hazard(ages, self.gm[sex])
        src = self.mortality_tables if regime == "table" else self.mortality_projections
        if np.ndim(ages):
            return src[sex].lookup(ages, year)
        return src[sex].rate(int(ages), year)

    def mortality(self, sex: str, ages, year: int, need_levels=0, multiplier=1.0):
        base = self.base_mortality(sex, ages, year)
        p = base * (1.0 + self.need_uplift * np.asarray(need_levels)) * multiplier
        return np.minimum(p, 1.0) if np.ndim(p) else min(float(p), 1.0)

    def fertility(self, ages, year: int):
        if year < self.data_start_year:
            col = self.pre_data_fertility
            idx = np.clip(np.asarray(ages, dtype=int), 0, len(col) - 1)
            return col[idx] * self.early_fertility_multiplier(year)
        src = self.fertility_table if year < self.projection_start_year else self.fertility_projection
        return src.lookup(ages, year)


def annual_mortality(agent, year: int, model: DemographyModel, multiplier: float = 1.0) -> float:
    """Death probability for one agent in ``year``."""
    age = year - agent.birth_year
    return float(model.mortality(agent.sex, age, year, agent.care_need_level, multiplier))


def sample_births(
    women: Sequence, probabilities: Iterable[float], rng: np.random.Generator
) -> list:
    """Return the subset of candidate mothers who give birth this year.

    Each candidate bears at most one child, independently, with her own
    probability. Creating the newborn agents is the caller's job since it
    needs the household registry.
    """
    probs = np.asarray(list(probabilities), dtype=float)
    if len(probs) != len(women):
        raise ValueError("one probability per candidate is required")
    if not len(women):
        return []
    draws = rng.random(len(women))
    return [w for w, u, p in zip(women, draws, probs) if u < p]


# -- synthetic defaults -------------------------------------------------------


def synthetic_mortality_table(
    gm: GompertzMakehamParams,
    first_year: int = 1951,
    last_year: int = 2008,
    max_age: int = 100,
    start_level: float = 0.85,
) -> RateTable:
    """Gompertz-Makeham shape with age-graded secular improvement.

    Young ages improve faster than old ages, so the fitted Lee-Carter age
    loadings are not flat.
    """
    ages = np.arange(max_age + 1)
    years = np.arange(first_year, last_year + 1)
    base = gm_hazard(ages, gm) * start_level
    improvement = 0.022 - 0.012 * ages / max_age
    t = years - first_year
    rates = base[:, None] * np.exp(-np.outer(improvement, t))
    return RateTable(ages, years, np.clip(rates, 0.0, 1.0), MORTALITY_MALE)


def fertility_shape(ages: np.ndarray, peak_age: float, spread: float, min_age: int, max_age: int) -> np.ndarray:
    shape = np.exp(-0.5 * ((ages - peak_age) / spread) ** 2)
    shape[(ages < min_age) | (ages > max_age)] = 0.0
    return shape


def synthetic_fertility_table(
    peak_rate: float,
    peak_age: float,
    spread: float,
    min_age: int,
    max_age: int,
    first_year: int = 1951,
    last_year: int = 2008,
    top_age: int = 100,
) -> RateTable:
    """Post-war rise to a 1960s peak followed by decline, as an age x year grid."""
    ages = np.arange(top_age + 1)
    years = np.arange(first_year, last_year + 1)
    t = years.astype(float)
    level = 0.78 + 0.22 * np.exp(-0.5 * ((t - 1963) / 6.0) ** 2) - 0.2 * (1 - np.exp(-np.maximum(t - 1965, 0) / 12.0))
    # the peak age drifts upward after 1975
    rates = np.zeros((len(ages), len(years)))
    for j, year in enumerate(years):
        shift = max(0.0, (year - 1975) * 0.12)
        col = fertility_shape(ages.astype(float), peak_age + shift, spread, min_age, max_age)
        rates[:, j] = peak_rate * level[j] * col
    return RateTable(ages, years, np.clip(rates, 0.0, 1.0), FERTILITY)


def build_demography(cfg, rng: np.random.Generator | None = None) -> DemographyModel:
    """Assemble the demography model from config (CSV tables or synthetic defaults)."""
    gm = {
        "male": GompertzMakehamParams(*cfg.gm_male),
        "female": GompertzMakehamParams(*cfg.gm_female),
    }
    first, last = cfg.data_start_year, cfg.projection_start_year - 1
    tables: dict[str, RateTable] = {}
    for sex, path, kind in (
        ("male", cfg.mortality_table_male, MORTALITY_MALE),
        ("female", cfg.mortality_table_female, MORTALITY_FEMALE),
    ):
        if path:
            tables[sex] = RateTable.from_csv(path, kind)
        else:
            t = synthetic_mortality_table(gm[sex], first, last, cfg.max_age)
            tables[sex] = RateTable(t.ages, t.years, t.rates, kind)
    if cfg.fertility_table:
        fert = RateTable.from_csv(cfg.fertility_table, FERTILITY)
    else:
        fert = synthetic_fertility_table(
            cfg.fertility_peak_rate,
            cfg.fertility_peak_age,
            cfg.fertility_spread,
            cfg.fertility_min_age,
            cfg.fertility_max_age,
            first,
            last,
            cfg.max_age,
        )
    fert.check_fertility_window(cfg.fertility_min_age, cfg.fertility_max_age)
    end = max(cfg.end_year, cfg.projection_start_year)
    projections = {
        sex: fit_and_project(t, end, rng, cfg.lc_sigma) for sex, t in tables.items()
    }
    fert_proj = fit_and_project(
        fert, end, rng, cfg.lc_sigma, (cfg.fertility_min_age, cfg.fertility_max_age)
    )
    pre = cfg.fertility_peak_rate * fertility_shape(
        np.arange(cfg.max_age + 1, dtype=float),
        cfg.fertility_peak_age,
        cfg.fertility_spread,
        cfg.fertility_min_age,
        cfg.fertility_max_age,
    )
    return DemographyModel(
        gm,
        tables,
        projections,
        fert,
        fert_proj,
        pre,
        cfg.data_start_year,
        cfg.projection_start_year,
        cfg.need_mortality_uplift,
        (cfg.start_year, cfg.early_fertility_multiplier, cfg.early_fertility_decline_end),
    )


__all__ = [
    "GompertzMakehamParams",
    "RateTable",
    "LeeCarterParams",
    "DemographyModel",
    "gm_hazard",
    "lc_fit",
    "lc_project",
    "fit_and_project",
    "annual_mortality",
    "sample_births",
    "build_demography",
    "synthetic_mortality_table",
    "synthetic_fertility_table",
]
