"""Yearly metrics, byte-stable CSV output, paired scenario comparison and plots."""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from caresim import allocation as al
from caresim.errors import CareSimError, MismatchedReplicates
from caresim.policy import Levers


@dataclass
class YearlyMetrics:
    year: int
    population: int = 0
    taxPayerShare: float = 0.0
    employmentRate: float = 0.0
    informalCareHours: float = 0.0
    privateFormalCareHours: float = 0.0
    publicCareHours: float = 0.0
    unmetSocialCareHours: float = 0.0
    totalSocialCareNeed: float = 0.0
    perCapitaCareBurden: float = 0.0
    publicCareCost: float = 0.0
    hospitalizationCost: float = 0.0
    informalCareShare: float = 0.0
    genderPayGap: float = 0.0
    formalChildCareHours: float = 0.0
    informalChildCareShare: float = 0.0
    hoursOffWork: float = 0.0
    policyDirectCost: float = 0.0
    informalChildCareHours: float = 0.0
    unmetChildCareHours: float = 0.0
    totalChildCareNeed: float = 0.0
    childCareSubsidy: float = 0.0
    households: int = 0


COLUMNS: tuple[str, ...] = tuple(f.name for f in fields(YearlyMetrics))
INT_COLUMNS = frozenset(("year", "population", "households"))
# compared as window means rather than window totals
MEAN_METRICS = frozenset(
    (
        "population",
        "households",
        "taxPayerShare",
        "employmentRate",
        "informalCareShare",
        "genderPayGap",
        "informalChildCareShare",
        "perCapitaCareBurden",
    )
)


class YearlySeries(list):
    """A run's metrics, one ``YearlyMetrics`` per simulated year."""

    def column(self, name: str) -> np.ndarray:
        if name not in COLUMNS:
            raise KeyError(name)
        return np.array([getattr(m, name) for m in self], dtype=float)

    def row(self, year: int) -> YearlyMetrics:
        for m in self:
            if m.year == year:
                return m
        raise KeyError(year)

    def to_csv_text(self) -> str:
        lines = [",".join(COLUMNS)]
        for m in self:
            lines.append(",".join(_fmt(name, getattr(m, name)) for name in COLUMNS))
        return "\n".join(lines) + "\n"


def _fmt(name: str, value) -> str:
    if name in INT_COLUMNS:
        return str(int(value))
    v = float(value)
    if v == 0:
        return "0"
    return f"{v:.6g}"


@dataclass
class YearContext:
    year: int
    weeks: int
    working_age: int
    retirement_age: int
    full_time_hours: float
    hospital_cost: float
    levers: Levers
    benchmark_levers: Levers
    prices: al.CarePrices
    alloc: al.AllocationParams


def _share(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def record_year(world, ledger: al.CareLedger, ctx: YearContext) -> YearlyMetrics:
    """Compute one row of metrics. Care flows are weekly ledger sums times the
    weeks per year."""
    weeks = ctx.weeks
    y = ctx.year
    living = list(world.living.values())
    employed = [a for a in living if a.status == "employed"]
    working_age = sum(1 for a in living if ctx.working_age <= a.age(y) < ctx.retirement_age)
    pay = {"male": [], "female": []}
    for a in employed:
        pay[a.sex].append(a.hourly_wage * ctx.full_time_hours * a.worked_share)
    gap = 0.0
    if pay["male"] and pay["female"]:
        male_mean = math.fsum(pay["male"]) / len(pay["male"])
        gap = _share(math.fsum(pay["female"]) / len(pay["female"]), male_mean)

    social = ledger.social.values()
    child = ledger.child.values()
    informal = weeks * math.fsum(r.informal for r in social)
    private = weeks * math.fsum(r.private_formal for r in social)
    public = weeks * math.fsum(r.public for r in social)
    unmet = weeks * math.fsum(r.unmet for r in social)
    need = weeks * math.fsum(r.need for r in social)
    child_informal = weeks * math.fsum(r.informal for r in child)
    child_formal = weeks * math.fsum(r.private_formal for r in child)
    carers = sum(1 for h in ledger.informal_social_by_carer.values() if h > 0)
    public_cost = weeks * (ledger.means_tested_public + ledger.theta_subsidy)

    policy_cost = 0.0
    if ctx.levers != ctx.benchmark_levers:
        actual = ledger.child_subsidy + ledger.means_tested_public + ledger.theta_subsidy
        policy_cost = weeks * (actual - benchmark_rule_spend(ledger, ctx))

    return YearlyMetrics(
        year=y,
        population=len(living),
        taxPayerShare=_share(len(employed), len(living)),
        employmentRate=_share(len(employed), working_age),
        informalCareHours=informal,
        privateFormalCareHours=private,
        publicCareHours=public,
        unmetSocialCareHours=unmet,
        totalSocialCareNeed=need,
        perCapitaCareBurden=_share(informal, carers),
        publicCareCost=public_cost,
        hospitalizationCost=ctx.hospital_cost,
        informalCareShare=_share(informal, informal + private + public),
        genderPayGap=gap,
        formalChildCareHours=child_formal,
        informalChildCareShare=_share(child_informal, child_informal + child_formal),
        hoursOffWork=weeks * math.fsum(h.hours_off for h in ledger.households.values()),
        policyDirectCost=policy_cost,
        informalChildCareHours=child_informal,
        unmetChildCareHours=weeks * math.fsum(r.unmet for r in child),
        totalChildCareNeed=weeks * math.fsum(r.need for r in child),
        childCareSubsidy=weeks * ledger.child_subsidy,
        households=len(world.households),
    )


def benchmark_rule_spend(ledger: al.CareLedger, ctx: YearContext) -> float:
    """Weekly public spend the same care flows would have cost under benchmark levers."""
    bench = ctx.benchmark_levers
    price_c = ctx.prices.formal_child_care
    child = 0.0
    for r in ledger.child.values():
        if r.private_formal > 0:
            cap = bench.child_subsidy_cap * r.n_children / ctx.weeks
            child += min(bench.alpha * price_c * r.private_formal, cap)
    social = 0.0
    for r in ledger.social.values():
        hours = al.public_hours_for(r.level, r.need, r.savings, r.weekly_income, bench, ctx.prices, ctx.alloc)
        social += hours * ctx.prices.formal_social_care
    return child + social


def write_series(series: Sequence[YearlyMetrics], path: str | Path) -> Path:
    """Write the fixed-column CSV (LF line endings, 6 significant digits)."""
    path = Path(path)
    text = YearlySeries(series).to_csv_text()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CareSimError(f"cannot write {path}: {exc}") from exc
    return path


def read_series(path: str | Path) -> YearlySeries:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise CareSimError(f"{path}: unexpected columns")
        out = YearlySeries()
        for row in reader:
            vals = {k: (int(float(v)) if k in INT_COLUMNS else float(v)) for k, v in row.items()}
            out.append(YearlyMetrics(**vals))
    return out


# -- comparison ------------------------------------------------------------------------


@dataclass
class ComparisonSet:
    """Per-scenario series for each replicate; replicate ``i`` of every scenario
    shares the seed ``seeds[i]``."""

    series: dict[str, list]
    seeds: list[int] = field(default_factory=list)


@dataclass
class ComparisonRow:
    scenario: str
    metric: str
    replicates: int
    scenario_value: float
    reference_value: float
    mean_diff: float
    sd_diff: float | None
    n_positive: int
    n_negative: int


def window_value(series: Sequence[YearlyMetrics], metric: str, first: int, last: int) -> float:
    """Window total of a flow metric, or window mean of a rate or stock."""
    vals = [getattr(m, metric) for m in series if first <= m.year <= last]
    if not vals:
        return 0.0
    total = math.fsum(vals)
    return total / len(vals) if metric in MEAN_METRICS else total


def compare_scenarios(
    comparison: ComparisonSet,
    reference: str = "benchmark",
    window: tuple[int, int] = (2020, 2050),
    metrics: Iterable[str] | None = None,
) -> list[ComparisonRow]:
    """Paired differences (scenario minus reference) over the window, per metric."""
    if reference not in comparison.series:
        raise MismatchedReplicates(f"reference scenario {reference!r} missing")
    ref_runs = comparison.series[reference]
    metrics = [m for m in (metrics or COLUMNS) if m != "year"]
    rows = []
    for name, runs in comparison.series.items():
        if len(runs) != len(ref_runs):
            raise MismatchedReplicates(
                f"{name} has {len(runs)} replicates, {reference} has {len(ref_runs)}"
            )
        for metric in metrics:
            a = np.array([window_value(r, metric, *window) for r in runs])
            b = np.array([window_value(r, metric, *window) for r in ref_runs])
            d = a - b
            n = len(d)
            rows.append(
                ComparisonRow(
                    scenario=name,
                    metric=metric,
                    replicates=n,
                    scenario_value=float(a.mean()) if n else 0.0,
                    reference_value=float(b.mean()) if n else 0.0,
                    mean_diff=float(d.mean()) if n else 0.0,
                    sd_diff=float(d.std(ddof=1)) if n > 1 else None,
                    n_positive=int((d > 0).sum()),
                    n_negative=int((d < 0).sum()),
                )
            )
    return rows


def write_comparison(rows: Sequence[ComparisonRow], path: str | Path) -> Path:
    path = Path(path)
    with_sd = any(r.sd_diff is not None for r in rows)
    cols = ["scenario", "metric", "replicates", "scenarioValue", "referenceValue", "meanDiff"]
    if with_sd:
        cols.append("sdDiff")
    cols += ["nPositive", "nNegative"]
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    for r in rows:
        vals = [r.scenario, r.metric, str(r.replicates), _g(r.scenario_value), _g(r.reference_value), _g(r.mean_diff)]
        if with_sd:
            vals.append(_g(r.sd_diff or 0.0))
        vals += [str(r.n_positive), str(r.n_negative)]
        buf.write(",".join(vals) + "\n")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        raise CareSimError(f"cannot write {path}: {exc}") from exc
    return path


def _g(v: float) -> str:
    return "0" if v == 0 else f"{v:.6g}"


_REP_FILE = re.compile(r"^rep(\d+)_seed(\d+)\.csv$")


def replicate_filename(index: int, seed: int) -> str:
    return f"rep{index:03d}_seed{seed}.csv"


def write_comparison_set(comparison: ComparisonSet, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    for name, runs in comparison.series.items():
        for i, (seed, series) in enumerate(zip(comparison.seeds, runs)):
            written.append(write_series(series, out_dir / name / replicate_filename(i, seed)))
    return written


def load_comparison_set(in_dir: str | Path) -> ComparisonSet:
    """Read the ``<scenario>/repNNN_seedS.csv`` layout written by a batch."""
    in_dir = Path(in_dir)
    if not in_dir.is_dir():
        raise CareSimError(f"{in_dir} is not a directory")
    series: dict[str, list] = {}
    seeds_by: dict[str, list[int]] = {}
    for sub in sorted(p for p in in_dir.iterdir() if p.is_dir()):
        files = []
        for f in sub.iterdir():
            m = _REP_FILE.match(f.name)
            if m:
                files.append((int(m.group(1)), int(m.group(2)), f))
        if not files:
            continue
        files.sort()
        series[sub.name] = [read_series(f) for _, _, f in files]
        seeds_by[sub.name] = [s for _, s, _ in files]
    if not series:
        raise CareSimError(f"no replicate CSVs under {in_dir}")
    seed_lists = list(seeds_by.values())
    if any(s != seed_lists[0] for s in seed_lists):
        raise MismatchedReplicates("scenarios were not run on the same seeds")
    return ComparisonSet(series, seed_lists[0])


# -- plots -----------------------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "caresim"
    plt.rcParams["svg.fonttype"] = "path"
    return plt


def render_plots(data, out_dir: str | Path, metrics: Iterable[str] | None = None) -> list[Path]:
    """One SVG per metric: a line chart for a series, a bar chart of mean
    paired differences for comparison rows."""
    if not data:
        raise CareSimError("nothing to plot: empty series")
    plt = _pyplot()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if isinstance(data[0], ComparisonRow):
        names = sorted({r.metric for r in data})
        for metric in metrics or names:
            rows = [r for r in data if r.metric == metric]
            fig, ax = plt.subplots(figsize=(6, 4))
            ax.bar([r.scenario for r in rows], [r.mean_diff for r in rows], color="tab:blue")
            ax.axhline(0, color="black", linewidth=0.8)
            ax.set_title(f"{metric}: mean paired difference")
            written.append(_save(fig, out_dir / f"compare_{metric}.svg", plt))
        return written
    series = YearlySeries(data)
    years = series.column("year")
    for metric in metrics or [c for c in COLUMNS if c != "year"]:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(years, series.column(metric), color="tab:blue", linewidth=1.2)
        ax.set_xlabel("year")
        ax.set_title(metric)
        written.append(_save(fig, out_dir / f"{metric}.svg", plt))
    return written


def _save(fig, path: Path, plt) -> Path:
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise CareSimError(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)
    return path
