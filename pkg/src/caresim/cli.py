"""Command-line interface: ``simulate``, ``batch`` and ``compare``."""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from caresim.config import load_config
from caresim.errors import CareSimError
from caresim.policy import load_scenario
from caresim.reports import (
    compare_scenarios,
    load_comparison_set,
    render_plots,
    write_comparison,
    write_comparison_set,
    write_series,
)
from caresim.simulation import run_batch, run_simulation

OUT_ENV = "CARESIM_OUT"


def _out_dir(out: str | None) -> Path:
    value = out or os.environ.get(OUT_ENV)
    if not value:
        raise click.UsageError(f"no output directory: pass --out or set {OUT_ENV}")
    return Path(value)


@click.group()
@click.version_option(package_name="caresim")
def main() -> None:
    """Simulate child and social care provision across kinship networks."""


@main.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="key = value config file")
@click.option("--scenario", default="benchmark", show_default=True, help="preset name or scenario file")
@click.option("--seed", type=int, default=None, help="RNG seed (defaults to the config's rngSeed)")
@click.option("--out", default=None, help=f"output directory (default ${OUT_ENV})")
@click.option("--plots", is_flag=True, help="also write one SVG per metric")
def simulate(config_path, scenario, seed, out, plots) -> None:
    """Run one scenario and write its yearly metrics CSV."""
    cfg = load_config(config_path)
    sc = load_scenario(scenario, activation_year=cfg.policy_start_year)
    out_dir = _out_dir(out)
    used_seed = cfg.rng_seed if seed is None else seed
    series = run_simulation(cfg, sc, used_seed)
    path = write_series(series, out_dir / f"{sc.name}_seed{used_seed}.csv")
    if plots:
        render_plots(series, out_dir / "plots")
    click.echo(str(path))


@main.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--scenarios", default="benchmark,P1,P2,P3,P4", show_default=True, help="comma-separated presets or files")
@click.option("--replicates", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--base-seed", type=int, default=0, show_default=True)
@click.option("--out", default=None, help=f"output directory (default ${OUT_ENV})")
def batch(config_path, scenarios, replicates, base_seed, out) -> None:
    """Run scenarios on paired seeds and write every series plus a comparison table."""
    cfg = load_config(config_path)
    scs = [load_scenario(s.strip(), activation_year=cfg.policy_start_year) for s in scenarios.split(",") if s.strip()]
    out_dir = _out_dir(out)

    def progress(name: str, seed: int) -> None:
        click.echo(f"done {name} seed={seed}", err=True)

    comparison = run_batch(cfg, scs, replicates, base_seed, progress=progress)
    write_comparison_set(comparison, out_dir)
    if "benchmark" in comparison.series:
        rows = compare_scenarios(comparison, window=(cfg.policy_start_year, cfg.end_year))
        write_comparison(rows, out_dir / "comparison.csv")
    click.echo(str(out_dir))


@main.command()
@click.option("--in", "in_dir", required=True, type=click.Path(file_okay=False), help="batch output directory")
@click.option("--out", default=None, help=f"output directory (default ${OUT_ENV})")
@click.option("--reference", default="benchmark", show_default=True)
@click.option("--first-year", type=int, default=2020, show_default=True)
@click.option("--last-year", type=int, default=2050, show_default=True)
@click.option("--plots", is_flag=True, help="also write a bar chart per metric")
def compare(in_dir, out, reference, first_year, last_year, plots) -> None:
    """Paired differences of each scenario against the reference."""
    comparison = load_comparison_set(in_dir)
    rows = compare_scenarios(comparison, reference=reference, window=(first_year, last_year))
    out_dir = _out_dir(out)
    path = write_comparison(rows, out_dir / "comparison.csv")
    if plots:
        render_plots(rows, out_dir / "plots")
    click.echo(str(path))


def run() -> None:
    """Entry point that turns library errors into a message and exit status 1."""
    try:
        main(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except (CareSimError, OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    run()
