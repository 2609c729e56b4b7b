"""Command-line benchmark front end.

Subcommands: ``run`` (execute a configured experiment and emit CSVs),
``verify`` (deterministic invariant suite), ``fit`` (scaling-law fit on an
aggregate CSV column), ``plot`` (self-contained SVG line chart).
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import harness
from .errors import BanditVnError


@click.group()
def main() -> None:
    """Benchmarks for sphere bandits with linearly vanishing noise."""


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--workers", default=1, show_default=True, type=int)
def run_command(config_path: str, out_dir: str, workers: int) -> None:
    """Run the experiment in CONFIG and write runs.csv / aggregate.csv / summary.csv."""
    try:
        config = harness.config_from_json(config_path)
        result = harness.run_experiment(config, workers=workers)
        out = Path(out_dir)
        harness.emit_csv(result.ok_runs, out / "runs.csv")
        harness.emit_csv(result.aggregate, out / "aggregate.csv")
        harness.emit_summary_csv(result.runs, out / "summary.csv")
    except BanditVnError as exc:
        raise click.ClickException(str(exc))
    failed = [r.run_id for r in result.runs if not r.ok]
    click.echo(
        f"{len(result.ok_runs)}/{config.runs} runs completed"
        + (f" (failed: {failed})" if failed else "")
    )
    click.echo(f"wrote {out / 'runs.csv'}, {out / 'aggregate.csv'}, {out / 'summary.csv'}")
    if failed:
        sys.exit(1)


@main.command("verify")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--workers", default=1, show_default=True, type=int)
def verify_command(config_path: str, workers: int) -> None:
    """Check the deterministic invariants on every batch of the configured runs."""
    try:
        config = harness.config_from_json(config_path)
        report = harness.verify(config, workers=workers)
    except BanditVnError as exc:
        raise click.ClickException(str(exc))
    click.echo(report.render())
    if not report.all_passed:
        sys.exit(1)


@main.command("fit")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--column", required=True)
@click.option(
    "--model",
    required=True,
    type=click.Choice([m.value for m in harness.FitModel]),
)
@click.option("--from", "t_from", required=True, type=float)
@click.option("--to", "t_to", required=True, type=float)
def fit_command(input_path: str, column: str, model: str, t_from: float, t_to: float) -> None:
    """Fit a scaling model to one column of an aggregate CSV."""
    try:
        trace = harness.read_aggregate_csv(input_path)
        result = harness.fit_curve(
            trace, column, harness.FitModel(model), (t_from, t_to)
        )
    except BanditVnError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"{column}: {result.describe()}")
    click.echo("params: " + " ".join(format(p, ".17g") for p in result.params))


@main.command("plot")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--columns", required=True, help="comma-separated aggregate column names")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--log-x", is_flag=True, default=False)
@click.option("--log-y", is_flag=True, default=False)
def plot_command(input_path: str, columns: str, out_path: str, log_x: bool, log_y: bool) -> None:
    """Render selected aggregate columns as an SVG line chart."""
    names = [c.strip() for c in columns.split(",") if c.strip()]
    try:
        trace = harness.read_aggregate_csv(input_path)
        harness.emit_svg(trace, names, out_path, log_x=log_x, log_y=log_y)
    except BanditVnError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
