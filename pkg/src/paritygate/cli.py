"""Command-line entry points.

One binary, scriptable subcommands::

    paritygate verify-gate   --config cfg.json --profile smoke --out table.csv
    paritygate run fig6      --config cfg.json --profile smoke --out fig6.csv
    paritygate run fig7 ...
    paritygate run fig8 ...
    paritygate encodings check --out encodings.csv
    paritygate regime-report --out regime.csv

Exit codes: 0 success, 1 configuration error, 2 convergence failure in any
row, 3 I/O error.
"""

from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path

import click

from .errors import ConfigError, ParityGateError
from . import experiments as xp
from ._kernels import backend_name

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CONVERGENCE = 2
EXIT_IO = 3


def _load(config: str | None, profile: str, experiment: str, out: str | None,
          verify_convergence: bool):
    path = Path(config) if config else xp.bundled_config_path()
    try:
        params, dec, spec = xp.load_config(path)
    except FileNotFoundError as exc:
        raise click.exceptions.Exit(EXIT_IO) from exc
    except (ConfigError, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        raise click.exceptions.Exit(EXIT_CONFIG) from exc
    spec = replace(spec, experiment=xp.SweepExperiment(experiment), profile=profile,
                   output_path=out or spec.output_path,
                   verify_convergence=verify_convergence or spec.verify_convergence,
                   cavity_dims=None)
    return params, dec, spec


def _run_sweep(params, dec, spec, jobs: int) -> int:
    out = spec.output_path or f"{spec.experiment.value}.csv"
    try:
        with xp.IncrementalCsvWriter(out) as writer:
            rows = xp.run_experiment(spec, params, dec, jobs=jobs, writer=writer)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        return EXIT_IO
    except ParityGateError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_CONFIG
    click.echo(f"wrote {len(rows)} rows to {out} (backend: {backend_name()})")
    if any(not r.converged for r in rows):
        click.echo("one or more rows failed convergence checks", err=True)
        return EXIT_CONVERGENCE
    return EXIT_OK


def _common_options(fn):
    fn = click.option("--config", type=click.Path(), default=None,
                      help="JSON config (defaults to the bundled parameter table)")(fn)
    fn = click.option("--profile", type=click.Choice(sorted(xp.PROFILES)),
                      default="smoke", show_default=True)(fn)
    fn = click.option("--out", type=click.Path(), default=None,
                      help="output CSV path")(fn)
    fn = click.option("--jobs", type=int, default=1, show_default=True,
                      help="worker processes for grid points")(fn)
    fn = click.option("--verify-convergence", is_flag=True, default=False,
                      help="rerun each point at dt/2 and flag disagreements")(fn)
    return fn


@click.group()
def main():
    """Simulations of parity-encoded multi-target controlled-phase gates."""


@main.command("verify-gate")
@_common_options
def verify_gate(config, profile, out, jobs, verify_convergence):
    """Check the gate truth table for every encoding family."""
    params, dec, spec = _load(config, profile, "truth_table", out, verify_convergence)
    code = _run_sweep(params, dec, spec, jobs)
    sys.exit(code)


@main.group("run")
def run():
    """Run one of the numbered fidelity experiments."""


def _make_run_command(name: str):
    @run.command(name)
    @_common_options
    def _cmd(config, profile, out, jobs, verify_convergence):
        params, dec, spec = _load(config, profile, name, out, verify_convergence)
        sys.exit(_run_sweep(params, dec, spec, jobs))

    return _cmd


for _name in ("fig6", "fig7", "fig8"):
    _make_run_command(_name)


@main.group("encodings")
def encodings():
    """Encoding-family tools."""


@encodings.command("check")
@click.option("--config", type=click.Path(), default=None)
@click.option("--dim", type=int, default=20, show_default=True)
@click.option("--alpha", type=float, default=1.1, show_default=True)
@click.option("--out", type=click.Path(), default="encodings.csv", show_default=True)
def encodings_check(config, dim, alpha, out):
    """Validate every encoding family and write the residual report."""
    try:
        specs = xp.standard_family_specs(alpha=alpha)
        if config:
            import json

            with open(config) as fh:
                data = json.load(fh)
            if "encodings" in data:
                from .encoding import EncodingFamilySpec

                specs = {e["family"]: EncodingFamilySpec.from_dict(e)
                         for e in data["encodings"]}
        rows = xp.encoding_report_rows(specs, dim)
        xp.write_plain_csv(rows, out)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(EXIT_IO)
    except ParityGateError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(f"wrote {len(rows)} encoding reports to {out}")
    sys.exit(EXIT_OK if all(r["passed"] for r in rows) else EXIT_CONFIG)


@main.command("regime-report")
@click.option("--config", type=click.Path(), default=None)
@click.option("--out", type=click.Path(), default="regime.csv", show_default=True)
def regime_report(config, out):
    """Dump the dispersive-validity ratios for the configured parameters."""
    path = Path(config) if config else xp.bundled_config_path()
    try:
        params, _, _ = xp.load_config(path)
        rows = xp.regime_report_rows(params)
        xp.write_plain_csv(rows, out)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(EXIT_IO)
    except ParityGateError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(f"wrote {len(rows)} ratios to {out}")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
