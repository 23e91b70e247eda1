"""Command-line interface: pricing, sweeps, oracle runs, reproduction.

Exit codes: 0 success, 2 configuration error (the message names the
offending field), 3 numerical failure.  Every command is deterministic
given its flags — nothing is ever seeded from the clock.
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click

from .config import (
    SWEEPABLE_PARAMETERS,
    canonical_raw,
    load_raw,
    resolve_config,
)
from .errors import ConfigError, NumericalError
from .oracle import DEFAULT_DT, oracle_report
from .pricing import CSV_HEADER, price, run_sweep
from . import reproduce as repro

__all__ = ["main"]


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except NumericalError as exc:
            click.echo(f"numerical error: {exc}", err=True)
            sys.exit(3)
    return wrapper


@click.group()
def main():
    """Pricing tools for index-linked convertible catastrophe notes."""


@main.command("price")
@click.option("--config", "config_path", required=True,
              type=click.Path(), help="JSON config file.")
@click.option("--paths", required=True, type=int, help="Monte Carlo paths.")
@click.option("--seed", required=True, type=int, help="Master RNG seed.")
@click.option("--dump-breakdown", "dump_path", type=click.Path(),
              default=None, help="Also write a one-row CSV breakdown here.")
@_handle_errors
def cmd_price(config_path, paths, seed, dump_path):
    """Price the contract and print the breakdown as JSON."""
    cfg = resolve_config(load_raw(config_path))
    bd = price(cfg, n_paths=paths, seed=seed)
    click.echo(json.dumps(bd.to_json_dict(), sort_keys=True, indent=2))
    if dump_path is not None:
        with open(dump_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(CSV_HEADER + "\n" + bd.csv_row() + "\n")


def _load_sweep_spec(path) -> dict:
    spec = load_raw(path)
    if not isinstance(spec, dict):
        raise ConfigError("sweep", "sweep spec must be a JSON object")
    for key in spec:
        if key not in ("parameter", "values", "base_config", "shared_seed"):
            raise ConfigError(f"sweep.{key}", "unknown field")
    if "parameter" not in spec:
        raise ConfigError("sweep.parameter", "missing required field")
    if spec["parameter"] not in SWEEPABLE_PARAMETERS:
        raise ConfigError(
            "sweep.parameter",
            f"unknown parameter {spec['parameter']!r}; expected one of "
            f"{sorted(SWEEPABLE_PARAMETERS)}")
    values = spec.get("values")
    if not isinstance(values, list) or not values:
        raise ConfigError("sweep.values", "must be a nonempty list")
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError("sweep.values", f"not a number: {v!r}")
    if "shared_seed" in spec and (isinstance(spec["shared_seed"], bool)
                                  or not isinstance(spec["shared_seed"], int)):
        raise ConfigError("sweep.shared_seed", "must be an integer")
    return spec


@main.command("sweep")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Base JSON config (the sweep spec may name one instead).")
@click.option("--sweep", "spec_path", required=True, type=click.Path(),
              help="Sweep spec JSON: parameter, values, base_config?, shared_seed?.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output CSV.")
@click.option("--paths", type=int, default=None,
              help="Override the config's Monte Carlo path count.")
@_handle_errors
def cmd_sweep(config_path, spec_path, out_path, paths):
    """Price along a one-parameter grid with common random numbers."""
    spec = _load_sweep_spec(spec_path)
    base = spec.get("base_config", config_path)
    if base is None:
        raise ConfigError("sweep.base_config",
                          "no base config: pass --config or set base_config")
    raw = load_raw(base)
    seed = spec.get("shared_seed")
    results = run_sweep(raw, spec["parameter"], spec["values"],
                        n_paths=paths, seed=seed)
    lines = ["parameter,value,V0,I1,I2,I3,se"]
    for value, bd in zip(spec["values"], results):
        lines.append(",".join([
            spec["parameter"], repr(float(value)), repr(bd.V0), repr(bd.I1),
            repr(bd.I2), repr(bd.I3), repr(bd.se_total),
        ]))
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    click.echo(f"wrote {len(results)} rows to {out_path}")


@main.command("oracle")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--paths", required=True, type=int, help="Monte Carlo paths.")
@click.option("--seed", required=True, type=int, help="Master RNG seed.")
@click.option("--dt", type=float, default=DEFAULT_DT, show_default="1/252",
              help="Time step for the joint simulation.")
@click.option("--dump", "dump_path", type=click.Path(), default=None,
              help="Write a per-path CSV dump here.")
@_handle_errors
def cmd_oracle(config_path, paths, seed, dt, dump_path):
    """Joint-simulation price with a comparison against the analytic route."""
    if dt <= 0.0:
        raise ConfigError("dt", "must be > 0")
    cfg = resolve_config(load_raw(config_path))
    report = oracle_report(cfg, n_paths=paths, seed=seed, dt=dt,
                           dump_path=dump_path)
    click.echo(json.dumps(report, sort_keys=True, indent=2))


def _write(out_dir: str, name: str, text: str) -> None:
    with open(os.path.join(out_dir, name), "w", encoding="utf-8",
              newline="") as fh:
        fh.write(text)


@main.command("reproduce")
@click.option("--table3", "do_table", is_flag=True,
              help="Reproduce the reference price table.")
@click.option("--figures", "do_figures", is_flag=True,
              help="Emit the figure-grid CSVs.")
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="Output directory.")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Config to use instead of the bundled canonical one.")
@click.option("--paths", type=int, default=None,
              help="Override the config's Monte Carlo path count.")
@click.option("--seed", type=int, default=None,
              help="Override the config's master seed.")
@_handle_errors
def cmd_reproduce(do_table, do_figures, out_dir, config_path, paths, seed):
    """Recompute the published reference table and figure data."""
    if not do_table and not do_figures:
        raise ConfigError("reproduce", "pass --table3 and/or --figures")
    raw = canonical_raw() if config_path is None else load_raw(config_path)
    os.makedirs(out_dir, exist_ok=True)
    if do_table:
        result = repro.compute_table3(raw, n_paths=paths, seed=seed)
        _write(out_dir, "table3.csv", repro.table3_csv(result))
        _write(out_dir, "deviations.txt", repro.deviations_report(result))
        click.echo(f"wrote table3.csv and deviations.txt to {out_dir}")
    if do_figures:
        _write(out_dir, "fig_kp_grid.csv",
               repro.figure_kp_grid(raw, n_paths=paths, seed=seed))
        _write(out_dir, "fig_nu_grid.csv",
               repro.figure_nu_grid(raw, n_paths=paths, seed=seed))
        _write(out_dir, "fig_term.csv",
               repro.figure_term(raw, n_paths=paths, seed=seed))
        _write(out_dir, "fig_zeta.csv",
               repro.figure_zeta(raw, n_paths=paths, seed=seed))
        click.echo(f"wrote figure CSVs to {out_dir}")


if __name__ == "__main__":  # pragma: no cover
    main()
