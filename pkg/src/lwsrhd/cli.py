"""Command-line entry points: run, convergence, cases.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import sys

import click

from .app import ConfigError, RunConfig, convergence as run_convergence
from .app import load_config, run as run_case
from .cases import case_library
from .eos import EosError
from .mesh import MeshError
from .solver import SolverError


@click.group()
def main():
    """2D special-relativistic hydrodynamics on adaptive curved meshes."""


def _load(config):
    try:
        return load_config(config)
    except (ConfigError, KeyError, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)


@main.command()
@click.option("--config", required=True, type=click.Path(exists=False),
              help="INI run configuration")
@click.option("--out", default=None, type=click.Path(), help="output directory")
@click.option("--threads", default=0, type=int, help="compute threads")
def run(config, out, threads):
    """Advance a case to its final time; write snapshots and a report."""
    cfg = _load(config)
    if threads:
        cfg.threads = threads
    try:
        field, report = run_case(cfg, out_dir=out)
    except (SolverError, EosError, MeshError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(3)
    click.echo(f"{cfg.case}: {report.steps} steps "
               f"({report.rejected} rejected), "
               f"{field.mesh.n_elements} elements, "
               f"min rho {report.min_rho:.3e}, min q {report.min_q:.3e}, "
               f"wall {report.wall_time:.1f}s")


def _parse_levels(text):
    if ".." in text:
        a, b = text.split("..")
        return [2 ** k for k in range(int(a), int(b) + 1)]
    return [int(v) for v in text.split(",")]


@main.command()
@click.option("--config", required=True, type=click.Path(exists=False))
@click.option("--levels", required=True,
              help="mesh sizes: '4..6' for 16,32,64 or a list '16,32,64'")
def convergence(config, levels):
    """Grid-convergence study on uniform meshes (needs an exact solution)."""
    cfg = _load(config)
    try:
        res = _parse_levels(levels)
    except ValueError:
        click.echo(f"bad --levels {levels!r}", err=True)
        sys.exit(2)
    try:
        rows = run_convergence(cfg, res)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except (SolverError, EosError, MeshError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(3)
    click.echo(f"{'n':>6} {'L2':>13} {'Linf':>13} {'order2':>8} {'orderInf':>9}")
    for n, l2, linf, o2, oi in rows:
        o2s = f"{o2:8.4f}" if o2 == o2 else "       -"
        ois = f"{oi:9.4f}" if oi == oi else "        -"
        click.echo(f"{n:>6} {l2:13.5e} {linf:13.5e} {o2s} {ois}")


@main.command()
def cases():
    """List the built-in test cases."""
    for name, c in sorted(case_library().items()):
        amr = (f"amr({c.amr.base_level},{c.amr.med_level},{c.amr.max_level})"
               if c.amr else "uniform")
        click.echo(f"{name:20s} eos={c.eos} N={c.N} t_end={c.t_end:g} {amr}")


if __name__ == "__main__":
    main()
