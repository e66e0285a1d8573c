"""Command-line figure generation from solver output files."""

from __future__ import annotations

import sys

import click

from .fields import FIELDS
from .reader import read_snapshot
from . import render


@click.group()
def main():
    """Render figures from lwsrhd nodal snapshots and CSV tables."""


@main.command()
@click.argument("snapshot", type=click.Path(exists=True))
@click.option("--field", default="rho", help=f"one of {', '.join(FIELDS)}")
@click.option("-o", "--out", required=True, type=click.Path())
@click.option("--contours", default=0, type=int, help="overlay K contours")
@click.option("--cmap", default="viridis")
def pseudocolor(snapshot, field, out, contours, cmap):
    """Pseudocolor map of a field."""
    snap = read_snapshot(snapshot)
    try:
        vmin, vmax = render.pseudocolor(snap, field, out, contours=contours,
                                        cmap=cmap)
    except KeyError as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)
    click.echo(f"{out}: {field} in [{vmin:.6g}, {vmax:.6g}], "
               f"{snap.n_elements} elements")


@main.command()
@click.argument("snapshot", type=click.Path(exists=True))
@click.option("-o", "--out", required=True, type=click.Path())
def wireframe(snapshot, out):
    """Element outlines colored by refinement level."""
    snap = read_snapshot(snapshot)
    hist = render.mesh_wireframe(snap, out)
    click.echo(f"{out}: levels {hist}")


@main.command()
@click.argument("snapshot", type=click.Path(exists=True))
@click.option("--field", default="rho")
@click.option("--line", default=None,
              help="x0,y0,x1,y1 (default: domain diagonal)")
@click.option("--overlay", multiple=True, type=click.Path(exists=True),
              help="extra snapshots drawn on the same axes")
@click.option("-o", "--out", required=True, type=click.Path())
def cut(snapshot, field, line, overlay, out):
    """Nodal values along a cut line, projected onto the x axis."""
    snap = read_snapshot(snapshot)
    if line is None:
        x0, x1, y0, y1 = snap.domain
        spec = (x0, y0, x1, y1)
    else:
        try:
            spec = tuple(float(v) for v in line.split(","))
            assert len(spec) == 4
        except (ValueError, AssertionError):
            click.echo(f"bad --line {line!r}", err=True)
            sys.exit(2)
    overlays = [(read_snapshot(p), p) for p in overlay]
    try:
        n = render.cut_plot(snap, field, spec, out, overlays=overlays)
    except KeyError as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)
    click.echo(f"{out}: {n} samples")


@main.command()
@click.argument("csvs", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("-o", "--out", required=True, type=click.Path())
def eoc(csvs, out):
    """Error-versus-walltime curves from convergence CSV files."""
    try:
        render.eoc_and_timing_plots(list(csvs), out)
    except ValueError as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)
    click.echo(f"{out}: {len(csvs)} curves")


if __name__ == "__main__":
    main()
