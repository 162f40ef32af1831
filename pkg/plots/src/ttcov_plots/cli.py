"""Standalone figure-rendering commands over benchmark CSV files."""

from __future__ import annotations

import sys

import click

from .core import KINDS, PlotSpec, SchemaError, render


@click.command()
@click.argument("kind", type=click.Choice(KINDS))
@click.option("--csv", "csv_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="input CSV (per-trial results, or spectra for 'spectrum')")
@click.option("--out", "out_path", required=True,
              type=click.Path(dir_okay=False), help="output image path")
@click.option("--method", "methods", multiple=True,
              help="restrict to these methods/series (repeatable)")
@click.option("--log-x", is_flag=True, default=False)
@click.option("--log-y", is_flag=True, default=False)
@click.option("--title", default=None)
@click.option("--dpi", type=int, default=120, show_default=True)
def main(kind, csv_path, out_path, methods, log_x, log_y, title, dpi):
    """Render KIND (error_curve | spectrum | sintheta | noise_sweep)."""
    spec = PlotSpec(
        csv_path=csv_path, kind=kind, out_path=out_path,
        methods=tuple(methods), log_x=log_x, log_y=log_y, title=title, dpi=dpi,
    )
    try:
        render(spec)
    except (SchemaError, ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    sys.exit(main())
