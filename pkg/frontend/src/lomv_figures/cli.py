"""render_figures: turn a lomv run directory into a figure."""

import sys

import click

from .render import KINDS, FigureSpec, render
from .schemas import SchemaError


@click.command()
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--kind", type=click.Choice(KINDS), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--title", default="", help="Optional figure title.")
@click.option("--dpi", type=int, default=150, show_default=True)
def main(run_dir, kind, out, title, dpi):
    """Render RUN_DIR (a lomv output directory) as a figure at --out."""
    spec = FigureSpec(run_dir=run_dir, kind=kind, out_path=out, title=title, dpi=dpi)
    try:
        result = render(spec)
    except SchemaError as exc:
        click.echo(f"invalid input: {exc}", err=True)
        sys.exit(2)
    click.echo(f"{result.out_path} checksum={result.checksum}")


if __name__ == "__main__":
    main()
