"""Command-line entry points: run the pipeline, serve a bundle, validate config.

Exit codes: 0 success, 1 fatal pipeline error, 2 config error.
"""

from __future__ import annotations

import logging
import sys

import click

from .bundle import read_bundle
from .config import load_config
from .errors import ConfigInvalidError, ConfigParseError, TraceLensError
from .pipeline import run_pipeline
from .server import serve as serve_bundle

EXIT_PIPELINE_ERROR = 1
EXIT_CONFIG_ERROR = 2


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug-level logging.")
def main(verbose: bool) -> None:
    """Evaluate agent execution traces and explore the results."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _load_config_or_exit(path: str):
    try:
        return load_config(path)
    except (ConfigParseError, ConfigInvalidError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)


@main.command()
@click.option("--config", "-c", "config_path", required=True, type=click.Path(exists=True),
              help="Pipeline YAML config.")
def run(config_path: str) -> None:
    """Run the full evaluation pipeline and write the results bundle."""
    config = _load_config_or_exit(config_path)
    try:
        path = run_pipeline(config)
    except TraceLensError as exc:
        click.echo(f"pipeline error: {exc}", err=True)
        sys.exit(EXIT_PIPELINE_ERROR)
    click.echo(f"bundle written: {path}")


@main.command()
@click.option("--bundle", "-b", "bundle_path", required=True, type=click.Path(exists=True),
              help="Results bundle (ZIP) to serve.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8050, show_default=True, type=int)
@click.option("--static-dir", default=None, type=click.Path(),
              help="Directory of built dashboard assets to host at /.")
def serve(bundle_path: str, host: str, port: int, static_dir: str | None) -> None:
    """Serve a results bundle over the read-only REST API."""
    try:
        bundle = read_bundle(bundle_path)
        serve_bundle(bundle, bind_address=host, port=port, static_dir=static_dir)
    except TraceLensError as exc:
        click.echo(f"serve error: {exc}", err=True)
        sys.exit(EXIT_PIPELINE_ERROR)


@main.command()
@click.option("--config", "-c", "config_path", required=True, type=click.Path(exists=True),
              help="Pipeline YAML config.")
def validate(config_path: str) -> None:
    """Parse and validate a config file without running anything."""
    _load_config_or_exit(config_path)
    click.echo("config OK")


if __name__ == "__main__":
    main()
