"""qamsy CLI entrypoint and commands."""

import logging
import sys

import click

from . import __version__, services
from .errors import QamError, ValidationFailed
from .models.states import DEFAULT_TOLERANCE

LOG_LEVELS = [logging.WARNING, logging.INFO, logging.DEBUG]


def _fail(error: QamError) -> None:
    click.echo(f"Error: {error}", err=True)
    sys.exit(error.exit_code)


@click.group()
@click.option("-v", "--verbose", count=True, help="Log more; repeat for debug output.")
def qamsy(verbose):
    """Quantum associative memories: build, validate and simulate."""

    sys.tracebacklimit = 0  # Disable error tracebacks
    logging.basicConfig(
        level=LOG_LEVELS[min(verbose, len(LOG_LEVELS) - 1)],
        format="%(levelname)s %(name)s: %(message)s",
    )


@click.command()
@click.argument("config", metavar="CONFIG")
@click.option(
    "-o",
    "--output-dir",
    envvar="QAMSY_OUTPUT_DIR",
    default="results",
    show_default=True,
    type=click.Path(file_okay=False),
    help="Directory for result files.",
)
@click.option("--seed-override", type=click.IntRange(min=0), help="Replace the config's seed.")
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True, help="Ensemble workers.")
@click.option(
    "--tolerance", type=float, default=DEFAULT_TOLERANCE, show_default=True, help="Validity tolerance."
)
def run(config, output_dir, seed_override, threads, tolerance):
    """Run the experiment described by CONFIG.

    CONFIG is a config file or the name of a shipped preset. Exits with 2 when a
    validation fails and with 3 on configuration errors.
    """

    try:
        experiment = services.presets.load_config(config)
        if seed_override is not None:
            experiment = experiment.with_seed(seed_override)

        bundle = services.experiments.run_experiment(experiment, threads=threads, tolerance=tolerance)

        for path in bundle.write(output_dir):
            click.echo(f"Wrote {path}")

        if not bundle.passed:
            raise ValidationFailed(f"Experiment {experiment.experiment!r} did not pass its checks")
    except QamError as error:
        _fail(error)


@click.command("list-presets")
def list_presets():
    """List the shipped experiment presets."""

    presets = services.presets.list_presets()
    width = max(len(preset.name) for preset in presets)

    for preset in presets:
        click.echo(f"{preset.name.ljust(width)}  {preset.description}")


@click.command("show-preset")
@click.argument("name")
def show_preset(name):
    """Print the config of the preset NAME."""

    try:
        preset = services.presets.find_preset(name)
    except QamError as error:
        _fail(error)

    click.echo(preset.path.read_text(), nl=False)


@click.command()
def version():
    """Print this project's version and exit."""
    click.echo(__version__)


# Add all of the subcommands to the main group
qamsy.add_command(run)
qamsy.add_command(list_presets)
qamsy.add_command(show_preset)
qamsy.add_command(version)
