import logging
import os

import click

from ..controllers.simulation import generate_example1, generate_example2
from ..models import CorrelationMode, SimDesign
from ..utils.io import dataset_frame, write_frame
from .common import config_option, echo_config, output_dir

logger = logging.getLogger(__name__)


@click.command("simulate")
@config_option
@click.option("--example", type=click.Choice(["1", "2"]), default="1", show_default=True)
@click.option("--n-train", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--n-test", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--d", "d", type=click.IntRange(min=8), default=100, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
@click.pass_context
def command(ctx, example, n_train, n_test, d, seed, out_dir):
    """Write train.csv and test.csv drawn from a three-class simulation design."""
    echo_config(ctx)
    mode = CorrelationMode.INDEPENDENT if example == "1" else CorrelationMode.EXAMPLE2
    design = SimDesign(n_train=n_train, n_test=n_test, d=d, correlation_mode=mode, seed=seed)
    generate = generate_example1 if example == "1" else generate_example2
    train, test = generate(design)

    directory = output_dir(ctx.params, "simulate")
    for name, data in (("train.csv", train), ("test.csv", test)):
        write_frame(os.path.join(directory, name), dataset_frame(data))
    click.echo(f"wrote {directory}/train.csv ({n_train} samples) and test.csv ({n_test} samples)")
