import logging
import os

import click
import pandas as pd

from ..config import (
    DEFAULT_BOOTSTRAP,
    DEFAULT_FOLDS,
    DEFAULT_TAU_GRID,
    TABLE1_CRITERION,
    TABLE1_CUTOFFS,
    TABLE1_CV_STRIDE,
    TABLE1_DELTA_V,
    TABLE1_MAX_STEPS,
)
from ..controllers.simulation import format_summary, replicate_table1, summary_frame
from ..models import CorrelationMode, CvCriterion, SimDesign, TgdrConfig
from ..utils.io import safe_write_text, write_frame
from .common import config_option, echo_config, output_dir, parse_floats

logger = logging.getLogger(__name__)


@click.command("replicate-table1")
@config_option
@click.option("--example", type=click.Choice(["1", "2"]), default="1", show_default=True)
@click.option("--replicates", type=click.IntRange(min=1), default=50, show_default=True)
@click.option("--n-train", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--n-test", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--d", "d", type=click.IntRange(min=8), default=100, show_default=True)
@click.option("--steps", type=click.IntRange(min=1), default=TABLE1_MAX_STEPS, show_default=True)
@click.option("--delta-v", type=float, default=TABLE1_DELTA_V, show_default=True)
@click.option(
    "--tau-grid",
    default=",".join(str(t) for t in DEFAULT_TAU_GRID),
    callback=parse_floats,
    show_default=True,
)
@click.option("--folds", type=click.IntRange(min=2), default=DEFAULT_FOLDS, show_default=True)
@click.option("--stride", type=click.IntRange(min=1), default=TABLE1_CV_STRIDE, show_default=True)
@click.option(
    "--criterion",
    type=click.Choice([c.value for c in CvCriterion]),
    default=TABLE1_CRITERION,
    show_default=True,
    help="CV metric minimised first when tuning (tau, k).",
)
@click.option("--bootstrap", type=click.IntRange(min=1), default=DEFAULT_BOOTSTRAP, show_default=True)
@click.option(
    "--cutoffs",
    default=",".join(str(c) for c in TABLE1_CUTOFFS),
    callback=parse_floats,
    show_default=True,
)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--progress", is_flag=True, default=False)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
@click.pass_context
def command(ctx, **params):
    """Simulate, tune, fit and bag many data sets and summarise selection and error."""
    config = TgdrConfig(max_steps=params["steps"], delta_v=params["delta_v"], seed=params["seed"])
    echo_config(ctx, config)
    design = SimDesign(
        n_train=params["n_train"],
        n_test=params["n_test"],
        d=params["d"],
        correlation_mode=(
            CorrelationMode.INDEPENDENT if params["example"] == "1" else CorrelationMode.EXAMPLE2
        ),
        seed=params["seed"],
    )
    summary = replicate_table1(
        params["replicates"],
        design,
        config,
        cutoffs=params["cutoffs"],
        tau_grid=params["tau_grid"],
        folds=params["folds"],
        n_bootstrap=params["bootstrap"],
        stride=params["stride"],
        n_jobs=params["jobs"],
        progress=params["progress"],
        criterion=CvCriterion(params["criterion"]),
    )

    directory = output_dir(params, "replicate-table1")
    text = format_summary(summary)
    write_frame(os.path.join(directory, "summary.csv"), summary_frame(summary))
    safe_write_text(os.path.join(directory, "summary.txt"), text + "\n")
    write_frame(
        os.path.join(directory, "replicates.csv"),
        pd.json_normalize([r.model_dump() for r in summary.replicates]),
    )
    click.echo(text)
