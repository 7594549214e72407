import logging
import os

import click
import pandas as pd

from ..config import DEFAULT_CV_STRIDE, DEFAULT_FOLDS, DEFAULT_TAU_GRID, dump_config
from ..controllers.selection import k_fold_cv
from ..models import CvCriterion, Fitter
from ..utils.io import safe_write_text, write_frame
from .common import (
    build_config,
    config_option,
    data_options,
    echo_config,
    load_training_data,
    output_dir,
    parse_floats,
    run_options,
    solver_options,
)

logger = logging.getLogger(__name__)


@click.command("cv")
@config_option
@data_options
@solver_options
@click.option(
    "--tau-grid",
    default=",".join(str(t) for t in DEFAULT_TAU_GRID),
    callback=parse_floats,
    show_default=True,
)
@click.option("--folds", type=click.IntRange(min=2), default=DEFAULT_FOLDS, show_default=True)
@click.option("--stride", type=click.IntRange(min=1), default=DEFAULT_CV_STRIDE, show_default=True)
@click.option(
    "--criterion",
    type=click.Choice([c.value for c in CvCriterion]),
    default=CvCriterion.ERROR.value,
    show_default=True,
    help="Metric minimised first; the other breaks ties.",
)
@click.option("--no-stratify", is_flag=True, default=False)
@click.option("--meta", is_flag=True, default=False, help="Tune the meta fitter (needs --study-col).")
@run_options
@click.pass_context
def command(ctx, **params):
    """Tune (tau, k) by k-fold cross-validation; --steps is the largest k tried."""
    if params["meta"] and params["study_col"] is None:
        raise click.UsageError("--meta needs --study-col")
    config = build_config(params)
    echo_config(ctx, config)
    data = load_training_data(params)

    result = k_fold_cv(
        data,
        tau_grid=params["tau_grid"],
        max_steps=config.max_steps,
        folds=params["folds"],
        seed=config.seed,
        fitter=Fitter.META if params["meta"] else Fitter.TGDR,
        config=config,
        stride=params["stride"],
        stratified=not params["no_stratify"],
        n_jobs=params["jobs"],
        progress=params["progress"],
        criterion=CvCriterion(params["criterion"]),
    )

    directory = output_dir(params, "cv")
    grid = pd.DataFrame.from_records([p.model_dump() for p in result.grid])
    write_frame(os.path.join(directory, "cv_grid.csv"), grid)
    write_frame(
        os.path.join(directory, "cv_folds.csv"),
        pd.DataFrame(
            {"sample": range(1, data.n_samples + 1), "fold": result.fold_assignment + 1}
        ),
    )

    # replayable with `fit --config`
    chosen = {
        "tau": result.best_tau,
        "steps": result.best_k,
        "delta_v": config.delta_v,
        "seed": config.seed,
        "no_standardize": not config.standardize,
        "paper_literal_variance": config.paper_literal_variance,
    }
    if config.tau_per_class is not None:
        chosen["tau_per_class"] = list(config.tau_per_class)
    safe_write_text(os.path.join(directory, "cv_config.yaml"), dump_config(chosen))

    click.echo(
        f"best tau={result.best_tau} k={result.best_k}: CV error {result.best_error_pct:.2f}% "
        f"(mean over folds {result.mean_fold_error_pct:.2f}%), GBS {result.best_gbs:.6f}"
    )
