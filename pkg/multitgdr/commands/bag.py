import logging
import os

import click
import pandas as pd

from ..config import DEFAULT_BOOTSTRAP, DEFAULT_CUTOFF_GRID
from ..controllers.bagging import bagging_run, select_cutoff
from ..models import Fitter
from ..utils.io import write_frame
from ..utils.model_store import save_model, to_model_file
from .common import (
    build_config,
    coefficient_frame,
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


@click.command("bag")
@config_option
@data_options
@solver_options
@click.option("--bootstrap", type=click.IntRange(min=1), default=DEFAULT_BOOTSTRAP, show_default=True)
@click.option(
    "--cutoffs",
    default=",".join(str(c) for c in DEFAULT_CUTOFF_GRID),
    callback=parse_floats,
    show_default=True,
)
@click.option("--meta", is_flag=True, default=False, help="Bag the meta fitter (needs --study-col).")
@run_options
@click.pass_context
def command(ctx, **params):
    """Bagging frequencies, the BF cutoff by training error, and the refit model."""
    if params["meta"] and params["study_col"] is None:
        raise click.UsageError("--meta needs --study-col")
    config = build_config(params)
    echo_config(ctx, config)
    data = load_training_data(params)

    report = bagging_run(
        data,
        config,
        n_bootstrap=params["bootstrap"],
        fitter=Fitter.META if params["meta"] else Fitter.TGDR,
        n_jobs=params["jobs"],
        progress=params["progress"],
    )
    cutoff, model, table = select_cutoff(report, data, params["cutoffs"])
    report = report.model_copy(
        update={"cutoff": cutoff, "final_model": model, "cutoff_table": table}
    )

    directory = output_dir(params, "bag")
    save_model(
        os.path.join(directory, "model.json"),
        to_model_file(model, data, config, bagging=report),
    )
    write_frame(
        os.path.join(directory, "frequencies.csv"),
        pd.DataFrame(
            {
                "feature": data.feature_names,
                "selections": report.selection_counts,
                "frequency": report.frequencies,
            }
        ),
    )
    write_frame(
        os.path.join(directory, "cutoffs.csv"),
        pd.DataFrame.from_records([row.model_dump() for row in table]),
    )

    keep = report.frequencies > cutoff
    signature = coefficient_frame(model, data, keep)
    lookup = dict(zip(data.feature_names, report.frequencies))
    signature.insert(2, "frequency", [lookup[f] for f in signature["feature"]])
    write_frame(os.path.join(directory, "signature.csv"), signature)

    click.echo(
        f"{report.n_members} of {report.n_bootstrap} bootstrap fits succeeded; "
        f"cutoff BF>{cutoff:g} keeps {int(keep.sum())} features"
    )
