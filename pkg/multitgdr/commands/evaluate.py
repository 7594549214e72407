import logging
import os

import click

from ..controllers.likelihood import probability_matrix
from ..controllers.selection import evaluate
from ..errors import DimensionMismatchError
from ..models import ModelFile
from ..utils.io import encode_values, read_probability_frame, read_table
from ..utils.model_store import load_model, predictive_coefficients
from .common import (
    config_option,
    echo_config,
    model_inputs,
    output_dir,
    require_study_column,
    write_json,
)

logger = logging.getLogger(__name__)


@click.command("evaluate")
@config_option
@click.argument("data", type=click.Path(dir_okay=False))
@click.option("--model", "model_path", type=click.Path(dir_okay=False), default=None)
@click.option(
    "--predictions",
    type=click.Path(dir_okay=False),
    default=None,
    help="predictions.csv written by `predict`, scored instead of a model.",
)
@click.option("--label-col", default="label", show_default=True)
@click.option("--study-col", default=None)
@click.option("--delimiter", type=click.Choice(["comma", "tab"]), default=None)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
@click.pass_context
def command(ctx, **params):
    """Misclassification error, GBS and confusion matrix on labelled data."""
    if (params["model_path"] is None) == (params["predictions"] is None):
        raise click.UsageError("pass exactly one of --model and --predictions")
    echo_config(ctx)

    if params["model_path"] is not None:
        model: ModelFile = load_model(params["model_path"])
        coeffs = predictive_coefficients(model)
        require_study_column(model, coeffs, params)
        features, labels, study_ids = model_inputs(model, params)
        probabilities = probability_matrix(coeffs, features, study_ids)
        class_names = model.classes
    else:
        class_names, probabilities = read_probability_frame(params["predictions"])
        table = read_table(
            params["data"], params["label_col"], params["study_col"], params["delimiter"]
        )
        labels = encode_values(table.labels, class_names, "label")
        if labels.shape[0] != probabilities.shape[0]:
            raise DimensionMismatchError(
                f"{probabilities.shape[0]} predictions for {labels.shape[0]} samples"
            )

    report = evaluate(probabilities, labels)
    directory = output_dir(params, "evaluate")
    write_json(os.path.join(directory, "evaluation.json"), report)
    click.echo(f"error {report.error_pct:.2f}%, GBS {report.gbs:.6f}, n={report.n}")
    click.echo("confusion (rows true, columns predicted): " + ", ".join(class_names))
    for name, row in zip(class_names, report.confusion):
        click.echo(f"  {name}: {' '.join(str(int(v)) for v in row)}")
