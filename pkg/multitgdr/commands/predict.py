import logging
import os

import click

from ..controllers.solver import predict
from ..utils.io import probability_frame, write_frame
from ..utils.model_store import load_model, predictive_coefficients
from .common import (
    config_option,
    echo_config,
    model_data_options,
    model_inputs,
    output_dir,
    require_study_column,
)

logger = logging.getLogger(__name__)


@click.command("predict")
@config_option
@model_data_options
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
@click.pass_context
def command(ctx, **params):
    """Per-sample class probabilities and labels; the label column is optional."""
    echo_config(ctx)
    model = load_model(params["model"])
    coeffs = predictive_coefficients(model)
    require_study_column(model, coeffs, params)
    features, _, study_ids = model_inputs(model, params, require_label=False)

    labels, probabilities = predict(coeffs, features, study_ids)
    directory = output_dir(params, "predict")
    path = os.path.join(directory, "predictions.csv")
    write_frame(path, probability_frame(labels, probabilities, model.classes))
    click.echo(f"wrote {labels.shape[0]} predictions to {path}")
