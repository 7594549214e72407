import logging
import os

import click

from ..controllers.meta import pool_coefficients
from ..errors import IncompatibleModelError
from ..models import ExpressionDataset
from ..utils.model_store import coefficients_of, load_model, save_model, to_model_file
from .common import config_option, echo_config, model_data_options, model_inputs, output_dir

logger = logging.getLogger(__name__)


@click.command("pool")
@config_option
@model_data_options
@click.option("--paper-literal-variance", is_flag=True, default=False)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
@click.pass_context
def command(ctx, **params):
    """Pool a meta model over its training data into overall coefficients mu."""
    echo_config(ctx)
    model = load_model(params["model"])
    if model.mode != "meta":
        raise IncompatibleModelError(f"pool needs a meta model, {params['model']} is {model.mode}")
    if params["study_col"] is None:
        raise IncompatibleModelError("pool needs --study-col to split the data into studies")

    features, labels, study_ids = model_inputs(model, params)
    data = ExpressionDataset(
        features=features,
        labels=labels,
        study_ids=study_ids,
        feature_names=model.feature_names,
        class_names=model.classes,
        study_names=model.studies,
    )
    source = coefficients_of(model)
    paper_literal = params["paper_literal_variance"] or model.config.paper_literal_variance
    pooled = pool_coefficients(source, data, paper_literal=paper_literal)

    config = model.config.model_copy(update={"paper_literal_variance": paper_literal})
    directory = output_dir(params, "pool")
    save_model(
        os.path.join(directory, "model.json"),
        to_model_file(source, data, config, pooled=pooled),
    )
    for c, name in enumerate(model.classes[:-1]):
        variances = ", ".join(
            f"{study}={pooled.sigma2[c, m]:.6g}" for m, study in enumerate(model.studies)
        )
        click.echo(f"sigma2 ({name} vs {model.reference_class}): {variances}")
    if pooled.underdetermined:
        click.echo("warning: pooling was underdetermined; minimum-norm mu reported")
