import logging
import os

import click

from ..controllers.meta import fit_meta_path
from ..controllers.pairwise import fit_pairwise, pair_dataset, predict_pairwise
from ..controllers.selection import evaluate, evaluate_model, misclassification_error
from ..controllers.solver import fit_path, predict
from ..models import ExpressionDataset, FitReport, PairReport, PairwiseReport, TgdrConfig
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
    solver_options,
    write_json,
)

logger = logging.getLogger(__name__)


def pairwise_report(
    data: ExpressionDataset, config: TgdrConfig, multiclass_active: int, multiclass_error: float
) -> PairwiseReport:
    model = fit_pairwise(data, config)
    pairs = []
    for (a, b), member in zip(model.pairs, model.members):
        subset = pair_dataset(data, a, b)
        labels, _ = predict(member, subset.features)
        pairs.append(
            PairReport(
                classes=(data.class_names[a - 1], data.class_names[b - 1]),
                n_active=int(member.active_mask(config.selection_tolerance).sum()),
                training_error_pct=misclassification_error(labels, subset.labels),
            )
        )
    _, probabilities = predict_pairwise(model, data.features)
    overall = evaluate(probabilities, data.labels)
    return PairwiseReport(
        pairs=pairs,
        n_active=int(model.active_mask().sum()),
        training_error_pct=overall.error_pct,
        training_gbs=overall.gbs,
        multiclass_n_active=multiclass_active,
        multiclass_error_pct=multiclass_error,
    )


@click.command("fit")
@config_option
@data_options
@solver_options
@click.option("--meta", is_flag=True, default=False, help="Fit study-specific coefficients on a shared active set.")
@click.option("--pairwise", is_flag=True, default=False, help="Also fit the one-versus-another baseline.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
@click.pass_context
def command(ctx, **params):
    """Fit a TGDR path to the final step and write the model and a fit report."""
    if params["meta"] and params["study_col"] is None:
        raise click.UsageError("--meta needs --study-col")
    config = build_config(params)
    echo_config(ctx, config)
    data = load_training_data(params)

    path = (fit_meta_path if params["meta"] else fit_path)(data, config)
    final = path.final
    evaluation = evaluate_model(final.coefficients, data)
    model = to_model_file(final.coefficients, data, config)

    report = FitReport(
        mode=model.mode,
        steps=final.step,
        terminal_reason=path.terminal_reason.value,
        log_likelihood=final.log_likelihood,
        training_error_pct=evaluation.error_pct,
        training_gbs=evaluation.gbs,
        n_active=int(final.active.sum()),
        active_features=[n for n, a in zip(data.feature_names, final.active) if a],
    )

    directory = output_dir(params, "fit")
    save_model(os.path.join(directory, "model.json"), model)
    write_json(os.path.join(directory, "fit_report.json"), report)
    write_frame(
        os.path.join(directory, "coefficients.csv"),
        coefficient_frame(final.coefficients, data, final.active),
    )
    click.echo(
        f"{model.mode}: {report.n_active} active features after {report.steps} steps, "
        f"training error {report.training_error_pct:.2f}%, GBS {report.training_gbs:.6f}"
    )

    if params["pairwise"]:
        comparison = pairwise_report(data, config, report.n_active, report.training_error_pct)
        write_json(os.path.join(directory, "pairwise_report.json"), comparison)
        click.echo(
            f"pairwise: {comparison.n_active} active features, "
            f"training error {comparison.training_error_pct:.2f}%"
        )
