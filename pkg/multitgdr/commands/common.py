import logging
import os
from typing import Any, Dict, List, Optional, Tuple

import click
import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..config import (
    DEFAULT_DELTA_V,
    DEFAULT_JOBS,
    DEFAULT_MAX_STEPS,
    DEFAULT_TAU,
    dump_config,
    get_output_path,
    load_config_file,
)
from ..errors import DimensionMismatchError, IncompatibleModelError, InvalidConfigError
from ..models import ExpressionDataset, ModelCoefficients, ModelFile, TgdrConfig
from ..utils.io import encode_values, load_dataset, read_table, safe_write_text

logger = logging.getLogger(__name__)


def _load_config(ctx: click.Context, param: click.Parameter, value: Optional[str]) -> None:
    """Eager callback: YAML keys become defaults of the command's own options."""
    if value is None:
        return
    options = load_config_file(value)
    known = {p.name for p in ctx.command.params if p.name != "config"}
    unknown = sorted(set(options) - known)
    if unknown:
        raise InvalidConfigError(f"{value} sets unknown options {unknown}")
    for key, option in options.items():
        if isinstance(option, (list, tuple)):
            options[key] = ",".join(str(v) for v in option)
    ctx.default_map = {**(ctx.default_map or {}), **options}


def parse_floats(ctx: click.Context, param: click.Parameter, value) -> Optional[Tuple[float, ...]]:
    if value is None or value == "":
        return None
    if isinstance(value, (list, tuple)):
        items = value
    else:
        items = [v for v in str(value).split(",") if v.strip()]
    try:
        return tuple(float(v) for v in items)
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


def parse_names(ctx: click.Context, param: click.Parameter, value) -> Optional[List[str]]:
    if value is None or value == "":
        return None
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [v.strip() for v in str(value).split(",") if v.strip()]


def config_option(func):
    return click.option(
        "--config",
        type=click.Path(dir_okay=False),
        callback=_load_config,
        is_eager=True,
        expose_value=False,
        help="YAML file whose keys (flag names) become defaults.",
    )(func)


def data_options(func):
    options = [
        click.argument("data", type=click.Path(dir_okay=False)),
        click.option("--label-col", default="label", show_default=True),
        click.option("--study-col", default=None, help="Column holding the study of each sample."),
        click.option(
            "--classes",
            default=None,
            callback=parse_names,
            help="Comma-separated class order; the last one is the reference class.",
        ),
        click.option("--delimiter", type=click.Choice(["comma", "tab"]), default=None),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def model_data_options(func):
    """MODEL and DATA arguments; classes and studies follow the model file."""
    options = [
        click.argument("model", type=click.Path(dir_okay=False)),
        click.argument("data", type=click.Path(dir_okay=False)),
        click.option("--label-col", default="label", show_default=True),
        click.option("--study-col", default=None),
        click.option("--delimiter", type=click.Choice(["comma", "tab"]), default=None),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def solver_options(func):
    options = [
        click.option("--tau", type=float, default=DEFAULT_TAU, show_default=True),
        click.option(
            "--tau-per-class",
            default=None,
            callback=parse_floats,
            help="Comma-separated thresholds, one per non-reference class.",
        ),
        click.option("--steps", type=int, default=DEFAULT_MAX_STEPS, show_default=True),
        click.option("--delta-v", type=float, default=DEFAULT_DELTA_V, show_default=True),
        click.option("--no-standardize", is_flag=True, default=False),
        click.option("--paper-literal-variance", is_flag=True, default=False),
        click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def run_options(func):
    options = [
        click.option("--jobs", type=click.IntRange(min=1), default=DEFAULT_JOBS, show_default=True),
        click.option("--progress", is_flag=True, default=False, help="Show progress bars."),
        click.option("--out-dir", type=click.Path(file_okay=False), default=None),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_config(params: Dict[str, Any], **overrides) -> TgdrConfig:
    values = dict(
        tau=params["tau"],
        tau_per_class=list(params["tau_per_class"]) if params.get("tau_per_class") else None,
        max_steps=params["steps"],
        delta_v=params["delta_v"],
        standardize=not params["no_standardize"],
        paper_literal_variance=params["paper_literal_variance"],
        seed=params["seed"],
    )
    values.update(overrides)
    return TgdrConfig(**values)


def load_training_data(params: Dict[str, Any]) -> ExpressionDataset:
    return load_dataset(
        params["data"],
        label_col=params["label_col"],
        study_col=params["study_col"],
        classes=params["classes"],
        delimiter=params["delimiter"],
    )


def output_dir(params: Dict[str, Any], run: str) -> str:
    """--out-dir if given, else <MULTITGDR_OUTPUT_PATH>/<run>."""
    out_dir = params.get("out_dir")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        return out_dir
    return get_output_path(run=run)


def _plain(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, np.generic):
        return value.item()
    return value


def echo_config(ctx: click.Context, config: Optional[TgdrConfig] = None) -> None:
    """Print every resolved option, and the solver configuration, as YAML."""
    resolved = {"command": ctx.info_name, "options": _plain(dict(ctx.params))}
    if config is not None:
        resolved["solver"] = _plain(config.model_dump())
    click.echo(dump_config(resolved), nl=False)


def coefficient_frame(
    coeffs: ModelCoefficients, data: ExpressionDataset, mask: np.ndarray
) -> pd.DataFrame:
    """One row per (study, feature in `mask`) with a coefficient column per
    non-reference class, on the standardized scale the model was fitted on."""
    studies = data.study_names if coeffs.n_studies > 1 else ["pooled"]
    records = []
    for s, study in enumerate(studies):
        for j in np.flatnonzero(mask):
            record = {"study": study, "feature": data.feature_names[j]}
            for c, name in enumerate(data.class_names[:-1]):
                record[f"beta_{name}"] = coeffs.betas[s, c, j]
            records.append(record)
    columns = ["study", "feature"] + [f"beta_{n}" for n in data.class_names[:-1]]
    return pd.DataFrame.from_records(records, columns=columns)


def write_json(path: str, report: BaseModel) -> None:
    safe_write_text(path, report.model_dump_json(indent=2) + "\n")


def model_inputs(
    model: ModelFile, params: Dict[str, Any], require_label: bool = True
) -> Tuple[np.ndarray, Optional[np.ndarray], Optional[np.ndarray]]:
    """(features in the model's column order, labels coded by the model's classes,
    study ids coded by the model's studies) read from params["data"]."""
    table = read_table(
        params["data"],
        label_col=params["label_col"],
        study_col=params["study_col"],
        delimiter=params["delimiter"],
        require_label=require_label,
    )
    if len(table.feature_names) != len(model.feature_names):
        raise DimensionMismatchError(
            f"model has {len(model.feature_names)} features, "
            f"{params['data']} has {len(table.feature_names)}"
        )
    features = table.features
    if table.feature_names != model.feature_names:
        if set(table.feature_names) != set(model.feature_names):
            missing = sorted(set(model.feature_names) - set(table.feature_names))[:5]
            raise IncompatibleModelError(f"{params['data']} lacks model features such as {missing}")
        order = [table.feature_names.index(name) for name in model.feature_names]
        features = features[:, order]

    labels = None
    if table.labels is not None:
        labels = encode_values(table.labels, model.classes, "label")
    study_ids = None
    if table.studies is not None and len(model.studies) > 1:
        study_ids = encode_values(table.studies, model.studies, "study")
    return features, labels, study_ids


def require_study_column(model: ModelFile, coeffs: ModelCoefficients, params: Dict[str, Any]) -> None:
    """Study-specific coefficients need --study-col; checked before the table is
    read so the study column is never parsed as a feature."""
    if coeffs.n_studies > 1 and not params.get("study_col"):
        raise IncompatibleModelError(
            f"{model.mode} model has study-specific coefficients; pass --study-col"
        )
