import json
import logging
import os
from typing import Optional

import numpy as np
from pydantic import ValidationError

from ..errors import IncompatibleModelError, InputOutputError, ParseError
from ..models import (
    BaggingReport,
    ExpressionDataset,
    ModelCoefficients,
    ModelFile,
    PooledModel,
    Standardization,
    TgdrConfig,
)
from ..models.model_file import BaggingRecord, PooledRecord, StandardizationRecord
from .io import safe_write_text
from .version_manager import check_schema_version

logger = logging.getLogger(__name__)


def fit_mode(coeffs: ModelCoefficients) -> str:
    if coeffs.n_studies > 1:
        return "meta"
    return "tgdr" if coeffs.n_classes == 2 else "multi"


def to_model_file(
    coeffs: ModelCoefficients,
    data: ExpressionDataset,
    config: TgdrConfig,
    mode: Optional[str] = None,
    pooled: Optional[PooledModel] = None,
    bagging: Optional[BaggingReport] = None,
) -> ModelFile:
    """Document for `coeffs` fitted on `data`; names are taken from the data."""
    if coeffs.n_features != data.n_features:
        raise IncompatibleModelError(
            f"model has {coeffs.n_features} features, data has {data.n_features}"
        )
    standardization = None
    if coeffs.standardization is not None:
        standardization = StandardizationRecord(
            mean=coeffs.standardization.mean.tolist(),
            scale=coeffs.standardization.scale.tolist(),
        )
    studies = data.study_names if coeffs.n_studies > 1 else ["pooled"]

    pooled_record = None
    if pooled is not None:
        mode = "pooled"
        pooled_record = PooledRecord(
            mu_intercepts=pooled.mu_intercepts.tolist(),
            mu=pooled.mu.tolist(),
            sigma2=pooled.sigma2.tolist(),
            underdetermined=pooled.underdetermined,
            uniform_weights=pooled.uniform_weights,
            paper_literal_variance=pooled.paper_literal_variance,
        )
    bagging_record = None
    if bagging is not None:
        mode = "bagged"
        bagging_record = BaggingRecord(
            n_bootstrap=bagging.n_bootstrap,
            n_failed=bagging.n_failed,
            frequencies=bagging.frequencies.tolist(),
            cutoff=bagging.cutoff,
        )

    return ModelFile(
        mode=mode or fit_mode(coeffs),
        classes=list(data.class_names),
        reference_class=data.class_names[-1],
        studies=list(studies),
        feature_names=list(data.feature_names),
        standardization=standardization,
        intercepts=coeffs.intercepts.tolist(),
        betas=coeffs.betas.tolist(),
        pooled=pooled_record,
        bagging=bagging_record,
        config=config,
        seed=config.seed,
    )


def coefficients_of(model: ModelFile) -> ModelCoefficients:
    """Stored (per-study, for meta and pooled files) coefficients."""
    standardization = None
    if model.standardization is not None:
        standardization = Standardization(
            mean=np.asarray(model.standardization.mean, dtype=np.float64),
            scale=np.asarray(model.standardization.scale, dtype=np.float64),
        )
    return ModelCoefficients(
        intercepts=np.asarray(model.intercepts, dtype=np.float64),
        betas=np.asarray(model.betas, dtype=np.float64).reshape(
            len(model.intercepts), len(model.classes) - 1, len(model.feature_names)
        ),
        standardization=standardization,
    )


def pooled_of(model: ModelFile) -> PooledModel:
    if model.mode != "pooled" or model.pooled is None:
        raise IncompatibleModelError(f"a pooled model is required, got mode {model.mode}")
    record = model.pooled
    return PooledModel(
        mu_intercepts=np.asarray(record.mu_intercepts, dtype=np.float64),
        mu=np.asarray(record.mu, dtype=np.float64).reshape(
            len(model.classes) - 1, len(model.feature_names)
        ),
        sigma2=np.asarray(record.sigma2, dtype=np.float64),
        source=coefficients_of(model),
        underdetermined=record.underdetermined,
        uniform_weights=record.uniform_weights,
        paper_literal_variance=record.paper_literal_variance,
    )


def predictive_coefficients(model: ModelFile) -> ModelCoefficients:
    """Coefficients `predict` applies: the overall mu for pooled files."""
    if model.mode == "pooled":
        return pooled_of(model).as_coefficients()
    return coefficients_of(model)


def save_model(path: str, model: ModelFile) -> None:
    safe_write_text(path, model.model_dump_json(indent=2) + "\n")
    logger.info(f"Wrote {model.mode} model to {path}")


def load_model(path: str) -> ModelFile:
    if not os.path.exists(path):
        raise InputOutputError(f"model file {path} does not exist")
    with open(path, "r") as f:
        text = f.read()
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"model file {path} is not valid JSON: {e}")
    if not isinstance(document, dict):
        raise ParseError(f"model file {path} does not hold a model document")
    check_schema_version(document, path)
    try:
        return ModelFile.model_validate(document)
    except ValidationError as e:
        raise ParseError(f"model file {path} is malformed: {e.error_count()} invalid field(s)")
