import logging
from typing import Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.special import expit

from ..config import DEGENERATE_PROBABILITY, RIDGE
from ..errors import (
    DegenerateStudyError,
    DimensionMismatchError,
    MissingClassError,
)
from ..models import (
    ExpressionDataset,
    ModelCoefficients,
    PooledModel,
    RegularizationPath,
    TgdrConfig,
)
from .likelihood import linear_predictors, prepare_features
from .solver import predict, run_path, standardize_training

logger = logging.getLogger(__name__)


def meta_gradient(per_study_gradients: Sequence[np.ndarray]) -> np.ndarray:
    """Elementwise sum of per-study (K-1) x D gradient blocks."""
    blocks = [np.asarray(g, dtype=np.float64) for g in per_study_gradients]
    if not blocks:
        raise DimensionMismatchError("no study gradients to combine")
    shape = blocks[0].shape
    for m, block in enumerate(blocks):
        if block.shape != shape:
            raise DimensionMismatchError(
                f"study {m + 1} gradient has shape {block.shape}, expected {shape}"
            )
    return np.sum(np.stack(blocks), axis=0)


def check_study_coverage(data: ExpressionDataset) -> None:
    """Every study must contain every class."""
    for m in range(1, data.study_count + 1):
        present = np.unique(data.labels[data.study_rows(m)])
        missing = sorted(set(range(1, data.class_count + 1)) - set(present.tolist()))
        if missing:
            names = [data.class_names[k - 1] for k in missing]
            raise MissingClassError(
                f"study {data.study_names[m - 1]} has no samples of class(es) {names}"
            )


def fit_meta_path(data: ExpressionDataset, config: TgdrConfig) -> RegularizationPath:
    """Meta-TGDR / Meta-multi-TGDR: shared active set, study-specific coefficients."""
    check_study_coverage(data)
    features, standardization = standardize_training(data, config)
    indicators = data.indicators()

    blocks = []
    for m in range(1, data.study_count + 1):
        rows = data.study_rows(m)
        blocks.append((features[rows], indicators[rows]))

    logger.info(
        f"Fitting meta path: M={data.study_count}, n={data.n_samples}, "
        f"D={data.n_features}, K={data.class_count}, tau={config.tau}"
    )
    path = run_path(blocks, config, standardization, data.class_count)
    logger.info(
        f"Meta path done at step {path.final.step} ({path.terminal_reason.value}), "
        f"{int(path.final.active.sum())} features active"
    )
    return path


def delta_method_variance(
    residual_variance: float, mean_probability: float, paper_literal: bool = False
) -> float:
    """Logit-scale study variance from the natural-scale residual variance S.

    The default divides by (p(1-p))^2; `paper_literal` divides by p(1-p)^2.
    """
    p = mean_probability
    if p <= DEGENERATE_PROBABILITY or p >= 1.0 - DEGENERATE_PROBABILITY:
        raise DegenerateStudyError(
            f"mean fitted probability {p} is degenerate; study variance is undefined"
        )
    if paper_literal:
        return residual_variance / (p * (1.0 - p) ** 2)
    return residual_variance / (p * (1.0 - p)) ** 2


def _contrast_rows(labels: np.ndarray, contrast: int, n_classes: int) -> np.ndarray:
    """Samples of class `contrast` (1-based) or the reference class."""
    if n_classes == 2:
        return np.arange(labels.shape[0])
    return np.flatnonzero((labels == contrast) | (labels == n_classes))


def estimate_study_variance(
    study_coeffs: ModelCoefficients,
    study_data: ExpressionDataset,
    contrast: int = 1,
    paper_literal: bool = False,
) -> float:
    """sigma_i^2 of one study for one class contrast, treated one-vs-reference."""
    if study_coeffs.n_studies != 1:
        raise DimensionMismatchError("expected the coefficients of a single study")
    rows = _contrast_rows(study_data.labels, contrast, study_data.class_count)
    if rows.size == 0:
        raise DegenerateStudyError(f"no samples for contrast {contrast}")

    features = prepare_features(study_coeffs, study_data.features[rows])
    z = linear_predictors(
        study_coeffs.intercepts[0], study_coeffs.betas[0], features
    )[:, contrast - 1]
    fitted = expit(z)
    outcome = (study_data.labels[rows] == contrast).astype(np.float64)

    residual_variance = float(np.mean((outcome - fitted) ** 2))
    return delta_method_variance(residual_variance, float(np.mean(fitted)), paper_literal)


def _solve_weighted(
    design: np.ndarray, target: np.ndarray, weights: np.ndarray
) -> Tuple[np.ndarray, bool]:
    """Weighted least squares; returns (solution, underdetermined)."""
    root = np.sqrt(weights)
    a = design * root[:, None]
    b = target * root
    if design.shape[0] <= design.shape[1]:
        solution, *_ = linalg.lstsq(a, b)
        return solution, True

    normal = a.T @ a
    rhs = a.T @ b
    try:
        factor = linalg.cho_factor(normal)
        return linalg.cho_solve(factor, rhs), False
    except linalg.LinAlgError:
        logger.warning("Normal equations are singular; adding a ridge of 1e-10")
    try:
        factor = linalg.cho_factor(normal + RIDGE * np.eye(normal.shape[0]))
        return linalg.cho_solve(factor, rhs), False
    except linalg.LinAlgError:
        logger.warning("Ridge did not help; using the minimum-norm solution")
        solution, *_ = linalg.lstsq(a, b)
        return solution, True


def study_weights(sigma2: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Weights 1/sigma^2, normalised to a maximum of 1.

    Studies with sigma^2 = 0 fit their logits exactly; they take uniform weight
    and the others none. When every sigma^2 is 0 this is plain uniform weighting.
    """
    zero = sigma2 <= 0
    if np.any(zero):
        logger.warning(
            f"{int(zero.sum())} of {sigma2.shape[0]} studies have zero variance; "
            "using uniform weights over them"
        )
        return zero.astype(np.float64), True
    weights = 1.0 / sigma2
    return weights / weights.max(), False


def weighted_meta_regression(
    design: np.ndarray, target: np.ndarray, study_index: np.ndarray, sigma2: np.ndarray
) -> Tuple[np.ndarray, bool, bool]:
    """Fixed-effect WLS of `target` on `design` with weight 1/sigma2 per study.

    Returns (solution, underdetermined, uniform_fallback).
    """
    weights, fallback = study_weights(np.asarray(sigma2, dtype=np.float64))
    solution, underdetermined = _solve_weighted(design, target, weights[study_index])
    return solution, underdetermined, fallback


def pool_coefficients(
    per_study_coeffs: ModelCoefficients,
    data: ExpressionDataset,
    paper_literal: bool = False,
    tolerance: float = 1e-12,
) -> PooledModel:
    """Overall coefficients mu from the weighted regression of fitted study logits.

    Targets Z_ij = beta_0^i + x_ij . beta^i for every training sample, design
    [1, x restricted to the shared active set], one weight 1/sigma_i^2 per study;
    solved independently per class contrast.
    """
    n_studies = per_study_coeffs.n_studies
    if n_studies != data.study_count:
        raise DimensionMismatchError(
            f"model has {n_studies} studies, data has {data.study_count}"
        )
    if per_study_coeffs.n_classes != data.class_count:
        raise DimensionMismatchError("model and data disagree on the class count")

    features = prepare_features(per_study_coeffs, data.features)
    active = per_study_coeffs.active_mask(tolerance)
    n_contrasts = per_study_coeffs.n_classes - 1
    design = np.column_stack([np.ones(data.n_samples), features[:, active]])
    study_index = data.study_ids - 1

    mu_intercepts = np.zeros(n_contrasts)
    mu = np.zeros((n_contrasts, per_study_coeffs.n_features))
    sigma2 = np.zeros((n_contrasts, n_studies))
    underdetermined = False
    uniform = False

    for c in range(n_contrasts):
        target = np.empty(data.n_samples)
        for i in range(n_studies):
            rows = np.flatnonzero(study_index == i)
            target[rows] = (
                per_study_coeffs.intercepts[i, c]
                + features[rows] @ per_study_coeffs.betas[i, c]
            )
            sigma2[c, i] = estimate_study_variance(
                per_study_coeffs.study(i + 1),
                data.subset(rows),
                contrast=c + 1,
                paper_literal=paper_literal,
            )

        solution, flagged, fallback = weighted_meta_regression(
            design, target, study_index, sigma2[c]
        )
        uniform = uniform or fallback
        underdetermined = underdetermined or flagged
        mu_intercepts[c] = solution[0]
        mu[c, active] = solution[1:]

    if underdetermined:
        logger.warning(
            f"Pooling is underdetermined ({data.n_samples} samples, "
            f"{int(active.sum())} active features); minimum-norm solution used"
        )
    logger.info(f"Pooled {n_studies} studies over {int(active.sum())} active features")
    return PooledModel(
        mu_intercepts=mu_intercepts,
        mu=mu,
        sigma2=sigma2,
        source=per_study_coeffs,
        underdetermined=underdetermined,
        uniform_weights=uniform,
        paper_literal_variance=paper_literal,
    )


def predict_new_study(
    pooled: PooledModel, features: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Labels and probabilities for samples from a study not used in training."""
    return predict(pooled.as_coefficients(), features)
