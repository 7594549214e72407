import logging
from typing import Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from ..config import LOGIT_CLAMP
from ..errors import DimensionMismatchError, NonFiniteError
from ..models import ExpressionDataset, GradientBlocks, ModelCoefficients

logger = logging.getLogger(__name__)


def linear_predictors(intercepts: np.ndarray, betas: np.ndarray, features: np.ndarray) -> np.ndarray:
    """eta_jk = beta_k0 + beta_k . x_j for the K-1 non-reference classes, clamped."""
    eta = intercepts[None, :] + features @ betas.T
    return np.clip(eta, -LOGIT_CLAMP, LOGIT_CLAMP)


def log_normalizer(eta: np.ndarray) -> np.ndarray:
    """log(1 + sum_k exp(eta_k)) per row; the reference logit is 0."""
    full = np.column_stack([eta, np.zeros(eta.shape[0])])
    return logsumexp(full, axis=1)


def probabilities_from_logits(eta: np.ndarray) -> np.ndarray:
    """n x K membership probabilities, reference class in the last column."""
    full = np.column_stack([eta, np.zeros(eta.shape[0])])
    full -= full.max(axis=1, keepdims=True)
    weights = np.exp(full)
    return weights / weights.sum(axis=1, keepdims=True)


def evaluate_study(
    features: np.ndarray, indicators: np.ndarray, intercepts: np.ndarray, betas: np.ndarray
) -> Tuple[float, np.ndarray, np.ndarray]:
    """Log-likelihood and negative gradients of one study.

    Returns (R, g_intercepts (K-1,), g_betas (K-1, D)) with g = -dR/dbeta built
    from the residuals p_kj - Y_kj.
    """
    eta = linear_predictors(intercepts, betas, features)
    normalizer = log_normalizer(eta)
    loglik = float(np.sum(indicators * eta) - np.sum(normalizer))
    probabilities = np.exp(eta - normalizer[:, None])
    residuals = probabilities - indicators
    return loglik, residuals.sum(axis=0), residuals.T @ features


def prepare_features(coeffs: ModelCoefficients, features: np.ndarray) -> np.ndarray:
    """Check dimensions and replay the training standardization, if any."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features[None, :]
    if features.shape[1] != coeffs.n_features:
        raise DimensionMismatchError(
            f"model has {coeffs.n_features} features, input has {features.shape[1]}"
        )
    if not np.all(np.isfinite(features)):
        raise NonFiniteError("input features contain non-finite values")
    if coeffs.standardization is not None:
        features = coeffs.standardization.apply(features)
    return features


def _study_index(coeffs: ModelCoefficients, study_ids: np.ndarray) -> np.ndarray:
    if coeffs.n_studies == 1:
        return np.zeros(study_ids.shape[0], dtype=np.int64)
    if study_ids.min() < 1 or study_ids.max() > coeffs.n_studies:
        raise DimensionMismatchError(
            f"study ids must lie in 1..{coeffs.n_studies} for this model"
        )
    return study_ids - 1


def class_probabilities(coeffs: ModelCoefficients, x: np.ndarray, study: int = 1) -> np.ndarray:
    """Membership probabilities (length K) of a single sample."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatchError("x must be a vector")
    if not 1 <= study <= coeffs.n_studies:
        raise DimensionMismatchError(f"study {study} outside 1..{coeffs.n_studies}")
    features = prepare_features(coeffs, x)
    eta = linear_predictors(
        coeffs.intercepts[study - 1], coeffs.betas[study - 1], features
    )
    return probabilities_from_logits(eta)[0]


def probability_matrix(
    coeffs: ModelCoefficients, features: np.ndarray, study_ids: Optional[np.ndarray] = None
) -> np.ndarray:
    """n x K probabilities; study-specific coefficients are used when the model has several."""
    features = prepare_features(coeffs, features)
    n = features.shape[0]
    if study_ids is None:
        study_ids = np.ones(n, dtype=np.int64)
    index = _study_index(coeffs, np.asarray(study_ids, dtype=np.int64))

    probabilities = np.empty((n, coeffs.n_classes))
    for s in np.unique(index):
        rows = np.flatnonzero(index == s)
        eta = linear_predictors(coeffs.intercepts[s], coeffs.betas[s], features[rows])
        probabilities[rows] = probabilities_from_logits(eta)
    return probabilities


def _check_consistent(coeffs: ModelCoefficients, data: ExpressionDataset) -> None:
    if coeffs.n_classes != data.class_count:
        raise DimensionMismatchError(
            f"model has {coeffs.n_classes} classes, data has {data.class_count}"
        )
    if coeffs.n_studies not in (1, data.study_count):
        raise DimensionMismatchError(
            f"model has {coeffs.n_studies} studies, data has {data.study_count}"
        )


def _study_blocks(coeffs: ModelCoefficients, data: ExpressionDataset):
    features = prepare_features(coeffs, data.features)
    indicators = data.indicators()
    if coeffs.n_studies == 1:
        yield 0, features, indicators
        return
    for s in range(coeffs.n_studies):
        rows = data.study_rows(s + 1)
        yield s, features[rows], indicators[rows]


def log_likelihood(coeffs: ModelCoefficients, data: ExpressionDataset) -> float:
    """Multinomial log-likelihood, summed over samples and (in meta mode) studies."""
    _check_consistent(coeffs, data)
    total = 0.0
    for s, features, indicators in _study_blocks(coeffs, data):
        loglik, _, _ = evaluate_study(features, indicators, coeffs.intercepts[s], coeffs.betas[s])
        total += loglik
    return total


def negative_gradient(coeffs: ModelCoefficients, data: ExpressionDataset) -> GradientBlocks:
    """-dR/dbeta for every intercept and coefficient, per study."""
    _check_consistent(coeffs, data)
    g_intercepts = np.zeros_like(coeffs.intercepts)
    g_betas = np.zeros_like(coeffs.betas)
    for s, features, indicators in _study_blocks(coeffs, data):
        _, g0, gb = evaluate_study(features, indicators, coeffs.intercepts[s], coeffs.betas[s])
        g_intercepts[s] = g0
        g_betas[s] = gb

    if not (np.all(np.isfinite(g_intercepts)) and np.all(np.isfinite(g_betas))):
        raise NonFiniteError("gradient has non-finite entries; the fit has diverged")
    return GradientBlocks(intercepts=g_intercepts, coefficients=g_betas)
