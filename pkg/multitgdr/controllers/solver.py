import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import ZERO_GRADIENT_FLOOR
from ..errors import DimensionMismatchError, DivergenceError, NonFiniteError
from ..models import (
    ExpressionDataset,
    ModelCoefficients,
    PathStep,
    RegularizationPath,
    Standardization,
    TerminalReason,
    TgdrConfig,
    ThresholdVector,
)
from .likelihood import evaluate_study, negative_gradient, probability_matrix

logger = logging.getLogger(__name__)


def threshold_vector(
    gradients: np.ndarray, tau: Union[float, Sequence[float], np.ndarray]
) -> ThresholdVector:
    """Per-class masks |g_ki| >= tau_k * max_l |g_kl| and their per-feature maximum.

    A block whose gradient is identically zero passes every feature (0 >= 0); the
    path stops on the zero-gradient test before that matters.
    """
    gradients = np.asarray(gradients, dtype=np.float64)
    if gradients.ndim == 1:
        gradients = gradients[None, :]
    if not np.all(np.isfinite(gradients)):
        raise NonFiniteError("gradient has non-finite entries")

    taus = np.broadcast_to(np.asarray(tau, dtype=np.float64), (gradients.shape[0],))
    if np.any(taus < 0) or np.any(taus > 1):
        raise ValueError(f"tau must lie in [0, 1], got {tau}")

    magnitude = np.abs(gradients)
    block_max = magnitude.max(axis=1, keepdims=True)
    per_class = magnitude >= taus[:, None] * block_max
    return ThresholdVector(f=per_class.any(axis=0), per_class=per_class)


def _snapshot(
    k: int,
    config: TgdrConfig,
    intercepts: np.ndarray,
    betas: np.ndarray,
    standardization: Optional[Standardization],
    loglik: float,
) -> PathStep:
    return PathStep(
        step=k,
        v=k * config.delta_v,
        coefficients=ModelCoefficients(
            intercepts=intercepts.copy(), betas=betas.copy(), standardization=standardization
        ),
        active=np.any(np.abs(betas) > config.selection_tolerance, axis=(0, 1)),
        log_likelihood=loglik,
    )


def run_path(
    blocks: List[Tuple[np.ndarray, np.ndarray]],
    config: TgdrConfig,
    standardization: Optional[Standardization],
    n_classes: int,
) -> RegularizationPath:
    """Thresholded gradient path over one or more studies.

    `blocks` holds (features, indicators) per study. Thresholding uses the
    meta-gradient (sum of the study gradients); every study then moves along
    its own gradient on the shared mask. Intercepts are never thresholded.
    """
    n_studies = len(blocks)
    n_features = blocks[0][0].shape[1]
    taus = config.class_taus(n_classes - 1)

    intercepts = np.zeros((n_studies, n_classes - 1))
    betas = np.zeros((n_studies, n_classes - 1, n_features))
    g_intercepts = np.empty_like(intercepts)
    g_betas = np.empty_like(betas)
    steps: List[PathStep] = []

    k = 0
    while True:
        loglik = 0.0
        for s, (features, indicators) in enumerate(blocks):
            study_loglik, g_intercepts[s], g_betas[s] = evaluate_study(
                features, indicators, intercepts[s], betas[s]
            )
            loglik += study_loglik

        if not (
            np.isfinite(loglik)
            and np.all(np.isfinite(g_intercepts))
            and np.all(np.isfinite(g_betas))
        ):
            logger.error(f"Path diverged at step {k}")
            raise DivergenceError(f"non-finite log-likelihood or gradient at step {k}")

        meta = g_betas.sum(axis=0)
        reason = None
        if k >= config.max_steps:
            reason = TerminalReason.MAX_STEPS
        elif np.max(np.abs(meta)) <= ZERO_GRADIENT_FLOOR:
            reason = TerminalReason.ZERO_GRADIENT

        if reason is not None or k % config.snapshot_stride == 0:
            steps.append(_snapshot(k, config, intercepts, betas, standardization, loglik))
        if reason is not None:
            break

        mask = threshold_vector(meta, taus).f
        betas = betas - config.delta_v * g_betas * mask
        intercepts = intercepts - config.delta_v * g_intercepts
        k += 1

    logger.debug(f"Path finished after {k} steps ({reason.value})")
    return RegularizationPath(steps=steps, config=config, terminal_reason=reason)


def standardize_training(
    data: ExpressionDataset, config: TgdrConfig
) -> Tuple[np.ndarray, Optional[Standardization]]:
    if not config.standardize:
        return data.features, None
    standardization = Standardization.fit(data.features)
    return standardization.apply(data.features), standardization


def tgdr_step(
    coeffs: ModelCoefficients,
    data: ExpressionDataset,
    tau: Union[float, Sequence[float]],
    delta_v: float,
) -> ModelCoefficients:
    """One update beta(v + dv) = beta(v) - dv * g(v) * f(v) on single-study data."""
    if coeffs.n_studies != 1:
        raise DimensionMismatchError("tgdr_step works on single-study coefficients")
    gradient = negative_gradient(coeffs, data.pooled())
    g_betas = gradient.coefficients[0]
    mask = threshold_vector(g_betas, tau).f
    return ModelCoefficients(
        intercepts=coeffs.intercepts - delta_v * gradient.intercepts,
        betas=coeffs.betas - delta_v * gradient.coefficients * mask,
        standardization=coeffs.standardization,
    )


def fit_path(data: ExpressionDataset, config: TgdrConfig) -> RegularizationPath:
    """Single-study TGDR path (binary or multi-class). Several studies are pooled."""
    if data.study_count > 1:
        logger.info(f"Pooling {data.study_count} studies for a single-study fit")
    features, standardization = standardize_training(data, config)
    logger.info(
        f"Fitting TGDR path: n={data.n_samples}, D={data.n_features}, "
        f"K={data.class_count}, tau={config.tau}, steps={config.max_steps}"
    )
    path = run_path(
        [(features, data.indicators())], config, standardization, data.class_count
    )
    logger.info(
        f"TGDR path done at step {path.final.step} ({path.terminal_reason.value}), "
        f"{int(path.final.active.sum())} features active"
    )
    return path


def predict(
    coeffs: ModelCoefficients, features: np.ndarray, study_ids: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Labels (1..K, ties to the smaller class) and the n x K probability matrix."""
    probabilities = probability_matrix(coeffs, features, study_ids)
    return labels_from_probabilities(probabilities), probabilities


def labels_from_probabilities(probabilities: np.ndarray) -> np.ndarray:
    return np.argmax(probabilities, axis=1).astype(np.int64) + 1
