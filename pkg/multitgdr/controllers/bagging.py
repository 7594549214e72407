import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..config import (
    DEFAULT_BOOTSTRAP,
    DEFAULT_CUTOFF_GRID,
    MAX_MEMBER_FAILURE_RATE,
    MAX_RESAMPLE_ATTEMPTS,
)
from ..errors import BaggingError, NoFeaturesError, ResampleInfeasibleError, TgdrError
from ..models import (
    BaggingReport,
    CutoffResult,
    ExpressionDataset,
    Fitter,
    ModelCoefficients,
    TgdrConfig,
)
from ..workers import STREAM_BOOTSTRAP, derive_rng, run_jobs
from .likelihood import probability_matrix
from .selection import FITTERS, evaluate_model
from .solver import labels_from_probabilities

logger = logging.getLogger(__name__)


def _strata(data: ExpressionDataset, by_study: bool) -> np.ndarray:
    if by_study:
        return (data.study_ids - 1) * data.class_count + data.labels
    return data.labels


def bootstrap_indices(
    data: ExpressionDataset, seed: int, replicate: int = 0, by_study: bool = False
) -> np.ndarray:
    """n row indices drawn with replacement, redrawn until every class present in
    `data` (every study x class cell with `by_study`) is covered."""
    n = data.n_samples
    keys = _strata(data, by_study)
    required = np.unique(keys)
    rng = derive_rng(seed, STREAM_BOOTSTRAP, replicate)

    for attempt in range(MAX_RESAMPLE_ATTEMPTS):
        indices = rng.integers(0, n, size=n)
        if np.unique(keys[indices]).shape[0] == required.shape[0]:
            if attempt:
                logger.debug(f"Replicate {replicate} covered all strata after {attempt + 1} draws")
            return indices
    raise ResampleInfeasibleError(
        f"{MAX_RESAMPLE_ATTEMPTS} bootstrap draws in a row missed a class "
        f"(replicate {replicate})"
    )


def bootstrap_resample(
    data: ExpressionDataset, seed: int, replicate: int = 0, by_study: bool = False
) -> ExpressionDataset:
    return data.subset(bootstrap_indices(data, seed, replicate, by_study))


def _member_job(
    data: ExpressionDataset, config: TgdrConfig, fitter: Fitter, seed: int, replicate: int
) -> Tuple[Optional[ModelCoefficients], Optional[str]]:
    try:
        sample = bootstrap_resample(data, seed, replicate, by_study=fitter == Fitter.META)
        path = FITTERS[fitter](sample, config)
        return path.final.coefficients, None
    except TgdrError as e:
        logger.warning(f"Bootstrap member {replicate} failed: {e}")
        return None, str(e)


def bagging_run(
    data: ExpressionDataset,
    config: TgdrConfig,
    n_bootstrap: int = DEFAULT_BOOTSTRAP,
    fitter: Fitter = Fitter.TGDR,
    n_jobs: int = 1,
    progress: bool = False,
) -> BaggingReport:
    """Fit `n_bootstrap` members on bootstrap resamples and count feature selections."""
    fitter = Fitter(fitter)
    if n_bootstrap < 1:
        raise BaggingError("need at least one bootstrap replicate")
    # members only keep their final step
    member_config = config.model_copy(update={"snapshot_stride": max(config.max_steps, 1)})
    jobs = [(data, member_config, fitter, config.seed, b) for b in range(n_bootstrap)]
    results = run_jobs(_member_job, jobs, n_jobs=n_jobs, description="bootstrap fits", progress=progress)

    members = [coeffs for coeffs, _ in results if coeffs is not None]
    n_failed = n_bootstrap - len(members)
    if n_failed > MAX_MEMBER_FAILURE_RATE * n_bootstrap:
        logger.error(f"{n_failed} of {n_bootstrap} bootstrap fits failed")
        raise BaggingError(f"{n_failed} of {n_bootstrap} bootstrap fits failed")
    if not members:
        raise BaggingError("every bootstrap fit failed")

    counts = np.zeros(data.n_features, dtype=np.int64)
    for coeffs in members:
        counts += coeffs.active_mask(config.selection_tolerance)
    frequencies = counts / len(members)

    logger.info(
        f"Bagging done: {len(members)} members, {int((frequencies > 0).sum())} features "
        f"ever selected, max BF {frequencies.max():.2f}"
    )
    return BaggingReport(
        n_bootstrap=n_bootstrap,
        n_failed=n_failed,
        frequencies=frequencies,
        selection_counts=counts,
        member_models=members,
        config=config,
        fitter=fitter,
        seed=config.seed,
    )


def ensemble_predict(
    report: BaggingReport, features: np.ndarray, study_ids: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Majority vote over member labels (ties to the smaller class) and mean probabilities."""
    features = np.asarray(features, dtype=np.float64)
    n_classes = report.member_models[0].n_classes
    votes = np.zeros((features.shape[0], n_classes), dtype=np.int64)
    probabilities = np.zeros((features.shape[0], n_classes))

    for coeffs in report.member_models:
        member = probability_matrix(coeffs, features, study_ids if coeffs.n_studies > 1 else None)
        labels = labels_from_probabilities(member)
        votes[np.arange(features.shape[0]), labels - 1] += 1
        probabilities += member

    probabilities /= len(report.member_models)
    return np.argmax(votes, axis=1).astype(np.int64) + 1, probabilities


def refit_on_features(
    data: ExpressionDataset, config: TgdrConfig, fitter: Fitter, keep: np.ndarray
) -> ModelCoefficients:
    """Fit on the features in `keep` and lift the result back to all D features."""
    keep = np.asarray(keep, dtype=bool)
    if not keep.any():
        raise NoFeaturesError("no features left to fit")
    path = FITTERS[Fitter(fitter)](data.select_features(keep), config)
    return path.final.coefficients.expand(keep)


def select_cutoff(
    report: BaggingReport,
    data: ExpressionDataset,
    cutoff_grid: Sequence[float] = DEFAULT_CUTOFF_GRID,
) -> Tuple[float, ModelCoefficients, List[CutoffResult]]:
    """Refit on features with BF > cutoff for each cutoff; keep the best by
    training error, then GBS, then model size, then the larger cutoff."""
    candidates = []
    table: List[CutoffResult] = []
    for cutoff in cutoff_grid:
        keep = report.frequencies > cutoff
        if not keep.any():
            logger.warning(f"Cutoff {cutoff} leaves no features; skipped")
            continue
        model = refit_on_features(data, report.config, report.fitter, keep)
        evaluation = evaluate_model(model, data)
        size = int(model.active_mask(report.config.selection_tolerance).sum())
        table.append(
            CutoffResult(
                cutoff=float(cutoff),
                features_kept=int(keep.sum()),
                model_size=size,
                error_pct=evaluation.error_pct,
                gbs=evaluation.gbs,
            )
        )
        candidates.append((evaluation.error_pct, evaluation.gbs, size, -float(cutoff), model))

    if not candidates:
        raise NoFeaturesError("every cutoff leaves zero features")
    error_pct, score, size, negative_cutoff, model = min(candidates, key=lambda c: c[:4])
    logger.info(
        f"Selected BF cutoff {-negative_cutoff}: {size} features, "
        f"training error {error_pct:.2f}%, GBS {score:.4f}"
    )
    return -negative_cutoff, model, table
