import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..config import (
    DEFAULT_CV_STRIDE,
    DEFAULT_FOLDS,
    DEFAULT_MAX_STEPS,
    DEFAULT_TAU_GRID,
    PROBABILITY_SUM_TOLERANCE,
)
from ..errors import DimensionMismatchError, InvalidProbabilityError, StratificationError
from ..models import (
    CvCriterion,
    CvGridPoint,
    CvResult,
    EvaluationReport,
    ExpressionDataset,
    Fitter,
    ModelCoefficients,
    TgdrConfig,
)
from ..workers import STREAM_FOLDS, derive_rng, run_jobs
from .likelihood import probability_matrix
from .meta import fit_meta_path
from .solver import fit_path, labels_from_probabilities

logger = logging.getLogger(__name__)

FITTERS = {Fitter.TGDR: fit_path, Fitter.META: fit_meta_path}


def gbs(probabilities: np.ndarray, labels: np.ndarray) -> float:
    """Generalized Brier score normalised by sample size: sum_i sum_k (Y_ik - p_ik)^2 / 2n."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if probabilities.ndim != 2 or probabilities.shape[0] != labels.shape[0]:
        raise DimensionMismatchError(
            f"{probabilities.shape} probabilities for {labels.shape[0]} labels"
        )
    if labels.shape[0] == 0:
        raise DimensionMismatchError("no samples to score")
    if labels.min() < 1 or labels.max() > probabilities.shape[1]:
        raise DimensionMismatchError("labels fall outside the probability columns")
    row_sums = probabilities.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > PROBABILITY_SUM_TOLERANCE):
        worst = int(np.argmax(np.abs(row_sums - 1.0)))
        raise InvalidProbabilityError(
            f"probability row {worst + 1} sums to {row_sums[worst]!r}, not 1"
        )

    onehot = np.zeros_like(probabilities)
    onehot[np.arange(labels.shape[0]), labels - 1] = 1.0
    return float(np.sum((onehot - probabilities) ** 2) / (2 * labels.shape[0]))


def misclassification_error(predicted: np.ndarray, truth: np.ndarray) -> float:
    """Percentage of mismatched labels."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise DimensionMismatchError(
            f"{predicted.shape[0]} predictions for {truth.shape[0]} labels"
        )
    if truth.size == 0:
        raise DimensionMismatchError("no labels to compare")
    return 100.0 * float(np.count_nonzero(predicted != truth)) / truth.size


def no_information_rate(labels: np.ndarray, n_classes: int) -> float:
    """Error % of always predicting the most frequent class."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise DimensionMismatchError("no labels to compare")
    counts = np.bincount(labels - 1, minlength=n_classes)
    return 100.0 * (1.0 - counts.max() / labels.size)


def evaluate(probabilities: np.ndarray, labels: np.ndarray) -> EvaluationReport:
    probabilities = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    predicted = labels_from_probabilities(probabilities)
    n_classes = probabilities.shape[1]

    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (labels - 1, predicted - 1), 1)
    return EvaluationReport(
        error_pct=misclassification_error(predicted, labels),
        gbs=gbs(probabilities, labels),
        confusion=confusion,
        n=int(labels.shape[0]),
    )


def evaluate_model(coeffs: ModelCoefficients, data: ExpressionDataset) -> EvaluationReport:
    """Evaluation on `data`, using study-specific coefficients for meta models."""
    study_ids = data.study_ids if coeffs.n_studies > 1 else None
    return evaluate(probability_matrix(coeffs, data.features, study_ids), data.labels)


def assign_folds(
    data: ExpressionDataset,
    folds: int,
    seed: int,
    stratified: bool = True,
    by_study: bool = False,
) -> np.ndarray:
    """Fold index (0-based) per sample; fold sizes differ by at most one.

    Stratified assignment lays the shuffled strata (class, or study x class)
    end to end and deals positions round-robin, so every stratum is spread
    evenly over the folds.
    """
    n = data.n_samples
    if folds < 2 or folds > n:
        raise StratificationError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    rng = derive_rng(seed, STREAM_FOLDS)

    if stratified:
        counts = data.class_counts()
        for k, count in enumerate(counts):
            if 0 < count < folds:
                raise StratificationError(
                    f"class {data.class_names[k]} has {count} samples, fewer than {folds} folds"
                )
        keys = data.labels.copy()
        if by_study:
            keys = (data.study_ids - 1) * data.class_count + data.labels
        order = np.concatenate(
            [rng.permutation(np.flatnonzero(keys == key)) for key in np.unique(keys)]
        )
    else:
        order = rng.permutation(n)

    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = np.arange(n) % folds
    return assignment


def _check_meta_cells(data: ExpressionDataset) -> None:
    for m in range(1, data.study_count + 1):
        counts = np.bincount(data.labels[data.study_rows(m)] - 1, minlength=data.class_count)
        if np.any(counts < 2):
            raise StratificationError(
                f"study {data.study_names[m - 1]} needs at least 2 samples of every class "
                "so each training fold keeps every class"
            )


def step_grid(max_steps: int, stride: int) -> List[int]:
    grid = list(range(0, max_steps + 1, stride))
    if grid[-1] != max_steps:
        grid.append(max_steps)
    return grid


def _fold_job(
    fitter: Fitter,
    data: ExpressionDataset,
    train: np.ndarray,
    test: np.ndarray,
    config: TgdrConfig,
    k_grid: List[int],
) -> np.ndarray:
    path = FITTERS[fitter](data.subset(train), config)
    held_out = data.subset(test)
    study_ids = held_out.study_ids if fitter == Fitter.META else None

    probabilities = np.empty((len(k_grid), test.shape[0], data.class_count))
    for j, k in enumerate(k_grid):
        probabilities[j] = probability_matrix(
            path.coefficients_at(k), held_out.features, study_ids
        )
    return probabilities


def k_fold_cv(
    data: ExpressionDataset,
    tau_grid: Sequence[float] = DEFAULT_TAU_GRID,
    max_steps: int = DEFAULT_MAX_STEPS,
    folds: int = DEFAULT_FOLDS,
    seed: int = 0,
    fitter: Fitter = Fitter.TGDR,
    config: Optional[TgdrConfig] = None,
    stride: int = DEFAULT_CV_STRIDE,
    stratified: bool = True,
    n_jobs: int = 1,
    progress: bool = False,
    criterion: CvCriterion = CvCriterion.ERROR,
) -> CvResult:
    """Tune (tau, k) by k-fold CV; each (tau, fold) path is scored along k at `stride`.

    The best point minimises CV misclassification, then GBS, then k, then tau.
    With the GBS criterion the first two swap.
    """
    fitter = Fitter(fitter)
    criterion = CvCriterion(criterion)
    if fitter == Fitter.META:
        _check_meta_cells(data)
    base = config or TgdrConfig()
    assignment = assign_folds(
        data, folds, seed, stratified=stratified, by_study=fitter == Fitter.META
    )
    k_grid = step_grid(max_steps, stride)
    taus = [float(t) for t in tau_grid]
    logger.info(
        f"{folds}-fold CV ({fitter.value}): {len(taus)} taus, k up to {max_steps} by {stride}"
    )

    jobs = []
    for tau in taus:
        config_tau = base.model_copy(
            update={"tau": tau, "max_steps": max_steps, "snapshot_stride": stride}
        )
        for fold in range(folds):
            train = np.flatnonzero(assignment != fold)
            test = np.flatnonzero(assignment == fold)
            jobs.append((fitter, data, train, test, config_tau, k_grid))
    results = run_jobs(_fold_job, jobs, n_jobs=n_jobs, description="cv fits", progress=progress)

    grid: List[CvGridPoint] = []
    oof: Dict[tuple, np.ndarray] = {}
    fold_errors: Dict[tuple, float] = {}
    for t, tau in enumerate(taus):
        stacked = np.empty((len(k_grid), data.n_samples, data.class_count))
        per_fold = np.empty((len(k_grid), folds))
        for fold in range(folds):
            test = np.flatnonzero(assignment == fold)
            probabilities = results[t * folds + fold]
            stacked[:, test, :] = probabilities
            for j in range(len(k_grid)):
                per_fold[j, fold] = misclassification_error(
                    labels_from_probabilities(probabilities[j]), data.labels[test]
                )
        for j, k in enumerate(k_grid):
            predicted = labels_from_probabilities(stacked[j])
            grid.append(
                CvGridPoint(
                    tau=tau,
                    k=k,
                    error_pct=misclassification_error(predicted, data.labels),
                    gbs=gbs(stacked[j], data.labels),
                )
            )
            oof[(tau, k)] = stacked[j]
            fold_errors[(tau, k)] = float(per_fold[j].mean())

    if criterion == CvCriterion.GBS:
        best = min(grid, key=lambda p: (p.gbs, p.error_pct, p.k, p.tau))
    else:
        best = min(grid, key=lambda p: (p.error_pct, p.gbs, p.k, p.tau))
    logger.info(
        f"CV best: tau={best.tau}, k={best.k}, error={best.error_pct:.2f}%, GBS={best.gbs:.4f}"
    )
    return CvResult(
        grid=grid,
        best_tau=best.tau,
        best_k=best.k,
        best_error_pct=best.error_pct,
        best_gbs=best.gbs,
        mean_fold_error_pct=fold_errors[(best.tau, best.k)],
        folds=folds,
        fold_assignment=assignment,
        oof_probabilities=oof[(best.tau, best.k)],
        fitter=fitter,
        seed=seed,
        criterion=criterion,
    )
