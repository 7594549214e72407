import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import (
    DEFAULT_BOOTSTRAP,
    DEFAULT_FOLDS,
    DEFAULT_TAU_GRID,
    META_CHECK_CV_STRIDE,
    META_CHECK_DELTA_V,
    META_CHECK_MAX_STEPS,
    META_CHECK_TAU_GRID,
    TABLE1_CRITERION,
    TABLE1_CUTOFFS,
    TABLE1_CV_STRIDE,
)
from ..errors import TgdrError
from ..models import (
    CorrelationMode,
    CvCriterion,
    ExpressionDataset,
    Fitter,
    MetaCheckResult,
    ReplicateResult,
    SimDesign,
    Table1Row,
    Table1Summary,
    TgdrConfig,
)
from ..workers import STREAM_REPLICATE, STREAM_SIMULATION, derive_rng, derive_seed, run_jobs
from .bagging import bagging_run, refit_on_features
from .meta import fit_meta_path, pool_coefficients, predict_new_study
from .selection import evaluate_model, k_fold_cv, misclassification_error, no_information_rate
from .solver import fit_path

logger = logging.getLogger(__name__)

# Logits of classes 2 and 3 against class 1: (intercept, {feature index: weight}).
EXAMPLE_LOGITS = (
    (0.5, {0: -2.0, 1: 1.2, 2: 0.8}),
    (-1.5, {0: 1.7, 1: -1.5, 3: -1.0}),
)
# (a, b, rho) pairs of the correlated design, 0-based.
EXAMPLE2_PAIRS = ((0, 4, 0.8), (2, 6, 0.8), (1, 5, -0.8), (3, 7, -0.8))
INFORMATIVE = ("X1", "X2", "X3", "X4")


def simulation_probabilities(features: np.ndarray) -> np.ndarray:
    """n x 3 class probabilities proportional to (1, e^f1, e^f2)."""
    logits = np.zeros((features.shape[0], 3))
    for c, (intercept, weights) in enumerate(EXAMPLE_LOGITS):
        logits[:, c + 1] = intercept + sum(w * features[:, i] for i, w in weights.items())
    logits -= logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    return weights / weights.sum(axis=1, keepdims=True)


def bayes_error_pct(n: int = 400_000, seed: int = 0) -> float:
    """Monte Carlo error % of the rule that knows the true class probabilities.

    Labels depend on X1-X4 only, which are iid N(0, 1) in both examples, so the
    value is shared by both designs.
    """
    rng = derive_rng(seed, STREAM_SIMULATION, 3)
    probabilities = simulation_probabilities(rng.standard_normal((n, 4)))
    return 100.0 * float(np.mean(1.0 - probabilities.max(axis=1)))


def example2_covariance(d: int) -> np.ndarray:
    covariance = np.eye(d)
    for a, b, rho in EXAMPLE2_PAIRS:
        covariance[a, b] = covariance[b, a] = rho
    return covariance


def _draw_features(rng: np.random.Generator, n: int, design: SimDesign) -> np.ndarray:
    features = rng.standard_normal((n, design.d))
    if design.correlation_mode == CorrelationMode.EXAMPLE2:
        for a, b, rho in EXAMPLE2_PAIRS:
            features[:, b] = rho * features[:, a] + np.sqrt(1.0 - rho**2) * features[:, b]
    return features


def _draw_dataset(rng: np.random.Generator, n: int, design: SimDesign) -> ExpressionDataset:
    features = _draw_features(rng, n, design)
    probabilities = simulation_probabilities(features)
    cumulative = np.cumsum(probabilities, axis=1)
    draws = rng.random(n)
    labels = 1 + np.sum(draws[:, None] > cumulative[:, :-1], axis=1)
    return ExpressionDataset(
        features=features,
        labels=labels,
        feature_names=[f"X{i + 1}" for i in range(design.d)],
        class_names=["1", "2", "3"],
    )


def _generate(design: SimDesign) -> Tuple[ExpressionDataset, ExpressionDataset]:
    # independent child streams for the training and test draws
    train = _draw_dataset(derive_rng(design.seed, STREAM_SIMULATION, 0), design.n_train, design)
    test = _draw_dataset(derive_rng(design.seed, STREAM_SIMULATION, 1), design.n_test, design)
    return train, test


def generate_example1(design: SimDesign) -> Tuple[ExpressionDataset, ExpressionDataset]:
    """iid N(0, 1) features; labels from the two-logit model with class 1 as baseline."""
    if design.correlation_mode != CorrelationMode.INDEPENDENT:
        raise ValueError("example 1 uses independent features")
    return _generate(design)


def generate_example2(design: SimDesign) -> Tuple[ExpressionDataset, ExpressionDataset]:
    """Example 1 with four correlated pairs (+/-0.8)."""
    if design.correlation_mode != CorrelationMode.EXAMPLE2:
        raise ValueError("example 2 uses the correlated design")
    eigenvalues = np.linalg.eigvalsh(example2_covariance(design.d))
    if eigenvalues.min() <= 0:
        raise ValueError("example 2 covariance is not positive definite")
    return _generate(design)


def _replicate_job(
    replicate: int,
    design: SimDesign,
    config: TgdrConfig,
    cutoffs: Sequence[float],
    tau_grid: Sequence[float],
    folds: int,
    n_bootstrap: int,
    stride: int,
    criterion: CvCriterion,
) -> ReplicateResult:
    replicate_design = design.model_copy(
        update={"seed": derive_seed(design.seed, STREAM_REPLICATE, replicate)}
    )
    try:
        train, test = _generate(replicate_design)
        cv = k_fold_cv(
            train,
            tau_grid=tau_grid,
            max_steps=config.max_steps,
            folds=folds,
            seed=replicate_design.seed,
            config=config,
            stride=stride,
            criterion=criterion,
        )
        tuned = config.model_copy(
            update={"tau": cv.best_tau, "max_steps": cv.best_k, "seed": replicate_design.seed}
        )
        raw = fit_path(
            train, tuned.model_copy(update={"snapshot_stride": max(cv.best_k, 1)})
        ).final
        raw_active = raw.active
        bagging = bagging_run(train, tuned, n_bootstrap=n_bootstrap)

        cutoff_sizes: Dict[str, int] = {}
        cutoff_errors: Dict[str, float] = {}
        for cutoff in cutoffs:
            keep = bagging.frequencies > cutoff
            label = f"{cutoff:g}"
            if not keep.any():
                cutoff_sizes[label] = 0
                cutoff_errors[label] = evaluate_model(
                    raw.coefficients.model_copy(
                        update={"betas": np.zeros_like(raw.coefficients.betas)}
                    ),
                    test,
                ).error_pct
                continue
            model = refit_on_features(train, tuned, bagging.fitter, keep)
            cutoff_sizes[label] = int(model.active_mask(tuned.selection_tolerance).sum())
            cutoff_errors[label] = evaluate_model(model, test).error_pct

        names = train.feature_names
        return ReplicateResult(
            replicate=replicate,
            selected={f: bool(raw_active[names.index(f)]) for f in INFORMATIVE},
            frequencies={f: float(bagging.frequencies[names.index(f)]) for f in INFORMATIVE},
            tau=cv.best_tau,
            k=cv.best_k,
            cv_error_pct=cv.best_error_pct,
            raw_size=int(raw_active.sum()),
            raw_error_pct=evaluate_model(raw.coefficients, test).error_pct,
            cutoff_sizes=cutoff_sizes,
            cutoff_errors=cutoff_errors,
        )
    except TgdrError as e:
        logger.error(f"Replicate {replicate} failed: {e}")
        return ReplicateResult(replicate=replicate, failed=True, error=str(e))


def _mean(values: List[float]) -> float:
    return float(np.mean(values)) if values else float("nan")


def replicate_table1(
    n_datasets: int,
    design: SimDesign,
    config: TgdrConfig,
    cutoffs: Sequence[float] = TABLE1_CUTOFFS,
    tau_grid: Sequence[float] = DEFAULT_TAU_GRID,
    folds: int = DEFAULT_FOLDS,
    n_bootstrap: int = DEFAULT_BOOTSTRAP,
    stride: int = TABLE1_CV_STRIDE,
    n_jobs: int = 1,
    progress: bool = False,
    criterion: CvCriterion = CvCriterion(TABLE1_CRITERION),
) -> Table1Summary:
    """Generate, tune, fit, bag and score `n_datasets` simulated data sets.

    (tau, k) come from CV on `criterion` (GBS first by default) over the path
    walked with `config.delta_v` up to `config.max_steps`.
    """
    if n_datasets < 1:
        raise ValueError("need at least one data set")
    jobs = [
        (r, design, config, tuple(cutoffs), tuple(tau_grid), folds, n_bootstrap, stride, criterion)
        for r in range(n_datasets)
    ]
    results = run_jobs(_replicate_job, jobs, n_jobs=n_jobs, description="replicates", progress=progress)

    ok = [r for r in results if not r.failed]
    excluded = [r.replicate for r in results if r.failed]
    if excluded:
        logger.warning(f"{len(excluded)} replicate(s) excluded: {excluded}")

    rows = [
        Table1Row(
            method="multi-TGDR without bagging",
            selection_pct={f: 100.0 * _mean([r.selected[f] for r in ok]) for f in INFORMATIVE},
            average_bf_pct={f: 100.0 * _mean([r.frequencies[f] for r in ok]) for f in INFORMATIVE},
            average_size=_mean([r.raw_size for r in ok]),
            average_error_pct=_mean([r.raw_error_pct for r in ok]),
            average_cv_error_pct=_mean([r.cv_error_pct for r in ok]),
        )
    ]
    for cutoff in cutoffs:
        label = f"{cutoff:g}"
        rows.append(
            Table1Row(
                method=f"multi-TGDR BF>{100 * cutoff:g}%",
                selection_pct={f: None for f in INFORMATIVE},
                average_bf_pct={f: None for f in INFORMATIVE},
                average_size=_mean([r.cutoff_sizes[label] for r in ok]),
                average_error_pct=_mean([r.cutoff_errors[label] for r in ok]),
            )
        )
    return Table1Summary(
        design=design,
        n_datasets=n_datasets,
        rows=rows,
        replicates=results,
        excluded=excluded,
        bayes_error_pct=bayes_error_pct(seed=design.seed),
    )


def summary_frame(summary: Table1Summary) -> pd.DataFrame:
    records = []
    for row in summary.rows:
        record = {"method": row.method}
        for f in INFORMATIVE:
            record[f"pct_selected_{f}"] = row.selection_pct[f]
            record[f"avg_bf_pct_{f}"] = row.average_bf_pct[f]
        record["avg_selected"] = row.average_size
        record["avg_test_error_pct"] = row.average_error_pct
        record["avg_cv_error_pct"] = row.average_cv_error_pct
        records.append(record)
    return pd.DataFrame.from_records(records)


def format_summary(summary: Table1Summary) -> str:
    """Aligned text rendering of the summary table."""
    frame = summary_frame(summary)
    header = (
        f"{summary.n_datasets} data sets, n_train={summary.design.n_train}, "
        f"n_test={summary.design.n_test}, D={summary.design.d}, "
        f"design={summary.design.correlation_mode.value}"
    )
    if summary.bayes_error_pct is not None:
        header += f", Bayes error {summary.bayes_error_pct:.2f}%"
    if summary.excluded:
        header += f", excluded replicates {summary.excluded}"
    return header + "\n" + frame.to_string(index=False, float_format=lambda v: f"{v:.2f}", na_rep="---")


# Planted effects of the multi-study generator: (contrast, feature, weight).
CONSISTENT_EFFECTS = ((0, 0, 3.5), (0, 1, -3.5), (1, 2, 3.5), (1, 3, -3.5))
INCONSISTENT_EFFECTS = ((0, 4, 1.5), (1, 5, 1.5))
INCONSISTENT_SIGNS = (1.0, -1.0, 0.0)


def generate_meta_studies(
    n_per_study: int = 100,
    d: int = 500,
    n_studies: int = 3,
    seed: int = 0,
    batch_shift: float = 0.2,
) -> ExpressionDataset:
    """Three-class studies sharing four consistently signed informative features
    (X1-X4) and two features (X5, X6) whose effect flips sign from study to study
    (+, -, 0, repeating) and so cancels across studies.

    Each study gets its own per-feature location shift. Class 3 is the reference.
    """
    if d < 6:
        raise ValueError("the multi-study design needs at least 6 features")
    features = []
    labels = []
    study_ids = []
    for m in range(n_studies):
        rng = derive_rng(seed, STREAM_SIMULATION, 2, m)
        x = rng.standard_normal((n_per_study, d))
        logits = np.zeros((n_per_study, 3))
        for c, j, weight in CONSISTENT_EFFECTS:
            logits[:, c] += weight * x[:, j]
        sign = INCONSISTENT_SIGNS[m % len(INCONSISTENT_SIGNS)]
        for c, j, weight in INCONSISTENT_EFFECTS:
            logits[:, c] += sign * weight * x[:, j]
        logits -= logits.max(axis=1, keepdims=True)
        probabilities = np.exp(logits)
        probabilities /= probabilities.sum(axis=1, keepdims=True)
        cumulative = np.cumsum(probabilities, axis=1)
        y = 1 + np.sum(rng.random(n_per_study)[:, None] > cumulative[:, :-1], axis=1)

        features.append(x + batch_shift * rng.standard_normal(d))
        labels.append(y)
        study_ids.append(np.full(n_per_study, m + 1))

    return ExpressionDataset(
        features=np.vstack(features),
        labels=np.concatenate(labels),
        study_ids=np.concatenate(study_ids),
        feature_names=[f"X{i + 1}" for i in range(d)],
        class_names=["1", "2", "3"],
        study_names=[f"study{m + 1}" for m in range(n_studies)],
    )


INCONSISTENT = tuple(f"X{j + 1}" for j in sorted({j for _, j, _ in INCONSISTENT_EFFECTS}))
CONSISTENT = tuple(f"X{j + 1}" for j in sorted({j for _, j, _ in CONSISTENT_EFFECTS}))


def meta_check(
    seed: int,
    n_per_study: int = 100,
    d: int = 500,
    n_studies: int = 3,
    tau_grid: Sequence[float] = META_CHECK_TAU_GRID,
    delta_v: float = META_CHECK_DELTA_V,
    max_steps: int = META_CHECK_MAX_STEPS,
    folds: int = DEFAULT_FOLDS,
    stride: int = META_CHECK_CV_STRIDE,
    n_jobs: int = 1,
) -> MetaCheckResult:
    """End-to-end multi-study workflow on simulated studies.

    CV-tunes and fits the meta model (reporting which planted features it
    selects) and the single pooled-data model; pools the meta model; scores the
    pooled-data fit and the pooled meta model on a fresh draw of studies.
    """
    train = generate_meta_studies(n_per_study, d, n_studies, seed=seed)
    test = generate_meta_studies(
        n_per_study, d, n_studies, seed=derive_seed(seed, STREAM_SIMULATION, 5)
    )
    base = TgdrConfig(delta_v=delta_v, max_steps=max_steps, seed=seed)

    def tune(fitter: Fitter) -> TgdrConfig:
        cv = k_fold_cv(
            train,
            tau_grid=tau_grid,
            max_steps=max_steps,
            folds=folds,
            seed=seed,
            fitter=fitter,
            config=base,
            stride=stride,
            n_jobs=n_jobs,
        )
        return base.model_copy(
            update={
                "tau": cv.best_tau,
                "max_steps": cv.best_k,
                "snapshot_stride": max(cv.best_k, 1),
            }
        )

    meta_config = tune(Fitter.META)
    meta = fit_meta_path(train, meta_config).final
    selected = [train.feature_names[j] for j in np.flatnonzero(meta.active)]
    pooled = pool_coefficients(meta.coefficients, train)
    pooled_labels, _ = predict_new_study(pooled, test.features)

    multi_config = tune(Fitter.TGDR)
    multi = fit_path(train, multi_config).final
    result = MetaCheckResult(
        seed=seed,
        meta_tau=meta_config.tau,
        meta_k=meta_config.max_steps,
        selected=selected,
        inconsistent_selected=[f for f in selected if f in INCONSISTENT],
        consistent_selected=[f for f in selected if f in CONSISTENT],
        multi_tau=multi_config.tau,
        multi_k=multi_config.max_steps,
        multi_size=int(multi.active.sum()),
        multi_error_pct=evaluate_model(multi.coefficients, test).error_pct,
        pooled_error_pct=misclassification_error(pooled_labels, test.labels),
        no_information_pct=no_information_rate(test.labels, test.class_count),
    )
    logger.info(
        f"Multi-study check seed {seed}: meta selected {len(selected)} "
        f"(inconsistent {result.inconsistent_selected}), multi-TGDR error "
        f"{result.multi_error_pct:.2f}% vs no-information {result.no_information_pct:.2f}%"
    )
    return result
