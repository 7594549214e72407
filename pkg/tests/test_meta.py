import numpy as np
import pytest

from multitgdr.controllers.meta import (
    check_study_coverage,
    delta_method_variance,
    fit_meta_path,
    meta_gradient,
    pool_coefficients,
    predict_new_study,
    study_weights,
    weighted_meta_regression,
)
from multitgdr.controllers.selection import misclassification_error, no_information_rate
from multitgdr.controllers.simulation import generate_meta_studies
from multitgdr.controllers.solver import fit_path, predict
from multitgdr.errors import DegenerateStudyError, DimensionMismatchError, MissingClassError
from multitgdr.models import ExpressionDataset, TgdrConfig

from .conftest import make_dataset


def stack_studies(*datasets):
    return ExpressionDataset(
        features=np.vstack([d.features for d in datasets]),
        labels=np.concatenate([d.labels for d in datasets]),
        study_ids=np.concatenate([np.full(d.n_samples, m + 1) for m, d in enumerate(datasets)]),
        class_names=datasets[0].class_names,
    )


class TestMetaGradient:
    def test_sum(self):
        blocks = [np.ones((2, 3)), 2 * np.ones((2, 3)), -np.ones((2, 3))]
        np.testing.assert_array_equal(meta_gradient(blocks), 2 * np.ones((2, 3)))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            meta_gradient([np.ones((2, 3)), np.ones((2, 4))])

    def test_empty(self):
        with pytest.raises(DimensionMismatchError):
            meta_gradient([])


class TestFitMetaPath:
    def test_missing_class_in_a_study(self, three_class):
        labels = three_class.labels.copy()
        study_ids = np.where(np.arange(three_class.n_samples) < 45, 1, 2)
        labels[45:][labels[45:] == 3] = 1
        data = three_class.model_copy(
            update={"labels": labels, "study_ids": study_ids, "study_count": 2, "study_names": ["a", "b"]}
        )
        with pytest.raises(MissingClassError, match="study b"):
            check_study_coverage(data)
        with pytest.raises(MissingClassError):
            fit_meta_path(data, TgdrConfig(max_steps=5))

    def test_single_study_matches_fit_path(self, three_class, quick_config):
        meta = fit_meta_path(three_class, quick_config)
        single = fit_path(three_class, quick_config)
        assert meta.step_indices == single.step_indices
        for a, b in zip(meta.steps, single.steps):
            np.testing.assert_array_equal(a.coefficients.betas, b.coefficients.betas)
            np.testing.assert_array_equal(a.coefficients.intercepts, b.coefficients.intercepts)

    def test_study_specific_coefficients(self, three_studies, quick_config):
        path = fit_meta_path(three_studies, quick_config)
        coefficients = path.final.coefficients
        assert coefficients.betas.shape == (3, 2, three_studies.n_features)
        active = path.final.active
        for m in range(3):
            assert not coefficients.betas[m][:, ~active].any()
        assert not np.array_equal(coefficients.betas[0], coefficients.betas[1])

    def test_opposite_effects_cancel(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((40, 2))
        labels = np.where(x[:, 0] + x[:, 1] + 0.5 * rng.standard_normal(40) > 0, 1, 2)
        flipped = x.copy()
        flipped[:, 0] = -flipped[:, 0]
        data = stack_studies(
            ExpressionDataset(features=x, labels=labels),
            ExpressionDataset(features=flipped, labels=labels),
        )
        path = fit_meta_path(data, TgdrConfig(tau=0.5, max_steps=20, standardize=False))
        assert path.final.active.tolist() == [False, True]

    def test_identical_studies_share_coefficients(self, three_class, quick_config):
        data = stack_studies(three_class, three_class)
        coefficients = fit_meta_path(data, quick_config).final.coefficients
        np.testing.assert_allclose(coefficients.betas[0], coefficients.betas[1], rtol=0, atol=1e-12)

    def test_consistent_features_are_selected(self):
        data = generate_meta_studies(n_per_study=100, d=50, seed=4)
        path = fit_meta_path(data, TgdrConfig(tau=1.0, max_steps=4))
        active = set(np.flatnonzero(path.final.active).tolist())
        assert {0, 1, 2, 3} <= active
        assert 4 not in active and 5 not in active


class TestDeltaMethod:
    def test_default_variance(self):
        assert delta_method_variance(0.1, 0.5) == pytest.approx(1.6)

    def test_literal_variance(self):
        assert delta_method_variance(0.1, 0.5, paper_literal=True) == pytest.approx(0.8)

    @pytest.mark.parametrize("p", [0.0, 1.0, 1e-13])
    def test_degenerate_probability(self, p):
        with pytest.raises(DegenerateStudyError):
            delta_method_variance(0.1, p)


class TestStudyWeights:
    def test_inverse_variance(self):
        weights, fallback = study_weights(np.array([1.0, 2.0, 4.0]))
        np.testing.assert_allclose(weights, [1.0, 0.5, 0.25])
        assert not fallback

    def test_zero_variance_studies_take_the_weight(self):
        weights, fallback = study_weights(np.array([0.0, 2.0, 0.0]))
        np.testing.assert_array_equal(weights, [1.0, 0.0, 1.0])
        assert fallback

    def test_all_zero_is_uniform(self):
        weights, _ = study_weights(np.zeros(3))
        np.testing.assert_array_equal(weights, np.ones(3))


class TestPooling:
    def test_single_study_returns_its_coefficients(self, three_class, quick_config):
        coefficients = fit_path(three_class, quick_config).final.coefficients
        pooled = pool_coefficients(coefficients, three_class)
        np.testing.assert_allclose(pooled.mu, coefficients.betas[0], rtol=0, atol=1e-8)
        np.testing.assert_allclose(pooled.mu_intercepts, coefficients.intercepts[0], rtol=0, atol=1e-8)
        assert pooled.sigma2.shape == (2, 1)
        assert not pooled.underdetermined

    def test_identical_studies(self, three_class, quick_config):
        data = stack_studies(three_class, three_class)
        coefficients = fit_meta_path(data, quick_config).final.coefficients
        pooled = pool_coefficients(coefficients, data)
        np.testing.assert_allclose(pooled.mu, coefficients.betas[0], rtol=0, atol=1e-8)
        np.testing.assert_allclose(pooled.sigma2[:, 0], pooled.sigma2[:, 1], rtol=1e-12)

    def test_literal_variance_is_recorded(self, three_studies, quick_config):
        coefficients = fit_meta_path(three_studies, quick_config).final.coefficients
        default = pool_coefficients(coefficients, three_studies)
        literal = pool_coefficients(coefficients, three_studies, paper_literal=True)
        assert literal.paper_literal_variance
        assert not np.allclose(default.sigma2, literal.sigma2)

    def test_study_count_mismatch(self, three_studies, three_class, quick_config):
        coefficients = fit_meta_path(three_studies, quick_config).final.coefficients
        with pytest.raises(DimensionMismatchError):
            pool_coefficients(coefficients, three_class)

    def test_variance_scale_invariance(self):
        rng = np.random.default_rng(3)
        design = np.column_stack([np.ones(30), rng.standard_normal((30, 2))])
        target = rng.standard_normal(30)
        study_index = np.repeat([0, 1, 2], 10)
        sigma2 = np.array([0.5, 1.0, 2.0])
        a, _, _ = weighted_meta_regression(design, target, study_index, sigma2)
        b, _, _ = weighted_meta_regression(design, target, study_index, 10 * sigma2)
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)

    def test_underdetermined_flag(self):
        rng = np.random.default_rng(4)
        design = rng.standard_normal((3, 5))
        solution, underdetermined, _ = weighted_meta_regression(
            design, rng.standard_normal(3), np.zeros(3, dtype=np.int64), np.ones(1)
        )
        assert underdetermined
        assert solution.shape == (5,)

    def test_predict_new_study(self, three_studies, quick_config):
        coefficients = fit_meta_path(three_studies, quick_config).final.coefficients
        pooled = pool_coefficients(coefficients, three_studies)
        fresh = make_dataset(n=20, d=6, k=3, seed=11)
        labels, probabilities = predict_new_study(pooled, fresh.features)
        expected_labels, expected = predict(pooled.as_coefficients(), fresh.features)
        np.testing.assert_array_equal(labels, expected_labels)
        np.testing.assert_allclose(probabilities.sum(axis=1), 1.0)
        np.testing.assert_array_equal(probabilities, expected)

    def test_held_out_study_beats_the_majority_class(self):
        # studies 1-2 of a three-study draw train, study 3 is never seen
        train = generate_meta_studies(n_per_study=100, d=100, n_studies=2, seed=7)
        full = generate_meta_studies(n_per_study=100, d=100, n_studies=3, seed=7)
        np.testing.assert_array_equal(full.features[: train.n_samples], train.features)
        held_out = full.study_ids == 3

        config = TgdrConfig(tau=1.0, delta_v=0.002, max_steps=300)
        coefficients = fit_meta_path(train, config).final.coefficients
        pooled = pool_coefficients(coefficients, train)
        labels, _ = predict_new_study(pooled, full.features[held_out])

        truth = full.labels[held_out]
        error = misclassification_error(labels, truth)
        assert no_information_rate(truth, 3) - error >= 20.0


def test_single_study_gradient_passes_through():
    block = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(meta_gradient([block]), block)


def test_opposite_gradients_sum_to_zero():
    block = np.random.default_rng(2).standard_normal((2, 5))
    assert not meta_gradient([block, -block]).any()


def test_perfect_fit_has_zero_variance():
    assert delta_method_variance(0.0, 0.3) == 0.0


def test_duplicated_study_follows_the_single_path(three_class, quick_config):
    doubled = fit_meta_path(stack_studies(three_class, three_class), quick_config)
    single = fit_path(three_class, quick_config)
    for a, b in zip(doubled.steps, single.steps):
        np.testing.assert_array_equal(a.active, b.active)
        np.testing.assert_allclose(a.coefficients.betas[0], b.coefficients.betas[0], rtol=0, atol=1e-10)


def test_equal_variances_give_stacked_least_squares():
    rng = np.random.default_rng(5)
    x = np.column_stack([np.ones(20), rng.standard_normal((20, 2))])
    beta = np.array([0.3, -1.0, 2.0])
    design = np.vstack([x, x])
    target = np.concatenate([x @ beta, x @ (3 * beta)])
    study_index = np.repeat([0, 1], 20)
    solution, _, _ = weighted_meta_regression(design, target, study_index, np.array([0.7, 0.7]))
    expected, *_ = np.linalg.lstsq(design, target, rcond=None)
    np.testing.assert_allclose(solution, expected, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(solution, 2 * beta, rtol=1e-10)
