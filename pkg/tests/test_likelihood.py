import numpy as np
import pytest
from scipy.special import expit

from multitgdr.controllers.likelihood import (
    class_probabilities,
    log_likelihood,
    negative_gradient,
    probability_matrix,
)
from multitgdr.errors import DimensionMismatchError, NonFiniteError
from multitgdr.models import ExpressionDataset, ModelCoefficients, Standardization

from .conftest import make_dataset, random_coefficients


class TestClassProbabilities:
    def test_zero_model_is_uniform(self):
        coeffs = ModelCoefficients.zeros(n_classes=3, n_features=4)
        p = class_probabilities(coeffs, np.array([1.0, -2.0, 3.0, 0.5]))
        np.testing.assert_allclose(p, 1 / 3, atol=1e-15)

    def test_simulation_intercepts(self):
        coeffs = ModelCoefficients(
            intercepts=np.array([[0.5, -1.5]]), betas=np.array([[[-2.0], [1.7]]])
        )
        p = class_probabilities(coeffs, np.array([0.0]))
        expected = np.array([np.exp(0.5), np.exp(-1.5), 1.0])
        np.testing.assert_allclose(p, expected / expected.sum(), rtol=1e-14)
        assert p[0] > p[2] > p[1]

    def test_saturation_without_overflow(self):
        coeffs = ModelCoefficients(intercepts=np.array([[50.0]]), betas=np.zeros((1, 1, 2)))
        p = class_probabilities(coeffs, np.zeros(2))
        assert np.all(np.isfinite(p))
        assert abs(p[0] - 1.0) <= 1e-15
        assert p[1] < 1e-15

    def test_huge_logits_are_clamped(self):
        coeffs = ModelCoefficients(intercepts=np.array([[1e6, -1e6]]), betas=np.zeros((1, 2, 1)))
        p = class_probabilities(coeffs, np.zeros(1))
        assert np.all(np.isfinite(p))
        np.testing.assert_allclose(p.sum(), 1.0, atol=1e-12)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        coeffs = random_coefficients(rng, k=4, d=5, scale=3.0)
        p = probability_matrix(coeffs, rng.standard_normal((200, 5)) * 4)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
        assert np.all((p >= 0) & (p <= 1))

    def test_standardization_is_replayed(self):
        coeffs = ModelCoefficients(
            intercepts=np.zeros((1, 1)),
            betas=np.array([[[1.0]]]),
            standardization=Standardization(mean=np.array([10.0]), scale=np.array([2.0])),
        )
        p = class_probabilities(coeffs, np.array([12.0]))
        np.testing.assert_allclose(p[0], expit(1.0), rtol=1e-14)

    def test_dimension_mismatch(self):
        coeffs = ModelCoefficients.zeros(n_classes=3, n_features=4)
        with pytest.raises(DimensionMismatchError):
            class_probabilities(coeffs, np.zeros(3))

    def test_non_finite_input(self):
        coeffs = ModelCoefficients.zeros(n_classes=2, n_features=2)
        with pytest.raises(NonFiniteError):
            class_probabilities(coeffs, np.array([np.nan, 0.0]))

    def test_study_out_of_range(self):
        coeffs = ModelCoefficients.zeros(n_classes=2, n_features=2, n_studies=2)
        with pytest.raises(DimensionMismatchError):
            class_probabilities(coeffs, np.zeros(2), study=3)


class TestLogLikelihood:
    @pytest.mark.parametrize("k", [2, 3, 5])
    def test_zero_model(self, k):
        data = make_dataset(n=37, d=3, k=k, seed=k)
        coeffs = ModelCoefficients.zeros(n_classes=k, n_features=3)
        assert abs(log_likelihood(coeffs, data) + 37 * np.log(k)) <= 1e-12 * 37 * np.log(k)

    def test_binary_form(self, two_class):
        rng = np.random.default_rng(5)
        coeffs = random_coefficients(rng, k=2, d=two_class.n_features)
        eta = coeffs.intercepts[0, 0] + two_class.features @ coeffs.betas[0, 0]
        y = (two_class.labels == 1).astype(float)
        direct = np.sum(y * eta - np.log1p(np.exp(eta)))
        np.testing.assert_allclose(log_likelihood(coeffs, two_class), direct, rtol=1e-12)

    def test_matches_true_class_probabilities(self):
        rng = np.random.default_rng(11)
        data = make_dataset(n=5, d=3, k=3, seed=11)
        coeffs = random_coefficients(rng, k=3, d=3)
        expected = sum(
            np.log(class_probabilities(coeffs, data.features[j])[data.labels[j] - 1])
            for j in range(5)
        )
        np.testing.assert_allclose(log_likelihood(coeffs, data), expected, rtol=1e-12)

    def test_permutation_invariance(self, three_class):
        rng = np.random.default_rng(3)
        coeffs = random_coefficients(rng, k=3, d=three_class.n_features)
        order = rng.permutation(three_class.n_samples)
        np.testing.assert_allclose(
            log_likelihood(coeffs, three_class.subset(order)),
            log_likelihood(coeffs, three_class),
            rtol=1e-12,
        )

    def test_studies_add_up(self, three_studies):
        rng = np.random.default_rng(4)
        coeffs = random_coefficients(rng, k=3, d=three_studies.n_features, n_studies=3)
        total = sum(
            log_likelihood(coeffs.study(m), three_studies.subset(three_studies.study_rows(m)).pooled())
            for m in (1, 2, 3)
        )
        np.testing.assert_allclose(log_likelihood(coeffs, three_studies), total, rtol=1e-12)

    def test_class_mismatch(self, three_class):
        coeffs = ModelCoefficients.zeros(n_classes=4, n_features=three_class.n_features)
        with pytest.raises(DimensionMismatchError):
            log_likelihood(coeffs, three_class)


def _finite_differences(coeffs, data, h=1e-5):
    intercepts = np.zeros_like(coeffs.intercepts)
    betas = np.zeros_like(coeffs.betas)

    def shifted(field, index, delta):
        values = {"intercepts": coeffs.intercepts.copy(), "betas": coeffs.betas.copy()}
        values[field][index] += delta
        return log_likelihood(ModelCoefficients(**values), data)

    for index in np.ndindex(*coeffs.intercepts.shape):
        intercepts[index] = (shifted("intercepts", index, h) - shifted("intercepts", index, -h)) / (2 * h)
    for index in np.ndindex(*coeffs.betas.shape):
        betas[index] = (shifted("betas", index, h) - shifted("betas", index, -h)) / (2 * h)
    return intercepts, betas


class TestNegativeGradient:
    @pytest.mark.parametrize("draw", range(100))
    def test_matches_finite_differences(self, draw):
        rng = np.random.default_rng(1000 + draw)
        k = int(rng.integers(2, 5))
        d = int(rng.integers(1, 5))
        n_studies = int(rng.integers(1, 3))
        data = make_dataset(n=30, d=d, k=k, seed=draw, n_studies=n_studies, informative=1)
        coeffs = random_coefficients(rng, k=k, d=d, n_studies=n_studies)

        gradient = negative_gradient(coeffs, data)
        fd_intercepts, fd_betas = _finite_differences(coeffs, data)
        # g = -dR/dbeta
        for analytic, numeric in ((gradient.intercepts, fd_intercepts), (gradient.coefficients, fd_betas)):
            error = np.abs(-analytic - numeric) / np.maximum(np.abs(numeric), 1.0)
            assert error.max() <= 1e-5

    def test_zero_column_has_zero_gradient(self, three_class):
        features = three_class.features.copy()
        features[:, 2] = 0.0
        data = three_class.model_copy(update={"features": features})
        rng = np.random.default_rng(8)
        gradient = negative_gradient(random_coefficients(rng, k=3, d=data.n_features), data)
        assert np.all(gradient.coefficients[:, :, 2] == 0.0)

    def test_balanced_binary_intercept_is_zero(self):
        rng = np.random.default_rng(9)
        data = ExpressionDataset(
            features=rng.standard_normal((40, 3)), labels=np.repeat([1, 2], 20)
        )
        gradient = negative_gradient(ModelCoefficients.zeros(2, 3), data)
        assert abs(gradient.intercepts[0, 0]) <= 1e-12
