import numpy as np
import pytest

from multitgdr.models import ExpressionDataset, ModelCoefficients, TgdrConfig


def make_dataset(n=60, d=5, k=3, seed=0, n_studies=1, effect=1.5, informative=2):
    """Multinomial data whose first `informative` features drive the classes."""
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, d))
    logits = np.zeros((n, k))
    for c in range(k - 1):
        j = c % informative
        logits[:, c] = effect * (1 if c % 2 == 0 else -1) * features[:, j]
    logits -= logits.max(axis=1, keepdims=True)
    probabilities = np.exp(logits)
    probabilities /= probabilities.sum(axis=1, keepdims=True)
    cumulative = np.cumsum(probabilities, axis=1)
    labels = 1 + np.sum(rng.random(n)[:, None] > cumulative[:, :-1], axis=1)
    # every class present in every study, twice when the study is large enough
    study_ids = np.repeat(np.arange(1, n_studies + 1), int(np.ceil(n / n_studies)))[:n]
    for m in range(1, n_studies + 1):
        forced = np.flatnonzero(study_ids == m)[: 2 * k]
        labels[forced] = np.arange(forced.size) % k + 1
    return ExpressionDataset(
        features=features,
        labels=labels,
        study_ids=study_ids,
        class_names=[f"c{i + 1}" for i in range(k)],
        study_names=[f"s{m + 1}" for m in range(n_studies)],
    )


def random_coefficients(rng, k=3, d=4, n_studies=1, scale=0.7):
    return ModelCoefficients(
        intercepts=scale * rng.standard_normal((n_studies, k - 1)),
        betas=scale * rng.standard_normal((n_studies, k - 1, d)),
    )


@pytest.fixture
def three_class():
    return make_dataset(n=90, d=6, k=3, seed=1)


@pytest.fixture
def two_class():
    return make_dataset(n=80, d=5, k=2, seed=2)


@pytest.fixture
def three_studies():
    return make_dataset(n=90, d=6, k=3, seed=3, n_studies=3)


@pytest.fixture
def quick_config():
    return TgdrConfig(tau=0.8, max_steps=30, delta_v=0.01)
