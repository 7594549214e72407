import logging
from itertools import combinations
from typing import Tuple

import numpy as np

from ..config import DEGENERATE_PROBABILITY
from ..errors import MissingClassError
from ..models import ExpressionDataset, PairwiseModel, TgdrConfig
from .likelihood import probability_matrix
from .solver import fit_path, labels_from_probabilities

logger = logging.getLogger(__name__)


def pair_dataset(data: ExpressionDataset, a: int, b: int) -> ExpressionDataset:
    """Samples of classes a and b relabelled 1 and 2 (b is the reference)."""
    rows = np.flatnonzero((data.labels == a) | (data.labels == b))
    labels = np.where(data.labels[rows] == a, 1, 2)
    if np.unique(labels).shape[0] < 2:
        raise MissingClassError(
            f"classes {data.class_names[a - 1]} and {data.class_names[b - 1]} "
            "are not both present"
        )
    return ExpressionDataset(
        features=data.features[rows],
        labels=labels,
        feature_names=data.feature_names,
        class_names=[data.class_names[a - 1], data.class_names[b - 1]],
    )


def fit_pairwise(data: ExpressionDataset, config: TgdrConfig) -> PairwiseModel:
    """One binary TGDR fit per class pair, each on that pair's samples only."""
    binary = config.model_copy(update={"tau_per_class": None})
    pairs = list(combinations(range(1, data.class_count + 1), 2))
    members = []
    for a, b in pairs:
        path = fit_path(pair_dataset(data, a, b), binary)
        members.append(path.final.coefficients)
        logger.debug(
            f"Pair ({a}, {b}): {int(path.final.active.sum())} active features"
        )
    model = PairwiseModel(n_classes=data.class_count, pairs=pairs, members=members, config=binary)
    logger.info(
        f"Fitted {len(pairs)} pairwise classifiers, {int(model.active_mask().sum())} features in total"
    )
    return model


def couple_probabilities(pairwise: np.ndarray) -> np.ndarray:
    """Class probabilities from an n x K x K array r[:, a, b] = P(a | a or b).

    p_a is proportional to 1 / (sum_{b != a} 1 / r_ab - (K - 2)).
    """
    n, k, _ = pairwise.shape
    r = np.clip(pairwise, DEGENERATE_PROBABILITY, 1.0)
    off_diagonal = ~np.eye(k, dtype=bool)
    inverse_sum = np.where(off_diagonal[None, :, :], 1.0 / r, 0.0).sum(axis=2)
    scores = 1.0 / (inverse_sum - (k - 2))
    return scores / scores.sum(axis=1, keepdims=True)


def predict_pairwise(model: PairwiseModel, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Labels and coupled probabilities from the pairwise classifiers."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features[None, :]
    pairwise = np.full((features.shape[0], model.n_classes, model.n_classes), 0.5)
    for (a, b), member in zip(model.pairs, model.members):
        r_ab = probability_matrix(member, features)[:, 0]
        pairwise[:, a - 1, b - 1] = r_ab
        pairwise[:, b - 1, a - 1] = 1.0 - r_ab
    probabilities = couple_probabilities(pairwise)
    return labels_from_probabilities(probabilities), probabilities
