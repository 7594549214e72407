import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from typing import List, Optional, Sequence

from .arrays import FloatArray, IntArray


class ExpressionDataset(BaseModel):
    """n samples x D features with class labels in 1..K and study ids in 1..M.

    Class K (the last entry of `class_names`) is the reference class.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    features: FloatArray
    labels: IntArray
    study_ids: Optional[IntArray] = None
    feature_names: Optional[List[str]] = None
    class_count: Optional[int] = None
    study_count: Optional[int] = None
    class_names: Optional[List[str]] = None
    study_names: Optional[List[str]] = None

    @model_validator(mode="before")
    @classmethod
    def fill_defaults(cls, values):
        if not isinstance(values, dict):
            return values
        values = dict(values)
        features = np.asarray(values.get("features"), dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        values["features"] = features
        labels = np.asarray(values.get("labels"))
        n = features.shape[0]
        d = features.shape[1] if features.ndim == 2 else 0

        if values.get("study_ids") is None:
            values["study_ids"] = np.ones(n, dtype=np.int64)
        if values.get("feature_names") is None:
            values["feature_names"] = [f"X{i + 1}" for i in range(d)]
        if values.get("class_count") is None:
            if values.get("class_names") is not None:
                values["class_count"] = len(values["class_names"])
            else:
                values["class_count"] = max(int(labels.max()) if labels.size else 0, 2)
        if values.get("study_count") is None:
            if values.get("study_names") is not None:
                values["study_count"] = len(values["study_names"])
            else:
                values["study_count"] = int(np.max(values["study_ids"])) if n else 1
        if values.get("class_names") is None:
            values["class_names"] = [str(k + 1) for k in range(values["class_count"])]
        if values.get("study_names") is None:
            values["study_names"] = [str(m + 1) for m in range(values["study_count"])]
        return values

    @model_validator(mode="after")
    def check_invariants(self):
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        n, d = self.features.shape
        if n < 1 or d < 1:
            raise ValueError(f"dataset needs n >= 1 and D >= 1, got n={n}, D={d}")
        if self.labels.shape != (n,):
            raise ValueError(f"labels length {self.labels.shape} does not match n={n}")
        if self.study_ids.shape != (n,):
            raise ValueError(f"study_ids length {self.study_ids.shape} does not match n={n}")
        if len(self.feature_names) != d:
            raise ValueError(f"{len(self.feature_names)} feature names for D={d}")
        if self.class_count < 2:
            raise ValueError("at least two classes are required")
        if self.study_count < 1:
            raise ValueError("at least one study is required")
        if len(self.class_names) != self.class_count:
            raise ValueError("class_names does not match class_count")
        if len(self.study_names) != self.study_count:
            raise ValueError("study_names does not match study_count")
        if self.labels.min() < 1 or self.labels.max() > self.class_count:
            raise ValueError(f"labels must lie in 1..{self.class_count}")
        if self.study_ids.min() < 1 or self.study_ids.max() > self.study_count:
            raise ValueError(f"study ids must lie in 1..{self.study_count}")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain non-finite values")
        return self

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def indicators(self) -> np.ndarray:
        """Y_kj for k = 1..K-1 as an n x (K-1) matrix; the reference class is all zeros."""
        onehot = np.zeros((self.n_samples, self.class_count - 1))
        rows = np.flatnonzero(self.labels < self.class_count)
        onehot[rows, self.labels[rows] - 1] = 1.0
        return onehot

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels - 1, minlength=self.class_count)

    def subset(self, indices: Sequence[int]) -> "ExpressionDataset":
        """Rows by index, keeping K, M and all names."""
        indices = np.asarray(indices, dtype=np.int64)
        return self.model_copy(
            update={
                "features": self.features[indices],
                "labels": self.labels[indices],
                "study_ids": self.study_ids[indices],
            }
        )

    def select_features(self, mask: np.ndarray) -> "ExpressionDataset":
        mask = np.asarray(mask, dtype=bool)
        return self.model_copy(
            update={
                "features": self.features[:, mask],
                "feature_names": [n for n, keep in zip(self.feature_names, mask) if keep],
            }
        )

    def study_rows(self, study: int) -> np.ndarray:
        """Row indices of study `study` (1-based)."""
        return np.flatnonzero(self.study_ids == study)

    def pooled(self) -> "ExpressionDataset":
        """All samples treated as one study."""
        return self.model_copy(
            update={
                "study_ids": np.ones(self.n_samples, dtype=np.int64),
                "study_count": 1,
                "study_names": ["pooled"],
            }
        )
