import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from typing import Optional

from .arrays import FloatArray


class Standardization(BaseModel):
    """Per-feature centre and scale captured on training data."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mean: FloatArray
    scale: FloatArray

    @model_validator(mode="after")
    def check_shapes(self):
        if self.mean.shape != self.scale.shape or self.mean.ndim != 1:
            raise ValueError("mean and scale must be vectors of equal length")
        if np.any(self.scale <= 0) or not np.all(np.isfinite(self.scale)):
            raise ValueError("scale entries must be positive and finite")
        return self

    @classmethod
    def fit(cls, features: np.ndarray) -> "Standardization":
        mean = features.mean(axis=0)
        scale = features.std(axis=0)
        # constant columns stay at zero after centring
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean=mean, scale=scale)

    @classmethod
    def identity(cls, n_features: int) -> "Standardization":
        return cls(mean=np.zeros(n_features), scale=np.ones(n_features))

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mean) / self.scale

    def select(self, mask: np.ndarray) -> "Standardization":
        return Standardization(mean=self.mean[mask], scale=self.scale[mask])

    def expand(self, mask: np.ndarray) -> "Standardization":
        """Inverse of `select`: identity transform on features outside `mask`."""
        mean = np.zeros(mask.shape[0])
        scale = np.ones(mask.shape[0])
        mean[mask] = self.mean
        scale[mask] = self.scale
        return Standardization(mean=mean, scale=scale)


class ModelCoefficients(BaseModel):
    """Intercepts (S x (K-1)) and coefficients (S x (K-1) x D), S = 1 outside meta mode."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    intercepts: FloatArray
    betas: FloatArray
    standardization: Optional[Standardization] = None

    @model_validator(mode="after")
    def check_shapes(self):
        if self.intercepts.ndim != 2 or self.betas.ndim != 3:
            raise ValueError("intercepts must be 2-d and betas 3-d")
        if self.betas.shape[:2] != self.intercepts.shape:
            raise ValueError(
                f"betas {self.betas.shape} do not match intercepts {self.intercepts.shape}"
            )
        if not (np.all(np.isfinite(self.intercepts)) and np.all(np.isfinite(self.betas))):
            raise ValueError("coefficients must be finite")
        if self.standardization is not None and self.standardization.mean.shape[0] != self.n_features:
            raise ValueError("standardization length does not match the feature count")
        return self

    @classmethod
    def zeros(
        cls,
        n_classes: int,
        n_features: int,
        n_studies: int = 1,
        standardization: Optional[Standardization] = None,
    ) -> "ModelCoefficients":
        return cls(
            intercepts=np.zeros((n_studies, n_classes - 1)),
            betas=np.zeros((n_studies, n_classes - 1, n_features)),
            standardization=standardization,
        )

    @property
    def n_studies(self) -> int:
        return self.betas.shape[0]

    @property
    def n_classes(self) -> int:
        return self.betas.shape[1] + 1

    @property
    def n_features(self) -> int:
        return self.betas.shape[2]

    def active_mask(self, tolerance: float) -> np.ndarray:
        """Features with any |coefficient| above `tolerance` in any study or class block."""
        return np.any(np.abs(self.betas) > tolerance, axis=(0, 1))

    def study(self, study: int) -> "ModelCoefficients":
        """Single-study view for study `study` (1-based)."""
        index = study - 1
        return ModelCoefficients(
            intercepts=self.intercepts[index : index + 1],
            betas=self.betas[index : index + 1],
            standardization=self.standardization,
        )

    def expand(self, mask: np.ndarray) -> "ModelCoefficients":
        """Lift coefficients fitted on features[mask] back to the full feature set."""
        mask = np.asarray(mask, dtype=bool)
        betas = np.zeros(self.betas.shape[:2] + (mask.shape[0],))
        betas[:, :, mask] = self.betas
        standardization = None
        if self.standardization is not None:
            standardization = self.standardization.expand(mask)
        return ModelCoefficients(
            intercepts=self.intercepts.copy(), betas=betas, standardization=standardization
        )


class PooledModel(BaseModel):
    """Overall coefficients from the weighted meta-regression of fitted study logits.

    `mu_intercepts` is (K-1,), `mu` is (K-1) x D and `sigma2` is (K-1) x M: one
    variance per class contrast and study.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mu_intercepts: FloatArray
    mu: FloatArray
    sigma2: FloatArray
    source: ModelCoefficients
    underdetermined: bool = False
    uniform_weights: bool = False
    paper_literal_variance: bool = False

    @model_validator(mode="after")
    def check_values(self):
        if self.mu.ndim != 2 or self.mu_intercepts.shape != (self.mu.shape[0],):
            raise ValueError("mu must be (K-1) x D with one intercept per contrast")
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.mu_intercepts))):
            raise ValueError("pooled coefficients must be finite")
        if np.any(self.sigma2 < 0):
            raise ValueError("study variances must be non-negative")
        return self

    @property
    def standardization(self) -> Optional[Standardization]:
        return self.source.standardization

    def as_coefficients(self) -> ModelCoefficients:
        """The pooled model as a single-study coefficient set."""
        return ModelCoefficients(
            intercepts=self.mu_intercepts[None, :],
            betas=self.mu[None, :, :],
            standardization=self.source.standardization,
        )
