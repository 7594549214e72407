import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import List, Optional

from .. import config as defaults
from ..errors import InvalidConfigError


class TgdrConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    tau: float = Field(defaults.DEFAULT_TAU, ge=0.0, le=1.0)
    delta_v: float = Field(defaults.DEFAULT_DELTA_V, gt=0.0)
    max_steps: int = Field(defaults.DEFAULT_MAX_STEPS, ge=0)
    tau_per_class: Optional[List[float]] = None
    standardize: bool = True
    seed: int = Field(0, ge=0, lt=2**64)
    selection_tolerance: float = Field(defaults.SELECTION_TOLERANCE, gt=0.0)
    snapshot_stride: int = Field(1, ge=1)
    paper_literal_variance: bool = False

    @field_validator("tau_per_class")
    @classmethod
    def check_class_taus(cls, value):
        if value is not None:
            for tau in value:
                if not 0.0 <= tau <= 1.0:
                    raise ValueError(f"per-class tau {tau} outside [0, 1]")
        return value

    @model_validator(mode="after")
    def check_finite(self):
        if not np.isfinite(self.delta_v):
            raise ValueError("delta_v must be finite")
        return self

    def class_taus(self, n_contrasts: int) -> np.ndarray:
        """One threshold per class contrast (K-1 of them)."""
        if self.tau_per_class is None:
            return np.full(n_contrasts, self.tau)
        if len(self.tau_per_class) != n_contrasts:
            raise InvalidConfigError(
                f"tau_per_class has {len(self.tau_per_class)} entries, expected {n_contrasts}"
            )
        return np.asarray(self.tau_per_class, dtype=np.float64)
