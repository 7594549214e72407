import bisect
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from typing import List

from .arrays import BoolArray, FloatArray
from .coefficients import ModelCoefficients
from .tgdr_config import TgdrConfig


class TerminalReason(str, Enum):
    MAX_STEPS = "max_steps"
    ZERO_GRADIENT = "zero_gradient"


class GradientBlocks(BaseModel):
    """Negative gradients -dR/dbeta, per study: intercepts S x (K-1), coefficients S x (K-1) x D."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    intercepts: FloatArray
    coefficients: FloatArray


class ThresholdVector(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    f: BoolArray
    per_class: BoolArray

    @model_validator(mode="after")
    def check_combined(self):
        if not np.array_equal(self.f, self.per_class.any(axis=0)):
            raise ValueError("f must be the per-feature maximum over class blocks")
        return self


class PathStep(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    step: int
    v: float
    coefficients: ModelCoefficients
    active: BoolArray
    log_likelihood: float


class RegularizationPath(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    steps: List[PathStep]
    config: TgdrConfig
    terminal_reason: TerminalReason

    @model_validator(mode="after")
    def check_order(self):
        indices = [s.step for s in self.steps]
        if not indices or indices[0] != 0:
            raise ValueError("a path starts at step 0")
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("path steps must be strictly increasing")
        return self

    @property
    def final(self) -> PathStep:
        return self.steps[-1]

    @property
    def step_indices(self) -> List[int]:
        return [s.step for s in self.steps]

    def at(self, k: int) -> PathStep:
        """Latest recorded snapshot at or before step k (the final one past the end)."""
        position = bisect.bisect_right(self.step_indices, k) - 1
        return self.steps[max(position, 0)]

    def coefficients_at(self, k: int) -> ModelCoefficients:
        return self.at(k).coefficients
