from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import Dict, List, Optional, Tuple

from .arrays import FloatArray, IntArray
from .coefficients import ModelCoefficients
from .tgdr_config import TgdrConfig


class Fitter(str, Enum):
    TGDR = "tgdr"
    META = "meta"


class CvCriterion(str, Enum):
    """What the best (tau, k) minimises first; the other metric breaks ties."""

    ERROR = "error"
    GBS = "gbs"


class EvaluationReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    error_pct: float = Field(ge=0.0, le=100.0)
    gbs: float = Field(ge=0.0, le=1.0)
    confusion: IntArray
    n: int

    @model_validator(mode="after")
    def check_confusion(self):
        if int(self.confusion.sum()) != self.n:
            raise ValueError("confusion counts must add up to n")
        return self


class CvGridPoint(BaseModel):
    tau: float
    k: int
    error_pct: float
    gbs: float


class CvResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: List[CvGridPoint]
    best_tau: float
    best_k: int
    best_error_pct: float
    best_gbs: float
    mean_fold_error_pct: float
    folds: int
    fold_assignment: IntArray
    oof_probabilities: FloatArray
    fitter: Fitter
    seed: int
    criterion: CvCriterion = CvCriterion.ERROR

    def best_point(self) -> CvGridPoint:
        return CvGridPoint(
            tau=self.best_tau, k=self.best_k, error_pct=self.best_error_pct, gbs=self.best_gbs
        )


class CutoffResult(BaseModel):
    cutoff: float
    features_kept: int
    model_size: int
    error_pct: float
    gbs: float


class BaggingReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n_bootstrap: int
    n_failed: int = 0
    frequencies: FloatArray
    selection_counts: IntArray
    member_models: List[ModelCoefficients]
    config: TgdrConfig
    fitter: Fitter
    seed: int
    cutoff: Optional[float] = None
    final_model: Optional[ModelCoefficients] = None
    cutoff_table: List[CutoffResult] = []

    @model_validator(mode="after")
    def check_frequencies(self):
        if np.any(self.frequencies < 0) or np.any(self.frequencies > 1):
            raise ValueError("bagging frequencies must lie in [0, 1]")
        return self

    @property
    def n_members(self) -> int:
        return self.n_bootstrap - self.n_failed


class CorrelationMode(str, Enum):
    INDEPENDENT = "independent"
    EXAMPLE2 = "example2"


class SimDesign(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_train: int = Field(100, ge=1)
    n_test: int = Field(200, ge=1)
    d: int = Field(100, ge=8)
    correlation_mode: CorrelationMode = CorrelationMode.INDEPENDENT
    seed: int = Field(0, ge=0)


class ReplicateResult(BaseModel):
    replicate: int
    failed: bool = False
    error: Optional[str] = None
    selected: Dict[str, bool] = {}
    frequencies: Dict[str, float] = {}
    tau: Optional[float] = None
    k: Optional[int] = None
    cv_error_pct: Optional[float] = None
    raw_size: Optional[int] = None
    raw_error_pct: Optional[float] = None
    cutoff_sizes: Dict[str, int] = {}
    cutoff_errors: Dict[str, float] = {}


class Table1Row(BaseModel):
    method: str
    selection_pct: Dict[str, Optional[float]]
    average_bf_pct: Dict[str, Optional[float]]
    average_size: float
    average_error_pct: float
    average_cv_error_pct: Optional[float] = None


class Table1Summary(BaseModel):
    design: SimDesign
    n_datasets: int
    rows: List[Table1Row]
    replicates: List[ReplicateResult]
    excluded: List[int]
    bayes_error_pct: Optional[float] = None


class MetaCheckResult(BaseModel):
    """One seed of the multi-study workflow: CV-tuned meta and pooled fits,
    scored on a fresh draw of studies."""

    seed: int
    meta_tau: float
    meta_k: int
    selected: List[str]
    inconsistent_selected: List[str]
    consistent_selected: List[str]
    multi_tau: float
    multi_k: int
    multi_size: int
    multi_error_pct: float
    pooled_error_pct: float
    no_information_pct: float

    @property
    def margin_pct(self) -> float:
        return self.no_information_pct - self.multi_error_pct


class PairwiseModel(BaseModel):
    """K(K-1)/2 binary fits; `members[i]` separates classes `pairs[i] = (a, b)`
    with a < b, class a taking the first (non-reference) column."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n_classes: int
    pairs: List[Tuple[int, int]]
    members: List[ModelCoefficients]
    config: TgdrConfig

    @model_validator(mode="after")
    def check_pairs(self):
        if len(self.pairs) != self.n_classes * (self.n_classes - 1) // 2:
            raise ValueError("need one member per class pair")
        if len(self.members) != len(self.pairs):
            raise ValueError("members and pairs differ in length")
        return self

    def active_mask(self) -> np.ndarray:
        """Union of the members' active sets."""
        masks = [m.active_mask(self.config.selection_tolerance) for m in self.members]
        return np.any(np.stack(masks), axis=0)


class FitReport(BaseModel):
    """Training-data summary written next to a fitted model."""

    mode: str
    steps: int
    terminal_reason: str
    log_likelihood: float
    training_error_pct: float
    training_gbs: float
    n_active: int
    active_features: List[str]


class PairReport(BaseModel):
    classes: Tuple[str, str]
    n_active: int
    training_error_pct: float


class PairwiseReport(BaseModel):
    pairs: List[PairReport]
    n_active: int
    training_error_pct: float
    training_gbs: float
    multiclass_n_active: int
    multiclass_error_pct: float
