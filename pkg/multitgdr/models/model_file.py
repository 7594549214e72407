from pydantic import BaseModel
from typing import List, Literal, Optional

from .tgdr_config import TgdrConfig

SCHEMA_VERSION = 1


class StandardizationRecord(BaseModel):
    mean: List[float]
    scale: List[float]


class PooledRecord(BaseModel):
    mu_intercepts: List[float]
    mu: List[List[float]]
    sigma2: List[List[float]]
    underdetermined: bool
    uniform_weights: bool
    paper_literal_variance: bool


class BaggingRecord(BaseModel):
    n_bootstrap: int
    n_failed: int
    frequencies: List[float]
    cutoff: Optional[float] = None


class ModelFile(BaseModel):
    """On-disk model document.

    `intercepts` is studies x (K-1) and `betas` studies x (K-1) x D; pooled models
    keep the per-study source coefficients here and the overall ones in `pooled`.
    """

    schema_version: int = SCHEMA_VERSION
    mode: Literal["tgdr", "multi", "meta", "pooled", "bagged"]
    classes: List[str]
    reference_class: str
    studies: List[str]
    feature_names: List[str]
    standardization: Optional[StandardizationRecord] = None
    intercepts: List[List[float]]
    betas: List[List[List[float]]]
    pooled: Optional[PooledRecord] = None
    bagging: Optional[BaggingRecord] = None
    config: TgdrConfig
    seed: int
