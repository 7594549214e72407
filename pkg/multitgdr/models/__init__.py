from .coefficients import ModelCoefficients, PooledModel, Standardization
from .dataset import ExpressionDataset
from .model_file import ModelFile, SCHEMA_VERSION
from .path import GradientBlocks, PathStep, RegularizationPath, TerminalReason, ThresholdVector
from .reports import (
    BaggingReport,
    CorrelationMode,
    CutoffResult,
    CvCriterion,
    CvGridPoint,
    CvResult,
    EvaluationReport,
    FitReport,
    Fitter,
    MetaCheckResult,
    PairReport,
    PairwiseModel,
    PairwiseReport,
    ReplicateResult,
    SimDesign,
    Table1Row,
    Table1Summary,
)
from .tgdr_config import TgdrConfig
