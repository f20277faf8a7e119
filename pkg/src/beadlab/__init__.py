"""Sequential experiment design for weld-bead process mapping.

Two strategies map process parameters to a scalar bead-quality response:
a balanced orthogonal-array screen with an additive level-effects
predictor, and a Gaussian-process surrogate seeded by Latin hypercube
sampling and grown by uncertainty-driven acquisition. Campaigns run fully
simulated against synthetic surfaces or live with operator-entered
measurements, and everything is reproducible from a single seed.
"""

from .active_learning import AcquisitionResult, AlConfig, CampaignTrace, TraceEntry
from .campaign import (
    CampaignState,
    ComparisonReport,
    compare,
    evaluate,
    export_csv,
    init_campaign,
    load,
    next_suggestion,
    record_result,
    save,
)
from .design_space import (
    DesignPoint,
    DesignSpace,
    Factor,
    RealPoint,
    default_space,
    enumerate_grid,
    select_test_set,
    to_real,
)
from .errors import BeadLabError
from .gpr import FitReport, GprModel, GridSpec, KernelParams
from .oracle import OracleSpec, SyntheticOracle
from .response import BeadGeometry, MetricPair, composite_response, r2_score, rmse
from .sampling import LhsDesign, lhs, lhs_maximin, snap_to_grid
from .taguchi import (
    FactorAnalysis,
    MainEffectsModel,
    OrthogonalArray,
    analyze_factors,
    build_orthogonal_array,
    fit_main_effects,
    predict_main_effects,
)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionResult",
    "AlConfig",
    "BeadGeometry",
    "BeadLabError",
    "CampaignState",
    "CampaignTrace",
    "ComparisonReport",
    "DesignPoint",
    "DesignSpace",
    "Factor",
    "FactorAnalysis",
    "FitReport",
    "GprModel",
    "GridSpec",
    "KernelParams",
    "LhsDesign",
    "MainEffectsModel",
    "MetricPair",
    "OracleSpec",
    "OrthogonalArray",
    "RealPoint",
    "SyntheticOracle",
    "TraceEntry",
    "analyze_factors",
    "build_orthogonal_array",
    "compare",
    "composite_response",
    "default_space",
    "enumerate_grid",
    "evaluate",
    "export_csv",
    "fit_main_effects",
    "init_campaign",
    "lhs",
    "lhs_maximin",
    "load",
    "next_suggestion",
    "predict_main_effects",
    "r2_score",
    "record_result",
    "rmse",
    "save",
    "select_test_set",
    "snap_to_grid",
    "to_real",
]
