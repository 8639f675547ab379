"""Control-flow graphs, cyclomatic complexity and feature metrics."""

from hsrefactor.metrics.cfg import (
    CfgNode,
    ControlFlowGraph,
    InvalidCfg,
    NodeKind,
    build_cfg,
    cyclomatic_complexity,
    mccabe,
)
from hsrefactor.metrics.complexity import (
    ComplexityScore,
    decision_point_cc,
    function_complexity,
    total_complexity,
)
from hsrefactor.metrics.features import FeatureCount, feature_count
from hsrefactor.metrics.size import SizeClass, classify_size

__all__ = [
    "CfgNode", "ComplexityScore", "ControlFlowGraph", "FeatureCount", "InvalidCfg",
    "NodeKind", "SizeClass", "build_cfg", "classify_size", "cyclomatic_complexity",
    "decision_point_cc", "feature_count", "function_complexity", "mccabe", "total_complexity",
]
