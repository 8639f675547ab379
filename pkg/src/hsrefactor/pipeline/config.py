"""Pipeline bounds and switches."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from hsrefactor.llm import DEFAULT_CONTEXT_BUDGET
from hsrefactor.toolchain import ToolConfig


@dataclass(frozen=True)
class PipelineConfig:
    max_retries: int = 3
    max_debug_loops: int = 3
    max_candidate_retries: int = 1
    cc_hotspot_threshold: int = 5
    verifier_opinions: bool = True
    strict_non_regression: bool = True
    max_tokens: int = 4096
    context_budget: int = DEFAULT_CONTEXT_BUDGET
    artifact_dir: Path = Path("artifacts")
    store_dir: Path = Path("store")
    tools: ToolConfig = field(default_factory=ToolConfig)

    def __post_init__(self):
        for name in ("max_retries", "max_debug_loops", "cc_hotspot_threshold", "max_tokens", "context_budget"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.max_candidate_retries < 0:
            raise ValueError("max_candidate_retries must be non-negative")

    def fingerprint(self) -> dict:
        """Settings that influence a run's result; output locations are left out."""
        data = dataclasses.asdict(self)
        data.pop("artifact_dir")
        data.pop("store_dir")
        return data
