from .orchestrator import ScenarioRunner
from .base import (
    PASS,
    FAIL,
    SYSTEM_ERROR,
    AssertionOutcome,
    ScenarioReport,
    ScenarioResult,
    branch_table,
)

__all__ = [
    "ScenarioRunner",
    "PASS",
    "FAIL",
    "SYSTEM_ERROR",
    "AssertionOutcome",
    "ScenarioResult",
    "ScenarioReport",
    "branch_table",
]
