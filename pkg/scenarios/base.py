import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from eptrap.errors import EptrapError
from eptrap.observables import ObservableSeries
from eptrap.sweeps import Branch

logger = logging.getLogger(__name__)

PASS = "PASS"
FAIL = "FAIL"
SYSTEM_ERROR = "SYSTEM_ERROR"

# =============================================================================
# PYDANTIC MODELS
# =============================================================================


class AssertionOutcome(BaseModel):
    """One scenario-specific check"""

    name: str = Field(description="Short identifier of the check")
    passed: bool = Field(description="Whether the check held")
    detail: str = Field(description="Measured quantity behind the verdict")


class ScenarioResult(BaseModel):
    """Result bundle of one canned experiment"""

    scenario: str = Field(description="Registered scenario name")
    status: str = Field(description="PASS, FAIL or SYSTEM_ERROR")
    message: str = Field(description="Brief summary")
    parameters: Dict[str, Any] = Field(default_factory=dict, description="Scenario config as run")
    tolerances: Dict[str, Any] = Field(default_factory=dict, description="Tolerances as run")
    assertions: List[AssertionOutcome] = Field(default_factory=list, description="Check outcomes")
    series: List[ObservableSeries] = Field(default_factory=list, description="Intermediate series")
    branch_rows: List[Dict[str, Any]] = Field(
        default_factory=list, description="Branch table rows (param, branch, re_z, im_z, gamma, a_k, r_k)"
    )
    reports: Dict[str, Any] = Field(default_factory=dict, description="Structured side reports")

    @property
    def failed(self) -> List[AssertionOutcome]:
        return [a for a in self.assertions if not a.passed]


class ScenarioReport(BaseModel):
    """Aggregate over several scenarios"""

    overall_status: str = Field(description="PASS, FAIL or SYSTEM_ERROR")
    results: List[ScenarioResult] = Field(description="Per-scenario results in run order")
    summary: str = Field(description="One-line verdict")


# =============================================================================
# HELPERS
# =============================================================================


def check(name: str, passed: bool, detail: str) -> AssertionOutcome:
    return AssertionOutcome(name=name, passed=bool(passed), detail=detail)


def branch_table(branches: Sequence[Branch]) -> List[Dict[str, Any]]:
    """Long-format rows, sample-major, branch-minor"""
    rows = []
    for s, param in enumerate(branches[0].samples):
        p = complex(param)
        for b in branches:
            z = complex(b.values[s])
            rows.append(
                {
                    "param": p.real if p.imag == 0 else str(p),
                    "branch": b.index,
                    "re_z": z.real,
                    "im_z": z.imag,
                    "gamma": -2.0 * z.imag,
                    "a_k": float(b.a_k[s]),
                    "r_k": float(b.r_k[s]),
                }
            )
    return rows


def finite(x: Sequence[float], values: Sequence[float]):
    """Drop samples whose value is not finite"""
    x, values = np.asarray(x, dtype=float), np.asarray(values, dtype=float)
    keep = np.isfinite(values)
    return [float(v) for v in x[keep]], [float(v) for v in values[keep]]


def finish(
    scenario: str,
    parameters: Dict[str, Any],
    tolerances: Dict[str, Any],
    assertions: List[AssertionOutcome],
    series: Optional[List[ObservableSeries]] = None,
    reports: Optional[Dict[str, Any]] = None,
    branch_rows: Optional[List[Dict[str, Any]]] = None,
) -> ScenarioResult:
    failed = [a.name for a in assertions if not a.passed]
    if failed:
        status = FAIL
        message = f"VIOLATION: {len(failed)} of {len(assertions)} checks failed ({', '.join(failed)})"
    else:
        status = PASS
        message = f"PASSED: all {len(assertions)} checks held"
    return ScenarioResult(
        scenario=scenario,
        status=status,
        message=message,
        parameters=parameters,
        tolerances=tolerances,
        assertions=assertions,
        series=series or [],
        branch_rows=branch_rows or [],
        reports=reports or {},
    )


def system_error(
    scenario: str, parameters: Dict[str, Any], tolerances: Dict[str, Any], error: Exception
) -> ScenarioResult:
    reason = error.one_line() if isinstance(error, EptrapError) else f"error: {error}"
    logger.error(f"❌ Scenario {scenario} failed: {reason}")
    return ScenarioResult(
        scenario=scenario,
        status=SYSTEM_ERROR,
        message=f"SYSTEM ERROR: {reason}",
        parameters=parameters,
        tolerances=tolerances,
    )
