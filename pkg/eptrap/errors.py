from typing import Any, List, Optional, Tuple

# =============================================================================
# ERROR HIERARCHY
# =============================================================================


class EptrapError(Exception):
    """Base error. `reason` is the machine-readable slug printed by the CLI."""

    reason = "error"
    exit_code = 2

    def __init__(self, message: str = "", **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def one_line(self) -> str:
        """Single-line report for standard error"""
        text = " ".join(str(self.message).split())
        return f"{self.reason}: {text}" if text else self.reason


class ConfigError(EptrapError):
    reason = "config-error"
    exit_code = 1


class NumericalError(EptrapError):
    reason = "numerical-error"
    exit_code = 2


class DimensionError(NumericalError):
    reason = "dimension-error"


class ConvergenceError(NumericalError):
    """QR iteration ran out of budget. Carries the partial Schur form."""

    reason = "no-convergence"

    def __init__(self, message: str, partial_schur=None, unitary=None, **details):
        super().__init__(message, **details)
        self.partial_schur = partial_schur
        self.unitary = unitary


class IllConditionedError(NumericalError):
    reason = "ill-conditioned"

    def __init__(self, message: str, indices: Optional[List[Tuple[int, int]]] = None):
        super().__init__(message)
        self.indices = list(indices or [])


class NotAnEPError(NumericalError):
    reason = "not-an-EP"


class NoEPFoundError(NumericalError):
    reason = "no-EP-found"

    def __init__(self, message: str, best_point=None, best_gap: float = float("nan")):
        super().__init__(message)
        self.best_point = best_point
        self.best_gap = best_gap


class DomainError(NumericalError):
    reason = "domain-error"


class PoleError(NumericalError):
    reason = "pole"


class GridTooCoarseError(NumericalError):
    reason = "grid-too-coarse"


class StepSizeError(NumericalError):
    reason = "step-size"


class ContractError(NumericalError):
    reason = "contract"


class SweepError(NumericalError):
    """A model failed to build or diagonalize at one sweep sample."""

    reason = "sweep-sample"

    def __init__(self, message: str, sample_index: int, sample_value=None):
        super().__init__(message)
        self.sample_index = sample_index
        self.sample_value = sample_value
