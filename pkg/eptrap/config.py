import math
from typing import Any, Dict, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ConfigError

# =============================================================================
# TOLERANCES
# =============================================================================


class Tolerances(BaseModel):
    """Every numerical tolerance used across eptrap, with its default"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    eig_tol: float = Field(default=1e-10, description="Eigen-residual bound relative to ‖H‖_F")
    degeneracy_gap: float = Field(
        default=1e-8, description="Eigenvalue separation below which a pair is EP-flagged, relative to ‖H‖_F"
    )
    max_qr_iters_factor: int = Field(default=30, description="QR budget is this factor times n²")
    jordan_rank_tol: float = Field(
        default=1e-6, description="Singular values below this fraction of σ_max count as null directions"
    )
    jordan_tol: float = Field(default=1e-8, description="Accepted Jordan defect residual relative to ‖H‖_F")
    overlap_floor: float = Field(default=0.5, description="Minimum c-product overlap between matched steps")
    ambiguity_tol: float = Field(
        default=1e-6, description="Two assignments within this total overlap are flagged ambiguous"
    )
    ep_gap_tol: float = Field(
        default=1e-8, description="Accepted EP gap |z1 - z2| relative to max(‖H‖_F, 1)"
    )
    phase_tol: float = Field(default=1e-3, description="Phase restoration tolerance in radians")
    unitarity_tol: float = Field(default=1e-8, description="Bound on ‖S†S - I‖")
    lapse_tol: float = Field(default=0.1, description="Allowed deviation of a phase lapse from -π")
    max_phase_step: float = Field(
        default=math.pi / 2, description="Largest wrapped phase step accepted by the unwrapper"
    )
    jump_tol_factor: float = Field(
        default=3.0, description="alpha_cr jump threshold as a multiple of the median derivative difference"
    )
    lin_r2: float = Field(default=0.999, description="Required R² of the post-critical linear fit")
    alignment_ratio: float = Field(
        default=0.5, description="Branches wider than this fraction of the total width count as aligned"
    )
    real_tol: float = Field(default=1e-6, description="Relative bound on |Im z| for a real eigenvalue")
    pole_tol: float = Field(default=1e-12, description="Pole proximity bound relative to the model scale")
    pv_abs_tol: float = Field(default=1e-9, description="Absolute tolerance of principal-value quadrature")
    nl_tol: float = Field(default=1e-10, description="Nonlinear residual tolerance")
    nl_max_iters: int = Field(default=500, description="Nonlinear iteration budget")
    nl_damping: float = Field(default=0.5, description="Initial mixing factor of the nonlinear iteration")


DEFAULT_TOLERANCES = Tolerances()


def resolve_tolerances(tol: Union[Tolerances, Dict[str, Any], None]) -> Tolerances:
    """Accept a Tolerances, a partial dict of overrides, or None"""
    if tol is None:
        return DEFAULT_TOLERANCES
    if isinstance(tol, Tolerances):
        return tol
    try:
        return Tolerances(**tol)
    except ValidationError as e:
        raise ConfigError(f"invalid tolerances: {e.errors()[0]['msg']} at {e.errors()[0]['loc']}")


# =============================================================================
# DOTTED OVERRIDES
# =============================================================================


def set_dotted(data: Dict[str, Any], key: str, value: Any, owner: str = "config") -> None:
    """Assign data[a][b][0]... = value for key "a.b.0"; unknown paths are a config error"""
    node: Any = data
    parts = str(key).split(".")
    for depth, part in enumerate(parts):
        last = depth == len(parts) - 1
        if isinstance(node, dict) and part in node and part != "kind":
            if last:
                node[part] = value
            else:
                node = node[part]
        elif isinstance(node, list) and part.isdigit() and int(part) < len(node):
            if last:
                node[int(part)] = value
            else:
                node = node[int(part)]
        else:
            raise ConfigError(f"unknown parameter '{key}' for {owner}")


def get_dotted(data: Dict[str, Any], key: str, owner: str = "config") -> Any:
    node: Any = data
    for part in str(key).split("."):
        if isinstance(node, dict) and part in node:
            node = node[part]
        elif isinstance(node, list) and part.isdigit() and int(part) < len(node):
            node = node[int(part)]
        else:
            raise ConfigError(f"unknown parameter '{key}' for {owner}")
    return node


def plain_data(obj: Any) -> Any:
    """Deep copy of dumped model data with tuples turned into lists"""
    if isinstance(obj, dict):
        return {k: plain_data(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain_data(v) for v in obj]
    return obj
