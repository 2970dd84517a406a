"""Resonance trapping in the one-channel toy chain.

Sweeps α over a wide range, locates the derivative jump of Γ₀/N and checks
that one branch absorbs the total width while the rest are trapped.
"""

import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from eptrap.config import Tolerances
from eptrap.models import ToyChainSpec
from eptrap.observables import ObservableSeries, average_rate_vs_alpha, order_parameter
from eptrap.sweeps import SweepGrid, sweep

from .base import ScenarioResult, branch_table, check, finish, finite

logger = logging.getLogger(__name__)

NAME = "trapping"
TRAPPING_CLAIM = (
    "Beyond alpha_cr one branch's width grows linearly with α while the summed widths "
    "of the remaining branches decrease"
)

# =============================================================================
# PYDANTIC MODELS
# =============================================================================


class TrappingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(default=10, ge=2, description="Number of states N")
    spacing: float = Field(default=1.0, gt=0.0, description="Level spacing of the centered chain")
    alpha_start: float = Field(default=0.0, ge=0.0, description="First coupling strength")
    alpha_stop: float = Field(default=30.0, gt=0.0, description="Last coupling strength")
    samples: int = Field(default=301, ge=10, description="Number of α samples")


# =============================================================================
# RUNNER
# =============================================================================


def _strictly(values: np.ndarray, sign: int) -> bool:
    return bool(len(values) < 2 or np.all(sign * np.diff(values) > 0))


def run(config: TrappingConfig, tolerances: Tolerances, workers: Optional[int] = None) -> ScenarioResult:
    spec = ToyChainSpec.centered(config.n, config.spacing, alpha=config.alpha_start)
    grid = SweepGrid.linspace("alpha", config.alpha_start, config.alpha_stop, config.samples, spec)
    branches = sweep(grid, tolerances, workers)

    alphas = np.asarray(branches[0].grid, dtype=float)
    widths = np.array([b.widths for b in branches])
    coupling = float(np.sum(np.abs(np.array(spec.v)) ** 2))
    op = order_parameter(branches, tolerances)
    avg = average_rate_vs_alpha(branches, tolerances)

    assertions = []
    drift = np.abs(widths.sum(axis=0) - alphas * coupling)
    bound = 1e-9 * np.maximum(1.0, alphas * config.n)
    assertions.append(
        check("width-sum-rule", np.all(drift <= bound), f"max |ΣΓ - α‖v‖²| = {drift.max():.3e}")
    )
    assertions.append(
        check("alpha-cr-detected", op.alpha_cr is not None, f"alpha_cr = {op.alpha_cr}, status {op.status}")
    )
    assertions.append(
        check(
            "linear-broad-width",
            op.post_critical_r2 is not None and op.post_critical_r2 >= tolerances.lin_r2,
            f"post-critical R² = {op.post_critical_r2}",
        )
    )

    if op.alpha_cr is not None:
        broad = int(np.argmax(widths[:, -1]))
        beyond = np.flatnonzero(alphas > op.alpha_cr)[1:]
        trapped = np.delete(widths, broad, axis=0)
        assertions.append(
            check(
                "broad-width-increasing",
                _strictly(widths[broad, beyond], +1),
                f"branch {branches[broad].index} over {len(beyond)} samples beyond alpha_cr",
            )
        )
        assertions.append(
            check(
                "trapped-sum-decreasing",
                _strictly(trapped[:, beyond].sum(axis=0), -1),
                f"ΣΓ of {len(trapped)} trapped branches beyond alpha_cr",
            )
        )
        tail = np.arange(int(0.9 * len(alphas)), len(alphas))
        ordered = np.sort(trapped[:, tail], axis=0)
        eventually = all(_strictly(row, -1) for row in ordered)
        assertions.append(
            check(
                "trapped-widths-eventually-decreasing",
                eventually,
                f"sorted trapped widths over the last {len(tail)} samples",
            )
        )
    assertions.append(
        check(
            "one-aligned-state",
            op.localized_states[-1] == config.n - 1,
            f"{op.localized_states[-1]} localized states at α = {alphas[-1]:g}",
        )
    )

    provenance = {"model": spec.model_dump(mode="json"), "parameter": "alpha"}
    tau_x, tau_v = finite(avg.alphas, avg.tau_av)
    series = [
        ObservableSeries(name="gamma0_over_n", x=op.alphas, values=op.gamma0_over_n, x_label="alpha", provenance=provenance),
        ObservableSeries(name="gamma0_over_n_derivative", x=op.alphas, values=op.derivative, x_label="alpha", units="dimensionless", provenance=provenance),
        ObservableSeries(name="gamma_av", x=avg.alphas, values=avg.gamma_av, x_label="alpha", provenance=provenance),
        ObservableSeries(name="tau_av", x=tau_x, values=tau_v, x_label="alpha", provenance=provenance),
        ObservableSeries(
            name="localized_states", x=op.alphas, values=[float(c) for c in op.localized_states],
            x_label="alpha", units="count", provenance=provenance,
        ),
    ]
    logger.info(f"📊 Trapping: alpha_cr = {op.alpha_cr}, R² = {op.post_critical_r2}")
    return finish(
        NAME,
        config.model_dump(mode="json"),
        tolerances.model_dump(mode="json"),
        assertions,
        series=series,
        reports={"order_parameter": op.model_dump(mode="json"), "average_rate": avg.model_dump(mode="json")},
        branch_rows=branch_table(branches),
    )
