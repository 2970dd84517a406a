import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from eptrap.config import Tolerances
from eptrap.models import PTSpec
from eptrap.observables import ObservableSeries
from eptrap.sweeps import evaluate_modes

from .base import ScenarioResult, check, finish

logger = logging.getLogger(__name__)

NAME = "pt_threshold"
PT_CLAIM = "The spectrum of the balanced gain/loss pair is real exactly when γ ≤ 2|ω|"

# =============================================================================
# PYDANTIC MODELS
# =============================================================================


class PTThresholdConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    e: float = Field(default=0.0, description="Common level energy")
    omega: float = Field(default=1.0, description="Real coupling ω")
    gammas: List[float] = Field(
        default_factory=lambda: [float(v) for v in np.linspace(0.0, 4.0, 81)],
        description="Gain/loss rates γ, increasing",
    )


# =============================================================================
# RUNNER
# =============================================================================


def run(config: PTThresholdConfig, tolerances: Tolerances, workers: Optional[int] = None) -> ScenarioResult:
    spec = PTSpec(e=config.e, gamma=config.gammas[0], omega=config.omega)
    modesets = evaluate_modes(spec, "gamma", config.gammas, tolerances, workers)
    threshold = 2.0 * abs(config.omega)

    max_imag, real_flags, mismatched = [], [], []
    for gamma, ms in zip(config.gammas, modesets):
        values = ms.values
        imag = float(np.max(np.abs(values.imag)))
        real = imag <= tolerances.real_tol * max(1.0, float(np.max(np.abs(values))))
        expected = gamma <= threshold * (1.0 + 1e-12)
        max_imag.append(imag)
        real_flags.append(real)
        if real != expected:
            mismatched.append(gamma)

    first_complex = next((g for g, r in zip(config.gammas, real_flags) if not r), None)
    steps = np.diff(config.gammas)
    step = float(np.max(steps)) if len(steps) else 0.0
    located = first_complex is not None and abs(first_complex - threshold) <= step * (1.0 + 1e-9)

    assertions = [
        check(
            "real-iff-below-threshold",
            not mismatched,
            f"{len(mismatched)} γ values disagree with γ ≤ 2|ω| = {threshold:g}",
        ),
        check(
            "threshold-within-one-step",
            located,
            f"first complex spectrum at γ = {first_complex}, threshold {threshold:g}, step {step:g}",
        ),
    ]
    provenance = {"model": spec.model_dump(mode="json"), "parameter": "gamma"}
    series = [
        ObservableSeries(name="max_abs_im_z", x=list(config.gammas), values=max_imag, x_label="gamma", provenance=provenance),
        ObservableSeries(
            name="min_phase_rigidity",
            x=list(config.gammas),
            values=[float(min(ms.r_k)) for ms in modesets],
            x_label="gamma",
            units="dimensionless",
            provenance=provenance,
        ),
    ]
    logger.info(f"📊 PT threshold: first complex spectrum at γ = {first_complex}")
    return finish(
        NAME,
        config.model_dump(mode="json"),
        tolerances.model_dump(mode="json"),
        assertions,
        series=series,
        reports={"threshold": threshold, "first_complex_gamma": first_complex},
    )
