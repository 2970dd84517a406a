"""A third state watching a crossing pair.

The pair ε₁ = iδ, ε₂ = -iδ is swept in ω while a third state couples to
both through w13 and w23. The asymmetry Δ = max over the sweep of
||B_3^1| - |B_3^2|| measures whether the observer distinguishes the two
partners: it vanishes for w13 = w23 and not otherwise.
"""

import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from eptrap.config import Tolerances
from eptrap.models import ThreeLevelSpec, TwoLevelSpec
from eptrap.observables import ObservableSeries
from eptrap.spectra import ModeSet
from eptrap.sweeps import evaluate_modes

from .base import ScenarioResult, check, finish

logger = logging.getLogger(__name__)

NAME = "observer"
OBSERVER_CLAIM = (
    "A symmetrically coupled third state overlaps both partners equally; asymmetric coupling "
    "breaks the balance"
)

# =============================================================================
# PYDANTIC MODELS
# =============================================================================


class ObserverConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    delta: float = Field(default=0.5, gt=0.0, description="Gain/loss δ of the pair, ε₁,₂ = ±iδ")
    eps3: float = Field(default=2.0, description="Energy of the observing state")
    w13: float = Field(default=0.1, description="Coupling of the observer to state 1")
    w23: float = Field(default=0.1, description="Coupling of the observer to state 2")
    asymmetric_w23: float = Field(default=0.2, description="w23 of the asymmetric comparison run")
    omegas: List[float] = Field(
        default_factory=lambda: [float(v) for v in np.linspace(0.05, 0.35, 31)],
        description="Pair couplings ω swept",
    )
    symmetric_tol: float = Field(default=1e-10, gt=0.0, description="Bound on Δ for equal couplings")
    asymmetric_floor: float = Field(default=1e-6, gt=0.0, description="Δ must exceed this for unequal couplings")


# =============================================================================
# RUNNER
# =============================================================================


def _overlaps(ms: ModeSet):
    """(|B_3^1|, |B_3^2|) with mode 3 the one living on the observer"""
    weights = [abs(m.right[2]) ** 2 for m in ms.modes]
    t = int(np.argmax(weights))
    first, second = [k for k in range(len(ms.modes)) if k != t]
    return abs(ms.b_kl[t, first]), abs(ms.b_kl[t, second])


def _asymmetry(config: ObserverConfig, w23: float, tolerances: Tolerances, workers):
    spec = ThreeLevelSpec(
        two_level=TwoLevelSpec(eps1=1j * config.delta, eps2=-1j * config.delta, omega=config.omegas[0]),
        eps3=config.eps3,
        w13=config.w13,
        w23=w23,
    )
    modesets = evaluate_modes(spec, "two_level.omega", config.omegas, tolerances, workers)
    pairs = [_overlaps(ms) for ms in modesets]
    return spec, [abs(a - b) for a, b in pairs], pairs


def run(config: ObserverConfig, tolerances: Tolerances, workers: Optional[int] = None) -> ScenarioResult:
    spec, symmetric, pairs = _asymmetry(config, config.w23, tolerances, workers)
    _, asymmetric, _ = _asymmetry(config, config.asymmetric_w23, tolerances, workers)
    delta_sym = max(symmetric)
    delta_asym = max(asymmetric)
    equal = config.w13 == config.w23

    assertions = []
    if equal:
        assertions.append(
            check("symmetric-balance", delta_sym <= config.symmetric_tol, f"Δ = {delta_sym:.3e} for w13 = w23")
        )
    else:
        assertions.append(
            check("imbalance", delta_sym > config.asymmetric_floor, f"Δ = {delta_sym:.3e} for w13 ≠ w23")
        )
    if config.asymmetric_w23 != config.w13:
        assertions.append(
            check(
                "asymmetric-imbalance",
                delta_asym > config.asymmetric_floor,
                f"Δ = {delta_asym:.3e} for w23 = {config.asymmetric_w23:g}",
            )
        )

    provenance = {"model": spec.model_dump(mode="json"), "parameter": "two_level.omega"}
    series = [
        ObservableSeries(name="b31", x=list(config.omegas), values=[p[0] for p in pairs], x_label="omega", units="dimensionless", provenance=provenance),
        ObservableSeries(name="b32", x=list(config.omegas), values=[p[1] for p in pairs], x_label="omega", units="dimensionless", provenance=provenance),
        ObservableSeries(name="asymmetry", x=list(config.omegas), values=symmetric, x_label="omega", units="dimensionless", provenance=provenance),
        ObservableSeries(
            name="asymmetry_comparison",
            x=list(config.omegas),
            values=asymmetric,
            x_label="omega",
            units="dimensionless",
            provenance={**provenance, "w23": config.asymmetric_w23},
        ),
    ]
    logger.info(f"📊 Observer: Δ = {delta_sym:.3e} (w23 = {config.w23:g}), {delta_asym:.3e} (w23 = {config.asymmetric_w23:g})")
    return finish(
        NAME,
        config.model_dump(mode="json"),
        tolerances.model_dump(mode="json"),
        assertions,
        series=series,
        reports={"delta": delta_sym, "delta_comparison": delta_asym},
    )
