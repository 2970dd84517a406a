"""Transmission phase lapses through a chain of resonances between two channels."""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from eptrap.config import Tolerances
from eptrap.models import BandModelSpec
from eptrap.observables import ObservableSeries, phase_lapse_scan, scattering_series

from .base import ScenarioResult, check, finish

logger = logging.getLogger(__name__)

NAME = "phase_lapse"
PHASE_LAPSE_CLAIM = "The transmission phase jumps down by π in every valley between two transmission peaks"

# =============================================================================
# PYDANTIC MODELS
# =============================================================================


class PhaseLapseConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    e_b: List[float] = Field(
        default=[-2.5, -1.5, -0.5, 0.5, 1.5, 2.5], description="Basis energies of the resonances"
    )
    coupling: float = Field(default=2.0, gt=0.0, description="Equal coupling γ of every state to both channels")
    band: Tuple[float, float] = Field(default=(-50.0, 50.0), description="Window shared by both channels")
    energy_start: float = Field(default=-3.5, description="First energy of the grid")
    energy_stop: float = Field(default=3.5, description="Last energy of the grid")
    energy_samples: int = Field(default=14000, ge=11, description="Energy grid size")
    max_zero_transmission: float = Field(
        default=0.05, gt=0.0, description="Largest |T| accepted as a transmission zero on the grid"
    )


# =============================================================================
# RUNNER
# =============================================================================


def run(config: PhaseLapseConfig, tolerances: Tolerances, workers: Optional[int] = None) -> ScenarioResult:
    n = len(config.e_b)
    spec = BandModelSpec(
        n=n,
        c=2,
        e_b=config.e_b,
        gamma0=[[config.coupling, config.coupling] for _ in range(n)],
        bands=[config.band, config.band],
        wide_band=True,
    )
    energies = np.linspace(config.energy_start, config.energy_stop, config.energy_samples)
    scattering = scattering_series(spec, energies, pair=(0, 1), tolerances=tolerances, workers=workers)
    lapses = phase_lapse_scan(scattering, tolerances)

    inside = [e for e in config.e_b if config.energy_start < e < config.energy_stop]
    valleys = max(len(inside) - 1, 0)
    assertions = [
        check(
            "lapse-per-valley",
            len(lapses) == valleys,
            f"{len(lapses)} lapses for {valleys} valleys between {len(inside)} resonances",
        ),
        check(
            "lapse-size",
            all(abs(l.jump + math.pi) <= tolerances.lapse_tol for l in lapses),
            f"jumps {[round(l.jump, 4) for l in lapses]}",
        ),
        check(
            "lapse-at-zero",
            all(l.min_transmission <= config.max_zero_transmission for l in lapses),
            f"|T| at the valley minima {[float(f'{l.min_transmission:.3g}') for l in lapses]}",
        ),
        check(
            "unitarity",
            scattering.max_unitarity_defect <= tolerances.unitarity_tol,
            f"max ‖S†S - I‖ = {scattering.max_unitarity_defect:.3e}",
        ),
    ]

    provenance = {"model": spec.model_dump(mode="json"), "pair": [0, 1]}
    valid = np.isfinite(scattering.transmission_phase)
    series = [
        ObservableSeries(
            name="transmission",
            x=[float(e) for e in energies],
            values=[float(t) for t in np.abs(scattering.transmission)],
            x_label="E",
            units="dimensionless",
            provenance=provenance,
        ),
        ObservableSeries(
            name="transmission_phase",
            x=[float(e) for e in energies[valid]],
            values=[float(b) for b in scattering.transmission_phase[valid]],
            x_label="E",
            units="rad",
            provenance=provenance,
        ),
    ]
    logger.info(f"📊 Phase lapse: {len(lapses)} lapses across {len(inside)} resonances")
    return finish(
        NAME,
        config.model_dump(mode="json"),
        tolerances.model_dump(mode="json"),
        assertions,
        series=series,
        reports={"lapses": [l.model_dump(mode="json") for l in lapses]},
    )
