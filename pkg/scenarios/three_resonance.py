"""Three resonances coupled to one channel.

With growing coupling the two outer states are trapped near ±1/√3 while the
middle one turns into a broad state; the Wigner-Smith delay follows the
poles.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from eptrap.config import Tolerances
from eptrap.models import BandModelSpec, build_heff_band
from eptrap.observables import ObservableSeries, phase_shift_excursion, scattering_series, time_delay
from eptrap.spectra import solve_modes

from .base import ScenarioResult, check, finish

logger = logging.getLogger(__name__)

NAME = "three_resonance"
THREE_RESONANCE_CLAIM = (
    "Two states become trapped: their delay-time peaks grow with the coupling while the "
    "broad state's peak flattens"
)

# =============================================================================
# PYDANTIC MODELS
# =============================================================================


class ThreeResonanceConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    e_b: List[float] = Field(default=[-1.0, 0.0, 1.0], description="Basis energies")
    profile: List[float] = Field(default=[1.0, 1.0, 1.0], description="Relative coupling amplitudes")
    alphas: List[float] = Field(default=[2.0, 4.0, 8.0, 16.0], description="Coupling strengths α = g²")
    band: Tuple[float, float] = Field(default=(-50.0, 50.0), description="Channel window")
    energy_start: float = Field(default=-2.0, description="First energy of the delay grid")
    energy_stop: float = Field(default=2.0, description="Last energy of the delay grid")
    energy_samples: int = Field(default=4001, ge=11, description="Energy grid size")
    peak_window: float = Field(default=0.25, gt=0.0, description="Half-width around Re z searched for a delay peak")

    @field_validator("alphas")
    @classmethod
    def _increasing(cls, value):
        if len(value) < 2 or any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("alphas must hold at least two increasing values")
        return value


# =============================================================================
# RUNNER
# =============================================================================


def _spec(config: ThreeResonanceConfig, alpha: float) -> BandModelSpec:
    g = math.sqrt(alpha)
    return BandModelSpec(
        n=len(config.e_b),
        c=1,
        e_b=config.e_b,
        gamma0=[[g * p] for p in config.profile],
        bands=[config.band],
        wide_band=True,
    )


def _increasing(values: List[float]) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


def _decreasing(values: List[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def run(config: ThreeResonanceConfig, tolerances: Tolerances, workers: Optional[int] = None) -> ScenarioResult:
    energies = np.linspace(config.energy_start, config.energy_stop, config.energy_samples)
    series = []
    poles = []
    trapped_widths: List[List[float]] = []
    trapped_peaks: List[List[float]] = []
    broad_delay: List[float] = []
    defects: List[float] = []
    excursions: List[float] = []

    for alpha in config.alphas:
        spec = _spec(config, alpha)
        modes = solve_modes(build_heff_band(spec), tolerances)
        broad = int(np.argmax(modes.widths))
        trapped = [k for k in range(len(modes.modes)) if k != broad]

        scattering = scattering_series(spec, energies, tolerances=tolerances, workers=workers)
        tau = time_delay(scattering, tolerances)
        defects.append(scattering.max_unitarity_defect)
        excursions.append(phase_shift_excursion(scattering))

        peaks = []
        for k in trapped:
            window = np.abs(energies - modes.energies[k]) <= config.peak_window
            peaks.append(float(tau[window].max()) if np.any(window) else math.nan)
        trapped_peaks.append(peaks)
        trapped_widths.append([float(modes.widths[k]) for k in trapped])
        broad_delay.append(float(tau[int(np.argmin(np.abs(energies - modes.energies[broad])))]))
        poles.append(
            {
                "alpha": alpha,
                "poles": [[complex(z).real, complex(z).imag] for z in modes.values],
                "broad": broad,
            }
        )
        series.append(
            ObservableSeries(
                name=f"tau_w_alpha_{alpha:g}",
                x=[float(e) for e in energies],
                values=[float(t) for t in tau],
                x_label="E",
                provenance={"model": spec.model_dump(mode="json")},
            )
        )
        logger.info(f"📊 α = {alpha:g}: broad Γ = {modes.widths[broad]:.4g}, trapped Γ = {trapped_widths[-1]}")

    columns = list(zip(*trapped_widths))
    peak_columns = list(zip(*trapped_peaks))
    assertions = [
        check(
            "trapped-widths-decreasing",
            all(_decreasing(list(c)) for c in columns),
            f"trapped widths per α: {trapped_widths}",
        ),
        check(
            "trapped-delay-peaks-growing",
            all(_increasing(list(c)) for c in peak_columns),
            f"trapped τ_w peaks per α: {trapped_peaks}",
        ),
        check(
            "broad-delay-flattening",
            _decreasing(broad_delay),
            f"τ_w at the broad pole per α: {broad_delay}",
        ),
        check(
            "unitarity",
            max(defects) <= tolerances.unitarity_tol,
            f"max ‖S†S - I‖ = {max(defects):.3e}",
        ),
    ]
    series.append(
        ObservableSeries(
            name="broad_delay", x=list(config.alphas), values=broad_delay, x_label="alpha",
            provenance={"parameter": "alpha"},
        )
    )
    return finish(
        NAME,
        config.model_dump(mode="json"),
        tolerances.model_dump(mode="json"),
        assertions,
        series=series,
        reports={"poles": poles, "phase_shift_excursion": excursions},
    )
