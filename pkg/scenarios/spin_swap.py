"""Spin-swap phase diagram: swap frequency √(b² - (k/τ)²) over (b, k/τ).

Dimensionless throughout: b and k/τ in units of 1/τ.
"""

import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from eptrap.config import Tolerances
from eptrap.models import build, spin_swap_decoherence_rate, spin_swap_frequency, spin_swap_spec
from eptrap.observables import ObservableSeries
from eptrap.spectra import solve_modes

from .base import ScenarioResult, check, finish, finite

logger = logging.getLogger(__name__)

NAME = "spin_swap"
SPIN_SWAP_CLAIM = "The swap frequency is real below the boundary k/τ = b and imaginary above, where swapping freezes"

# =============================================================================
# PYDANTIC MODELS
# =============================================================================


class SpinSwapConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    b: List[float] = Field(
        default_factory=lambda: [float(v) for v in np.linspace(0.05, 1.0, 20)],
        description="Swap couplings b",
    )
    kappa: List[float] = Field(
        default_factory=lambda: [float(v) for v in np.linspace(0.025, 0.975, 20)],
        description="Anisotropy rates k/τ",
    )
    tau_se: float = Field(default=1.0, gt=0.0, description="Spin-exchange time τ")
    frozen_ratio: float = Field(
        default=0.2, gt=0.0, description="b < frozen_ratio·k/τ counts as deep in the frozen phase"
    )
    frozen_spread: float = Field(
        default=0.05, gt=0.0, description="Allowed relative spread of rate/b² in the frozen phase"
    )


# =============================================================================
# RUNNER
# =============================================================================


def run(config: SpinSwapConfig, tolerances: Tolerances, workers: Optional[int] = None) -> ScenarioResult:
    tau = config.tau_se
    rows = []
    wrong_regime = []
    splitting_error = 0.0
    for b in config.b:
        for kappa in config.kappa:
            k = kappa * tau
            freq = spin_swap_frequency(b, k, tau)
            bound = tolerances.real_tol * max(1.0, abs(freq))
            real = abs(freq.imag) <= bound
            imaginary = abs(freq.real) <= bound
            expected = "real" if kappa < b else "imaginary"
            regime = "real" if real and not imaginary else "imaginary" if imaginary and not real else "boundary"
            if regime != expected:
                wrong_regime.append((b, kappa))

            values = solve_modes(build(spin_swap_spec(b, k, tau)), tolerances).values
            half_split = abs(values[0] - values[1]) / 2.0
            splitting_error = max(splitting_error, abs(half_split - abs(freq)) / max(1.0, abs(freq)))
            rows.append(
                {
                    "b": b,
                    "kappa": kappa,
                    "re_frequency": freq.real,
                    "im_frequency": freq.imag,
                    "regime": regime,
                    "decoherence_rate": spin_swap_decoherence_rate(b, k, tau),
                }
            )

    spreads = []
    for kappa in config.kappa:
        ratios = [
            r["decoherence_rate"] / r["b"] ** 2
            for r in rows
            if r["kappa"] == kappa and r["b"] < config.frozen_ratio * kappa
        ]
        if len(ratios) >= 2:
            spreads.append((max(ratios) - min(ratios)) / min(ratios))

    assertions = [
        check(
            "regime-boundary",
            not wrong_regime,
            f"{len(wrong_regime)} of {len(rows)} grid points off the k/τ = b boundary",
        ),
        check(
            "frequency-is-half-splitting",
            splitting_error <= 1e-8,
            f"max relative deviation {splitting_error:.3e}",
        ),
        check(
            "frozen-rate-scales-as-b-squared",
            bool(spreads) and max(spreads) < config.frozen_spread,
            f"max spread of rate/b² {max(spreads) if spreads else float('nan'):.3e} over {len(spreads)} columns",
        ),
    ]

    critical = []
    for b in config.b:
        frozen = [r["kappa"] for r in rows if r["b"] == b and r["regime"] == "imaginary"]
        critical.append(min(frozen) if frozen else float("nan"))
    critical_x, critical = finite(config.b, critical)
    middle = config.b[len(config.b) // 2]
    rate_row = [r for r in rows if r["b"] == middle]
    series = [
        ObservableSeries(
            name="critical_kappa",
            x=critical_x,
            values=critical,
            x_label="b",
            units="1/tau",
            provenance={"tau_se": tau},
        ),
        ObservableSeries(
            name=f"decoherence_rate_b_{middle:g}",
            x=[r["kappa"] for r in rate_row],
            values=[r["decoherence_rate"] for r in rate_row],
            x_label="k/tau",
            units="1/tau",
            provenance={"tau_se": tau, "b": middle},
        ),
        ObservableSeries(
            name=f"swap_frequency_b_{middle:g}",
            x=[r["kappa"] for r in rate_row],
            values=[abs(complex(r["re_frequency"], r["im_frequency"])) for r in rate_row],
            x_label="k/tau",
            units="1/tau",
            provenance={"tau_se": tau, "b": middle},
        ),
    ]
    logger.info(f"📊 Spin swap: {len(rows)} grid points, {len(wrong_regime)} off the boundary")
    return finish(
        NAME,
        config.model_dump(mode="json"),
        tolerances.model_dump(mode="json"),
        assertions,
        series=series,
        reports={"phase_map": rows},
    )
