import logging
from typing import Any, Callable, Dict, List, Optional

from pydantic import ValidationError

from eptrap.config import DEFAULT_TOLERANCES, Tolerances, plain_data, resolve_tolerances, set_dotted
from eptrap.errors import ConfigError

from . import observer, phase_lapse, pt_threshold, spin_swap, three_resonance, trapping
from .base import FAIL, PASS, SYSTEM_ERROR, ScenarioReport, ScenarioResult, system_error

logger = logging.getLogger(__name__)

TOLERANCE_PREFIX = "tolerances."


# =============================================================================
# SCENARIO ORCHESTRATOR
# =============================================================================


class ScenarioRunner:
    def __init__(self, tolerances: Optional[Tolerances] = None, workers: Optional[int] = None):
        self.tolerances = tolerances or DEFAULT_TOLERANCES
        self.workers = workers

        self.scenarios: List[Dict[str, Any]] = [
            {
                "name": trapping.NAME,
                "description": trapping.TRAPPING_CLAIM,
                "config": trapping.TrappingConfig,
                "method": trapping.run,
                "icon": "🪤",
            },
            {
                "name": three_resonance.NAME,
                "description": three_resonance.THREE_RESONANCE_CLAIM,
                "config": three_resonance.ThreeResonanceConfig,
                "method": three_resonance.run,
                "icon": "⏱️",
            },
            {
                "name": phase_lapse.NAME,
                "description": phase_lapse.PHASE_LAPSE_CLAIM,
                "config": phase_lapse.PhaseLapseConfig,
                "method": phase_lapse.run,
                "icon": "📉",
            },
            {
                "name": spin_swap.NAME,
                "description": spin_swap.SPIN_SWAP_CLAIM,
                "config": spin_swap.SpinSwapConfig,
                "method": spin_swap.run,
                "icon": "🔄",
            },
            {
                "name": pt_threshold.NAME,
                "description": pt_threshold.PT_CLAIM,
                "config": pt_threshold.PTThresholdConfig,
                "method": pt_threshold.run,
                "icon": "⚖️",
            },
            {
                "name": observer.NAME,
                "description": observer.OBSERVER_CLAIM,
                "config": observer.ObserverConfig,
                "method": observer.run,
                "icon": "👁️",
            },
        ]

    @property
    def names(self) -> List[str]:
        return [s["name"] for s in self.scenarios]

    def entry(self, name: str) -> Dict[str, Any]:
        for scenario in self.scenarios:
            if scenario["name"] == name:
                return scenario
        raise ConfigError(f"unknown scenario '{name}' (expected one of {self.names})")

    def prepare(
        self,
        name: str,
        overrides: Optional[Dict[str, Any]] = None,
        parameters: Optional[Dict[str, Any]] = None,
        tolerances: Optional[Dict[str, Any]] = None,
    ):
        """Validated (config, tolerances) for one scenario.

        `parameters` replaces the scenario defaults (a manifest re-run);
        `overrides` are dotted keys applied on top, `tolerances.*` keys go to
        the tolerance block.
        """
        scenario = self.entry(name)
        config_cls = scenario["config"]
        data = plain_data(parameters if parameters is not None else config_cls().model_dump(mode="json"))
        tol_data = plain_data(tolerances if tolerances is not None else self.tolerances.model_dump())
        for key, value in (overrides or {}).items():
            if key.startswith(TOLERANCE_PREFIX):
                set_dotted(tol_data, key[len(TOLERANCE_PREFIX):], value, owner="tolerances")
            else:
                set_dotted(data, key, value, owner=f"scenario {name}")
        try:
            config = config_cls.model_validate(data)
        except ValidationError as e:
            err = e.errors()[0]
            raise ConfigError(f"invalid {name} config: {err['msg']} at {'.'.join(map(str, err['loc']))}")
        return config, resolve_tolerances(tol_data)

    def run_scenario(
        self,
        name: str,
        overrides: Optional[Dict[str, Any]] = None,
        parameters: Optional[Dict[str, Any]] = None,
        tolerances: Optional[Dict[str, Any]] = None,
    ) -> ScenarioResult:
        """Run one scenario. Config problems raise; numerical failures come back as SYSTEM_ERROR"""
        scenario = self.entry(name)
        config, tol = self.prepare(name, overrides, parameters, tolerances)
        logger.info(f"🚀 {scenario['icon']} Running scenario {name}")
        try:
            result = scenario["method"](config, tol, self.workers)
        except ConfigError:
            raise
        except Exception as e:
            return system_error(name, config.model_dump(mode="json"), tol.model_dump(mode="json"), e)
        logger.info(f"✅ Scenario {name} completed: {result.status}")
        return result

    def run_all(
        self,
        overrides: Optional[Dict[str, Any]] = None,
        progress_callback: Optional[Callable[..., None]] = None,
    ) -> ScenarioReport:
        """Every registered scenario in order, with an overall verdict"""
        overrides = overrides or {}
        stray = [k for k in overrides if not k.startswith(TOLERANCE_PREFIX)]
        if stray:
            raise ConfigError(f"only tolerances.* overrides apply to every scenario, got {stray}")

        results = []
        total = len(self.scenarios)
        for i, scenario in enumerate(self.scenarios):
            if progress_callback:
                progress_callback(
                    current=i + 1,
                    total=total,
                    current_job=scenario["name"],
                    description=scenario["description"],
                    icon=scenario["icon"],
                )
            logger.info(f"{scenario['icon']} Running {scenario['name']} ({i + 1}/{total})")
            results.append(self.run_scenario(scenario["name"], overrides))

        system_error_count = sum(1 for r in results if r.status == SYSTEM_ERROR)
        fail_count = sum(1 for r in results if r.status == FAIL)
        if system_error_count > 0:
            overall_status = SYSTEM_ERROR
            summary = f"SYSTEM ERROR: {system_error_count} scenarios could not complete"
        elif fail_count > 0:
            overall_status = FAIL
            summary = f"VIOLATION: {fail_count} scenarios failed their checks"
        else:
            overall_status = PASS
            summary = f"PASSED: all {total} scenarios held"
        return ScenarioReport(overall_status=overall_status, results=results, summary=summary)

