import logging
import os
import sys
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from eptrap.errors import ConfigError
from eptrap.models import BandModelSpec, build, lamb_shift
from eptrap.observables import (
    ObservableSeries,
    average_rate_vs_alpha,
    decay_rate,
    order_parameter,
    phase_lapse_scan,
    rigidity_series,
    scattering_series,
    time_delay,
    weights_from_coupling,
)
from eptrap.spectra import lifetimes, solve_modes
from eptrap.sweeps import SweepGrid, detect_avoided_crossings, encircle_ep, locate_ep, sweep
from scenarios import FAIL, PASS, SYSTEM_ERROR, ScenarioRunner, branch_table
from scenarios.base import ScenarioResult
from utils import RunConfig, load_config, load_manifest, parse_set

from .common import format_scenario_result, print_progress, show_notification
from .output import to_json, write_branches, write_json, write_series
from .selftest import SelfTestRunner

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ASSERTION = 3

SCATTERING_OBSERVABLES = ("transmission", "transmission_phase", "phase", "time_delay", "rho")
SWEEP_OBSERVABLES = ("gamma0_over_n", "gamma_av", "tau_av", "min_phase_rigidity")
MODE_OBSERVABLES = ("decay_rate", "lifetimes", "lamb_shift")
KNOWN_OBSERVABLES = SCATTERING_OBSERVABLES + SWEEP_OBSERVABLES + MODE_OBSERVABLES


def _config(args) -> RunConfig:
    return load_config(args.config, parse_set(getattr(args, "set", None)))


def _write_manifest(out: str, config: RunConfig):
    write_json(os.path.join(out, "manifest.json"), config.model_dump(mode="json"))


# =============================================================================
# SPECTRUM AND SWEEPS
# =============================================================================


def cmd_eig(args) -> int:
    config = _config(args)
    modes = solve_modes(build(config.model), config.tolerances)
    payload = {
        "values": modes.values,
        "energies": modes.energies,
        "widths": modes.widths,
        "lifetimes": lifetimes(modes),
        "a_k": modes.a_k,
        "r_k": modes.r_k,
        "ep_pairs": modes.ep_pairs,
        "b_kl": modes.b_kl,
        "right_vectors": [m.right for m in modes.modes],
        "residuals": [m.residual for m in modes.modes],
    }
    print(to_json(payload), end="")
    if args.out:
        write_json(os.path.join(args.out, "modes.json"), payload)
        _write_manifest(args.out, config)
    return EXIT_OK


def _branches(config: RunConfig, workers: Optional[int]):
    grid = config.require("grid")
    try:
        spec = SweepGrid(parameter=grid.parameter, samples=grid.samples(), model=config.model)
    except ValidationError as e:
        err = e.errors()[0]
        raise ConfigError(f"invalid sweep grid: {err['msg']}")
    return sweep(spec, config.tolerances, workers)


def cmd_sweep(args) -> int:
    config = _config(args)
    branches = _branches(config, args.workers)
    crossings = detect_avoided_crossings(branches)
    write_branches(os.path.join(args.out, "branches.csv"), branch_table(branches))
    write_json(os.path.join(args.out, "avoided_crossings.json"), crossings)
    _write_manifest(args.out, config)
    show_notification(
        f"{len(branches)} branches over {len(branches[0].samples)} samples, "
        f"{len(crossings)} avoided crossings, written to {args.out}",
        "success",
    )
    return EXIT_OK


# =============================================================================
# EXCEPTIONAL POINTS
# =============================================================================


def _locate(config: RunConfig):
    ep = config.require("ep")
    return ep, locate_ep(config.model, ep.parameters, ep.guess, config.tolerances)


def cmd_ep_find(args) -> int:
    config = _config(args)
    _, candidate = _locate(config)
    print(to_json(candidate), end="")
    if args.out:
        write_json(os.path.join(args.out, "ep.json"), candidate)
        _write_manifest(args.out, config)
    return EXIT_OK


def cmd_ep_cycle(args) -> int:
    config = _config(args)
    ep_config, candidate = _locate(config)
    report = encircle_ep(
        config.model,
        candidate,
        radius=ep_config.radius,
        steps=ep_config.steps,
        loops=ep_config.loops,
        direction=ep_config.direction,
        tolerances=config.tolerances,
        workers=args.workers,
    )
    print(to_json({k: v for k, v in report.model_dump().items() if not k.endswith("_history")}), end="")
    if args.out:
        write_json(os.path.join(args.out, "cycle.json"), report)
        _write_manifest(args.out, config)
    return EXIT_OK


# =============================================================================
# OBSERVABLES
# =============================================================================


def _scattering_series(config: RunConfig, name: str, workers) -> List[ObservableSeries]:
    spec = config.model
    if not isinstance(spec, BandModelSpec):
        raise ConfigError(f"observable '{name}' needs a band model")
    obs = config.observables
    if obs.energies is None:
        raise ConfigError(f"observable '{name}' needs observables.energies")
    energies = obs.energies.points()
    provenance = {"model": spec.model_dump(mode="json")}
    if name == "rho":
        return [rigidity_series(spec, energies, obs.channel, workers, config.tolerances)]

    pair = obs.pair if obs.pair is not None else (None if spec.c == 1 else (0, 1))
    series = scattering_series(spec, energies, pair=pair, tolerances=config.tolerances, workers=workers)
    x = [float(e) for e in energies]
    if name == "transmission":
        values, units = np.abs(series.transmission), "dimensionless"
    elif name == "transmission_phase":
        valid = np.isfinite(series.transmission_phase)
        x = [float(e) for e in energies[valid]]
        values, units = series.transmission_phase[valid], "rad"
    elif name == "phase":
        values, units = series.phase, "rad"
    else:
        values, units = time_delay(series, config.tolerances), "model units (hbar = 1)"
    out = [ObservableSeries(name=name, x=x, values=[float(v) for v in values], x_label="E", units=units, provenance=provenance)]
    if name == "transmission_phase":
        lapses = phase_lapse_scan(series, config.tolerances)
        logger.info(f"📊 {len(lapses)} phase lapses in the transmission phase")
    return out


def _sweep_series(config: RunConfig, name: str, branches) -> ObservableSeries:
    provenance = {"model": config.model.model_dump(mode="json"), "parameter": branches[0].parameter}
    x_label = branches[0].parameter
    if name == "min_phase_rigidity":
        x = [float(complex(s).real) for s in branches[0].samples]
        values = np.min(np.array([b.r_k for b in branches]), axis=0)
        return ObservableSeries(name=name, x=x, values=[float(v) for v in values], x_label=x_label, units="dimensionless", provenance=provenance)
    if name == "gamma0_over_n":
        op = order_parameter(branches, config.tolerances)
        return ObservableSeries(name=name, x=op.alphas, values=op.gamma0_over_n, x_label=x_label, provenance=provenance)
    report = average_rate_vs_alpha(branches, config.tolerances)
    values = report.gamma_av if name == "gamma_av" else report.tau_av
    keep = [i for i, v in enumerate(values) if np.isfinite(v)]
    return ObservableSeries(
        name=name,
        x=[report.alphas[i] for i in keep],
        values=[values[i] for i in keep],
        x_label=x_label,
        provenance=provenance,
    )


def _mode_series(config: RunConfig, name: str) -> ObservableSeries:
    spec = config.model
    modes = solve_modes(build(spec), config.tolerances)
    provenance = {"model": spec.model_dump(mode="json")}
    index = [float(k) for k in range(len(modes.modes))]
    if name == "lifetimes":
        values = lifetimes(modes)
        keep = [i for i, v in enumerate(values) if np.isfinite(v)]
        return ObservableSeries(name=name, x=[index[i] for i in keep], values=[values[i] for i in keep], x_label="mode", provenance=provenance)
    if name == "lamb_shift":
        if not isinstance(spec, BandModelSpec):
            raise ConfigError("observable 'lamb_shift' needs a band model")
        shift = lamb_shift(spec)
        return ObservableSeries(name=name, x=[float(k) for k in range(spec.n)], values=shift.shifts, x_label="state", provenance=provenance)

    obs = config.observables
    if obs.times is None:
        raise ConfigError("observable 'decay_rate' needs observables.times")
    if isinstance(spec, BandModelSpec):
        weights = weights_from_coupling(modes, spec.couplings, spec.energy, obs.channel)
    else:
        weights = [1.0] * len(modes.modes)
    result = decay_rate(modes, weights, obs.times.points())
    return ObservableSeries(name=name, x=result.times, values=result.rate, x_label="t", provenance=provenance)


def cmd_observe(args) -> int:
    config = _config(args)
    obs = config.require("observables")
    unknown = [n for n in obs.requested if n not in KNOWN_OBSERVABLES]
    if unknown:
        raise ConfigError(f"unknown observables {unknown} (expected some of {list(KNOWN_OBSERVABLES)})")

    series: List[ObservableSeries] = []
    branches = None
    for name in obs.requested:
        if name in SCATTERING_OBSERVABLES:
            series.extend(_scattering_series(config, name, args.workers))
        elif name in SWEEP_OBSERVABLES:
            if branches is None:
                branches = _branches(config, args.workers)
            series.append(_sweep_series(config, name, branches))
        else:
            series.append(_mode_series(config, name))
    written = write_series(args.out, series, svg=args.svg)
    _write_manifest(args.out, config)
    show_notification(f"{len(series)} series written to {args.out} ({len(written)} files)", "success")
    return EXIT_OK


# =============================================================================
# SCENARIOS
# =============================================================================


def write_bundle(out: str, result: ScenarioResult, svg: bool = False) -> str:
    """manifest.json, assertions.json, one CSV per series and branches.csv when present"""
    directory = os.path.join(out, result.scenario)
    write_json(
        os.path.join(directory, "manifest.json"),
        {"scenario": result.scenario, "parameters": result.parameters, "tolerances": result.tolerances},
    )
    write_json(
        os.path.join(directory, "assertions.json"),
        {
            "scenario": result.scenario,
            "status": result.status,
            "message": result.message,
            "assertions": result.assertions,
            "reports": result.reports,
        },
    )
    write_series(directory, result.series, svg=svg)
    if result.branch_rows:
        write_branches(os.path.join(directory, "branches.csv"), result.branch_rows)
    return directory


def _exit_for(result) -> int:
    """Exit code of a status-carrying result; non-passing results leave one reason line on stderr"""
    status = getattr(result, "overall_status", None) or result.status
    if status == SYSTEM_ERROR:
        print(f"system-error: {_summary(result)}", file=sys.stderr)
        return 2
    if status == FAIL:
        print(f"assertion-failed: {_summary(result)}", file=sys.stderr)
        return EXIT_ASSERTION
    return EXIT_OK


def _summary(result) -> str:
    return getattr(result, "summary", None) or result.message


def cmd_scenario(args) -> int:
    runner = ScenarioRunner(workers=args.workers)
    overrides = parse_set(args.set)

    if args.all:
        if args.name or args.from_manifest:
            raise ConfigError("--all runs every scenario; drop the name and --from-manifest")
        report = runner.run_all(overrides, progress_callback=print_progress)
        for result in report.results:
            write_bundle(args.out, result, svg=args.svg)
            print(format_scenario_result(result))
        write_json(os.path.join(args.out, "report.json"), {"overall_status": report.overall_status, "summary": report.summary})
        show_notification(report.summary, "success" if report.overall_status == PASS else "error")
        return _exit_for(report)

    parameters = tolerances = None
    name = args.name
    if args.from_manifest:
        manifest = load_manifest(args.from_manifest)
        if name and name != manifest["scenario"]:
            raise ConfigError(f"manifest is for scenario '{manifest['scenario']}', not '{name}'")
        name = manifest["scenario"]
        parameters, tolerances = manifest["parameters"], manifest["tolerances"]
    if not name:
        raise ConfigError(f"scenario name required (one of {runner.names})")

    result = runner.run_scenario(name, overrides, parameters=parameters, tolerances=tolerances)
    directory = write_bundle(args.out, result, svg=args.svg)
    print(format_scenario_result(result))
    logger.info(f"📊 Bundle written to {directory}")
    return _exit_for(result)


def cmd_selftest(args) -> int:
    result = SelfTestRunner(seed=args.seed).run(progress_callback=print_progress)
    print(format_scenario_result(result))
    if args.out:
        write_json(os.path.join(args.out, "selftest.json"), result)
    return _exit_for(result)
