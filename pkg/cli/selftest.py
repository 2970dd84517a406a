"""Invariant suite behind `eptrap selftest`.

Closed-form oracles and structural invariants on seeded random inputs; each
check reports an AssertionOutcome and never raises for numerical failures.
"""

import logging
import math
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from eptrap.config import DEFAULT_TOLERANCES, Tolerances
from eptrap.errors import NumericalError
from eptrap.linalg import Matrix, eig
from eptrap.models import BandModelSpec, PTSpec, ToyChainSpec, TwoLevelSpec, build, build_heff_band, closed_form_two_level, pv_quadrature, pv_self_energy
from eptrap.observables import decay_rate, internal_wavefunction, scattering_series, time_delay
from eptrap.spectra import solve_modes
from eptrap.sweeps import SweepGrid, encircle_ep, locate_ep, sweep
from scenarios.base import AssertionOutcome, ScenarioResult, check, finish

logger = logging.getLogger(__name__)


def _random_complex(rng: np.random.Generator, size=None):
    return rng.normal(size=size) + 1j * rng.normal(size=size)


class SelfTestRunner:
    def __init__(self, tolerances: Optional[Tolerances] = None, seed: int = 0):
        self.tol = tolerances or DEFAULT_TOLERANCES
        self.seed = seed
        self.rng = np.random.default_rng(seed)

        self.checks: List[Dict[str, Any]] = [
            {"name": "two-level-oracle", "description": "eig against the closed-form 2×2 eigenvalues", "method": self.check_two_level_oracle, "icon": "🧮"},
            {"name": "trace-sum-rule", "description": "Σ z_k = tr H on random matrices", "method": self.check_trace_sum_rule, "icon": "➕"},
            {"name": "width-sum-rule", "description": "Σ Γ_k = α‖v‖² along a toy-chain sweep", "method": self.check_width_sum_rule, "icon": "📏"},
            {"name": "hermitian-rigidity", "description": "r_k = 1 for Hermitian inputs", "method": self.check_hermitian_rigidity, "icon": "🧊"},
            {"name": "ep-condition", "description": "EP search recovers ω = ±i(ε₁ - ε₂)/2", "method": self.check_ep_condition, "icon": "🎯"},
            {"name": "encircling", "description": "swap after one loop, restoration after four, reversal undoes a loop", "method": self.check_encircling, "icon": "🔁"},
            {"name": "pv-box", "description": "box principal value against adaptive quadrature", "method": self.check_pv_box, "icon": "∫"},
            {"name": "breit-wigner", "description": "unitarity and peak delay 4/Γ of one resonance", "method": self.check_breit_wigner, "icon": "📈"},
            {"name": "single-mode-decay", "description": "one mode decays at the constant rate Γ", "method": self.check_single_mode_decay, "icon": "⏳"},
            {"name": "pt-threshold", "description": "real spectrum iff γ ≤ 2|ω|", "method": self.check_pt_threshold, "icon": "⚖️"},
            {"name": "resolvent-identity", "description": "mode expansion equals the direct solve", "method": self.check_resolvent_identity, "icon": "🔗"},
        ]

    # =========================================================================
    # CHECKS
    # =========================================================================

    def check_two_level_oracle(self) -> AssertionOutcome:
        worst = 0.0
        for _ in range(1000):
            eps1, eps2, omega = _random_complex(self.rng, 3)
            m = build(TwoLevelSpec(eps1=eps1, eps2=eps2, omega=omega))
            values = [p.value for p in eig(m, self.tol)]
            ref = closed_form_two_level(eps1, eps2, omega)
            err = min(
                max(abs(values[0] - ref.z_plus), abs(values[1] - ref.z_minus)),
                max(abs(values[0] - ref.z_minus), abs(values[1] - ref.z_plus)),
            )
            worst = max(worst, err / m.scale)
        return check("two-level-oracle", worst <= 1e-12, f"max relative deviation {worst:.3e}")

    def check_trace_sum_rule(self) -> AssertionOutcome:
        worst = 0.0
        for _ in range(100):
            n = int(self.rng.integers(2, 17))
            m = Matrix.of(_random_complex(self.rng, (n, n)))
            total = sum(p.value for p in eig(m, self.tol))
            worst = max(worst, abs(total - np.trace(m.entries)) / m.frobenius)
        return check("trace-sum-rule", worst <= 1e-10, f"max |Σz - tr H|/‖H‖_F = {worst:.3e}")

    def check_width_sum_rule(self) -> AssertionOutcome:
        spec = ToyChainSpec.centered(6)
        branches = sweep(SweepGrid.linspace("alpha", 0.0, 5.0, 21, spec), self.tol, workers=1)
        widths = np.array([b.widths for b in branches]).sum(axis=0)
        alphas = np.asarray(branches[0].grid, dtype=float)
        drift = float(np.max(np.abs(widths - alphas * spec.n) / np.maximum(1.0, alphas * spec.n)))
        return check("width-sum-rule", drift <= 1e-10, f"max relative drift {drift:.3e}")

    def check_hermitian_rigidity(self) -> AssertionOutcome:
        a = self.rng.normal(size=(6, 6))
        modes = solve_modes(Matrix.of((a + a.T).astype(complex)), self.tol)
        worst = max(abs(r - 1.0) for r in modes.r_k)
        return check("hermitian-rigidity", worst <= 1e-12, f"max |r_k - 1| = {worst:.3e}")

    def check_ep_condition(self) -> AssertionOutcome:
        worst_point, worst_gap = 0.0, 0.0
        for _ in range(10):
            eps1 = complex(_random_complex(self.rng))
            delta = complex(_random_complex(self.rng))
            spec = TwoLevelSpec(eps1=eps1, eps2=eps1 - delta, omega=0.0)
            exact = 0.5j * delta
            guess = exact * (1.0 + 0.1 * complex(_random_complex(self.rng)))
            found = locate_ep(spec, ["omega"], guess=[guess], tolerances=self.tol)
            omega = complex(found.parameters["omega"])
            worst_point = max(worst_point, min(abs(omega - exact), abs(omega + exact)))
            worst_gap = max(worst_gap, found.gap)
        return check(
            "ep-condition",
            worst_point <= 1e-6 and worst_gap <= 1e-8,
            f"max parameter error {worst_point:.3e}, max gap {worst_gap:.3e}",
        )

    def check_encircling(self) -> AssertionOutcome:
        spec = TwoLevelSpec(eps1=1.0, eps2=-1.0, omega=1j)
        ep = locate_ep(spec, ["omega"], tolerances=self.tol)
        report = encircle_ep(spec, ep, radius=0.1, steps=200, loops=4, tolerances=self.tol, workers=1)
        back = encircle_ep(spec, ep, radius=0.1, steps=200, loops=1, direction=-1, tolerances=self.tol, workers=1)
        perm, phases = report.reversed_loop()
        phase_error = max(abs(math.remainder(a - b, 2 * math.pi)) for a, b in zip(back.phases[0], phases))
        passed = (
            report.permutations[0] == [1, 0]
            and report.loops_to_restore_values == 2
            and report.loops_to_restore_vectors == 4
            and back.loop_permutations[0] == perm
            and phase_error <= self.tol.phase_tol
        )
        return check(
            "encircling",
            passed,
            f"first loop {report.permutations[0]}, values back after {report.loops_to_restore_values}, "
            f"vectors after {report.loops_to_restore_vectors}, reversed-loop phase error {phase_error:.2e}",
        )
        return check(
            "encircling",
            passed,
            f"first loop {report.permutations[0]}, values back after {report.loops_to_restore_values}, "
            f"vectors after {report.loops_to_restore_vectors}",
        )

    def check_pv_box(self) -> AssertionOutcome:
        spec = BandModelSpec(n=1, c=1, e_b=[1.5], gamma0=[[1.0]], bands=[(0.0, 2.0)], energy=1.5)
        closed = pv_self_energy(spec, 0, 0)
        numeric = pv_quadrature(spec, 0, 0, tolerances=self.tol)
        expected = math.log(3.0) / (2.0 * math.pi)
        err = max(abs(closed - expected), abs(numeric - expected)) / expected
        return check("pv-box", err <= 1e-6, f"closed {closed:.8f}, quadrature {numeric:.8f}, ln3/2π {expected:.8f}")

    def check_breit_wigner(self) -> AssertionOutcome:
        spec = BandModelSpec(n=1, c=1, e_b=[0.0], gamma0=[[1.0]], bands=[(-50.0, 50.0)], wide_band=True)
        width = -2.0 * build_heff_band(spec).entries[0, 0].imag
        series = scattering_series(spec, np.linspace(-5.0, 5.0, 10001), tolerances=self.tol, workers=1)
        peak = float(np.max(time_delay(series, self.tol)))
        err = abs(peak - 4.0 / width) / (4.0 / width)
        return check(
            "breit-wigner",
            series.max_unitarity_defect <= 1e-8 and err <= 0.01,
            f"unitarity defect {series.max_unitarity_defect:.3e}, peak τ_w {peak:.5f} vs {4.0 / width:.5f}",
        )

    def check_single_mode_decay(self) -> AssertionOutcome:
        result = decay_rate([0.7], [1.0], np.linspace(0.0, 50.0, 101))
        deviation = max(abs(r - 0.7) for r in result.rate)
        return check("single-mode-decay", deviation == 0.0, f"max |k_gr - Γ| = {deviation:.3e}")

    def check_pt_threshold(self) -> AssertionOutcome:
        flags = []
        for gamma in (0.0, 1.0, 1.9, 2.1, 3.0):
            values = solve_modes(build(PTSpec(gamma=gamma, omega=1.0)), self.tol).values
            flags.append(bool(np.max(np.abs(values.imag)) <= self.tol.real_tol))
        return check("pt-threshold", flags == [True, True, True, False, False], f"real flags {flags}")

    def check_resolvent_identity(self) -> AssertionOutcome:
        worst = 0.0
        for _ in range(20):
            n, c = 4, 2
            spec = BandModelSpec(
                n=n,
                c=c,
                e_b=sorted(self.rng.uniform(-2.0, 2.0, n)),
                gamma0=self.rng.uniform(0.1, 1.0, (n, c)).tolist(),
                bands=[(-10.0, 10.0)] * c,
                wide_band=True,
            )
            energy = float(self.rng.uniform(-2.5, 2.5))
            h = build_heff_band(spec)
            psi = internal_wavefunction(solve_modes(h, self.tol), spec.couplings, energy, 0, self.tol)
            direct = np.linalg.solve(energy * np.eye(n) - h.entries, spec.couplings[:, 0].astype(complex))
            worst = max(worst, float(np.linalg.norm(psi - direct) / np.linalg.norm(direct)))
        return check("resolvent-identity", worst <= 1e-10, f"max relative deviation {worst:.3e}")

    # =========================================================================
    # RUNNER
    # =========================================================================

    def run(self, progress_callback: Optional[Callable[..., None]] = None) -> ScenarioResult:
        outcomes = []
        total = len(self.checks)
        for i, item in enumerate(self.checks):
            if progress_callback:
                progress_callback(
                    current=i + 1,
                    total=total,
                    current_job=item["name"],
                    description=item["description"],
                    icon=item["icon"],
                )
            logger.info(f"{item['icon']} Running {item['name']} ({i + 1}/{total})")
            try:
                outcome = item["method"]()
            except NumericalError as e:
                outcome = check(item["name"], False, e.one_line())
            outcomes.append(outcome)
            logger.info(f"{'✅' if outcome.passed else '❌'} {item['name']}: {outcome.detail}")
        return finish("selftest", {"seed": self.seed}, self.tol.model_dump(mode="json"), outcomes)
