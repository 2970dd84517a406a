import math

import numpy as np
import pytest

from eptrap.errors import ContractError, DomainError, GridTooCoarseError, PoleError
from eptrap.linalg import Matrix
from eptrap.models import BandModelSpec, ToyChainSpec, TwoLevelSpec, build, build_heff_band
from eptrap.observables import (
    average_rate_vs_alpha,
    decay_rate,
    internal_wavefunction,
    order_parameter,
    phase_lapse_scan,
    phase_shift_excursion,
    rho_phase_rigidity,
    rigidity_series,
    s_matrix,
    scattering_series,
    time_delay,
    weights_from_coupling,
)
from eptrap.spectra import solve_modes
from eptrap.sweeps import SweepGrid, sweep


def _single(coupling=1.0, e_b=0.0):
    return BandModelSpec(n=1, c=1, e_b=[e_b], gamma0=[[coupling]], bands=[(-50.0, 50.0)], wide_band=True)


def _two_channel(e_b, coupling):
    return BandModelSpec(
        n=len(e_b),
        c=2,
        e_b=e_b,
        gamma0=[[coupling, coupling] for _ in e_b],
        bands=[(-50.0, 50.0), (-50.0, 50.0)],
        wide_band=True,
    )


@pytest.fixture(scope="module")
def trapping_branches():
    """Toy chain N = 10 swept across the trapping transition"""
    return sweep(SweepGrid.linspace("alpha", 0.0, 30.0, 301, ToyChainSpec.centered(10)), workers=1)


class TestScattering:
    """Test S-matrix, delay time and phase shift"""

    def test_breit_wigner(self, tolerances):
        """Test case where one resonance is unitary with peak delay 4/Γ - PASS scenario"""
        series = scattering_series(_single(), np.linspace(-5.0, 5.0, 10001), tolerances=tolerances, workers=1)
        assert series.max_unitarity_defect <= 1e-12
        delay = time_delay(series, tolerances)
        assert float(np.max(delay)) == pytest.approx(4.0, rel=1e-3)
        assert series.energies[int(np.argmax(delay))] == pytest.approx(0.0, abs=1e-3)

    def test_phase_shift_excursion(self, tolerances):
        """Test case where δ rises by nearly π across an isolated resonance - PASS scenario"""
        series = scattering_series(_single(), np.linspace(-5.0, 5.0, 2001), tolerances=tolerances, workers=1)
        expected = 2.0 * math.atan(10.0) / math.pi
        assert phase_shift_excursion(series) == pytest.approx(expected, rel=1e-9)

    def test_unitarity_two_channels(self, rng, tolerances):
        """Test case where random wide-band couplings give S†S = I - PASS scenario"""
        spec = BandModelSpec(
            n=3,
            c=2,
            e_b=[-1.0, 0.2, 1.3],
            gamma0=rng.uniform(0.1, 1.0, (3, 2)).tolist(),
            bands=[(-50.0, 50.0), (-50.0, 50.0)],
            wide_band=True,
        )
        series = scattering_series(spec, np.linspace(-3.0, 3.0, 301), pair=(0, 1), tolerances=tolerances, workers=1)
        assert series.max_unitarity_defect <= tolerances.unitarity_tol

    def test_channel_pair_required(self, tolerances):
        """Test case where a two-channel series needs a channel pair - FAIL scenario"""
        with pytest.raises(DomainError):
            scattering_series(_two_channel([0.0], 1.0), [0.0, 1.0], tolerances=tolerances, workers=1)

    def test_pole_on_real_axis(self, tolerances):
        """Test case where an uncoupled state puts a pole on the energy axis - FAIL scenario"""
        with pytest.raises(PoleError):
            s_matrix(_single(coupling=0.0, e_b=0.3), 0.3, tolerances)

    def test_grid_too_coarse(self, tolerances):
        """Test case where a narrow resonance between samples cannot be unwrapped - FAIL scenario"""
        series = scattering_series(_single(coupling=0.1), np.linspace(-1.0, 1.0, 5), tolerances=tolerances, workers=1)
        with pytest.raises(GridTooCoarseError):
            time_delay(series, tolerances)


class TestPhaseLapse:
    """Test detection of transmission phase lapses"""

    def test_single_valley(self, tolerances):
        """Test case where two resonances give one lapse of -π at the transmission zero - PASS scenario"""
        spec = _two_channel([-0.5, 0.5], 2.0)
        series = scattering_series(spec, np.linspace(-1.5, 1.5, 3000), pair=(0, 1), tolerances=tolerances, workers=1)
        lapses = phase_lapse_scan(series, tolerances)
        assert len(lapses) == 1
        lapse = lapses[0]
        assert lapse.jump == pytest.approx(-math.pi, abs=tolerances.lapse_tol)
        assert lapse.energy == pytest.approx(0.0, abs=1e-3)
        assert lapse.left_peak == pytest.approx(-0.5, abs=1e-3)
        assert lapse.right_peak == pytest.approx(0.5, abs=1e-3)
        assert lapse.min_transmission < 0.05

    def test_single_resonance(self, tolerances):
        """Test case where one peak has no valley to lapse in - PASS scenario"""
        series = scattering_series(_two_channel([0.0], 1.0), np.linspace(-2.0, 2.0, 401), pair=(0, 1), tolerances=tolerances, workers=1)
        assert phase_lapse_scan(series, tolerances) == []


class TestInternalWavefunction:
    """Test the mode expansion of the internal wavefunction"""

    def test_resolvent_identity(self, rng, tolerances):
        """Test case where the mode expansion equals (E - H_eff)⁻¹γ - PASS scenario"""
        spec = BandModelSpec(
            n=4,
            c=2,
            e_b=[-1.5, -0.2, 0.4, 1.7],
            gamma0=rng.uniform(0.1, 1.0, (4, 2)).tolist(),
            bands=[(-10.0, 10.0), (-10.0, 10.0)],
            wide_band=True,
        )
        h = build_heff_band(spec)
        modes = solve_modes(h, tolerances)
        for energy in (-1.0, 0.0, 0.9):
            psi = internal_wavefunction(modes, spec.couplings, energy, channel=1, tolerances=tolerances)
            direct = np.linalg.solve(energy * np.eye(4) - h.entries, spec.couplings[:, 1].astype(complex))
            np.testing.assert_allclose(psi, direct, rtol=1e-10, atol=1e-12)

    def test_ep_flagged_refused(self, tolerances):
        """Test case where the expansion is undefined at an EP - FAIL scenario"""
        modes = solve_modes(build(TwoLevelSpec(eps1=1.0, eps2=-1.0, omega=1j)), tolerances)
        with pytest.raises(ContractError):
            internal_wavefunction(modes, [1.0, 0.0], 0.5, tolerances=tolerances)

    def test_on_pole(self, tolerances):
        """Test case where E equals a real eigenvalue - FAIL scenario"""
        modes = solve_modes(Matrix.of(np.diag([0.5, -0.5])), tolerances)
        with pytest.raises(PoleError):
            internal_wavefunction(modes, [1.0, 1.0], 0.5, tolerances=tolerances)

    def test_weights(self, tolerances):
        """Test case where a single mode weight is |γ/(E - z)| - PASS scenario"""
        spec = _single(coupling=1.0, e_b=0.0)
        modes = solve_modes(build_heff_band(spec), tolerances)
        assert weights_from_coupling(modes, spec.couplings, 0.0) == [pytest.approx(2.0)]


class TestPhaseRigidityRho:
    """Test the wavefunction phase rigidity ρ"""

    def test_real_vector(self):
        """Test case where a real wavefunction has ρ = 1 - PASS scenario"""
        assert rho_phase_rigidity([0.3, -1.2, 0.5]) == pytest.approx(1.0)

    def test_global_phase_ignored(self):
        """Test case where a global phase does not change ρ - PASS scenario"""
        psi = np.array([0.3, -1.2, 0.5]) * np.exp(0.7j)
        assert rho_phase_rigidity(psi) == pytest.approx(1.0)

    def test_chiral_vector(self):
        """Test case where (1, i) has ρ = 0 - PASS scenario"""
        assert rho_phase_rigidity([1.0, 1j]) == pytest.approx(0.0, abs=1e-15)

    def test_zero_vector(self):
        """Test case where ρ of a zero vector is undefined - FAIL scenario"""
        with pytest.raises(DomainError):
            rho_phase_rigidity([0.0, 0.0])

    def test_series_bounds(self):
        """Test case where ρ(E) stays within [0, 1] across overlapping resonances - PASS scenario"""
        spec = BandModelSpec(
            n=2, c=1, e_b=[-0.2, 0.2], gamma0=[[1.0], [0.8]], bands=[(-5.0, 5.0)], wide_band=True
        )
        series = rigidity_series(spec, np.linspace(-1.0, 1.0, 41), workers=1)
        assert series.name == "rho"
        assert all(0.0 <= v <= 1.0 for v in series.values)
        assert min(series.values) < 1.0

    def test_series_at_a_pole(self):
        """Test case where a decoupled state's energy makes the resolvent singular - FAIL scenario"""
        spec = BandModelSpec(n=2, c=1, e_b=[0.8, 1.0], gamma0=[[0.3], [0.0]], bands=[(0.0, 2.0)], wide_band=True)
        with pytest.raises(PoleError):
            rigidity_series(spec, np.array([0.5, 1.0, 1.5]), workers=1)


class TestDecayRate:
    """Test the non-exponential decay rate"""

    def test_single_mode(self):
        """Test case where one mode decays at exactly Γ - PASS scenario"""
        result = decay_rate([0.7], [1.0], np.linspace(0.0, 50.0, 101))
        assert all(r == 0.7 for r in result.rate)
        assert result.population[-1] == pytest.approx(math.exp(-35.0))

    def test_two_modes(self):
        """Test case where the rate falls from the weighted mean to the slowest width - PASS scenario"""
        result = decay_rate([1.0, 0.1], [1.0, 1.0], np.linspace(0.0, 200.0, 201))
        assert result.rate[0] == pytest.approx(0.55)
        assert result.rate[-1] == pytest.approx(0.1, abs=1e-12)
        assert all(b <= a + 1e-15 for a, b in zip(result.rate, result.rate[1:]))

    def test_unpopulated_slow_mode(self):
        """Test case where a zero-weight slow mode leaves the rate finite at long times - PASS scenario"""
        result = decay_rate([0.1, 0.3], [0.0, 1.0], np.linspace(0.0, 5000.0, 11))
        assert all(math.isfinite(r) for r in result.rate)
        assert result.rate == [pytest.approx(0.3)] * 11

    def test_bounds_and_long_time_limit(self, rng):
        """Test case where k_gr falls monotonically inside [Γ_min, Γ_max] towards Γ_min - PASS scenario"""
        widths = [0.2, 0.5, 0.9, 1.4]
        weights = rng.normal(size=4) + 1j * rng.normal(size=4)
        result = decay_rate(widths, weights, np.linspace(0.0, 1000.0, 1001))
        assert all(0.2 - 1e-12 <= r <= 1.4 + 1e-12 for r in result.rate)
        assert all(b <= a + 1e-12 for a, b in zip(result.rate, result.rate[1:]))
        assert result.rate[-1] == pytest.approx(0.2, abs=1e-12)

    def test_near_exceptional_point(self, tolerances):
        """Test case where coupling weights 1e-4 past the N = 2 EP give a finite bounded rate - PASS scenario"""
        alpha = 2.0 + 1e-4
        modes = solve_modes(build(ToyChainSpec.centered(2, spacing=2.0, alpha=alpha)), tolerances)
        weights = weights_from_coupling(modes, math.sqrt(alpha) * np.ones(2), energy=0.0)
        result = decay_rate(modes, weights, np.linspace(0.0, 2000.0, 201))
        g_min, g_max = min(result.widths), max(result.widths)
        assert g_max - g_min == pytest.approx(2.0 * math.sqrt(alpha**2 - 4.0), rel=1e-6)
        assert all(math.isfinite(r) and g_min - 1e-12 <= r <= g_max + 1e-12 for r in result.rate)
        assert all(b <= a + 1e-12 for a, b in zip(result.rate, result.rate[1:]))
        assert result.rate[-1] == pytest.approx(g_min, abs=1e-12)

    def test_modeset_input(self, tolerances):
        """Test case where widths are read from a ModeSet - PASS scenario"""
        modes = solve_modes(Matrix.of(np.diag([0.0 - 0.25j, 1.0 - 0.5j])), tolerances)
        result = decay_rate(modes, [1.0, 0.0], [0.0, 1.0])
        assert result.widths == [pytest.approx(0.5), pytest.approx(1.0)]
        assert result.rate == [pytest.approx(0.5), pytest.approx(0.5)]

    def test_gain_mode_refused(self):
        """Test case where a negative width is a domain error - FAIL scenario"""
        with pytest.raises(DomainError):
            decay_rate([0.5, -0.1], [1.0, 1.0], [0.0])

    def test_zero_weights_refused(self):
        """Test case where no mode is populated - FAIL scenario"""
        with pytest.raises(DomainError):
            decay_rate([0.5, 0.1], [0.0, 0.0], [0.0])

    def test_length_mismatch(self):
        """Test case where weights do not match the modes - FAIL scenario"""
        with pytest.raises(DomainError):
            decay_rate([0.5, 0.1], [1.0], [0.0])


class TestTrappingDiagnostics:
    """Test the order parameter and average rate of the trapping transition"""

    def test_transition_detected(self, trapping_branches, tolerances):
        """Test case where Γ₀/N bends into a straight line past alpha_cr - PASS scenario"""
        result = order_parameter(trapping_branches, tolerances)
        assert result.status == "transition"
        assert 0.3 < result.alpha_cr < 2.0
        assert result.post_critical_r2 > 0.99
        assert result.localized_states[-1] == 9

    def test_too_few_samples(self, tolerances):
        """Test case where three samples cannot locate a transition - PASS scenario"""
        branches = sweep(SweepGrid.linspace("alpha", 0.0, 2.0, 3, ToyChainSpec.centered(4)), tolerances, workers=1)
        result = order_parameter(branches, tolerances)
        assert result.status == "inconclusive"
        assert result.alpha_cr is None

    def test_average_rate(self, trapping_branches):
        """Test case where the trapped mean width saturates and then falls - PASS scenario"""
        report = average_rate_vs_alpha(trapping_branches)
        assert report.gamma_av[0] == 0.0
        assert report.tau_av[0] == math.inf
        assert report.saturation_alpha is not None
        assert report.gamma_av[-1] < max(report.gamma_av)

    def test_two_state_transition_at_ep(self, tolerances):
        """Test case where N = 2 puts alpha_cr on the EP at α = 2 - PASS scenario"""
        alphas = np.linspace(0.0, 4.0, 400)
        grid = SweepGrid.linspace("alpha", 0.0, 4.0, len(alphas), ToyChainSpec.centered(2, spacing=2.0))
        result = order_parameter(sweep(grid, tolerances, workers=1), tolerances)
        assert result.status == "transition"
        assert abs(result.alpha_cr - 2.0) <= 2.0 * (alphas[1] - alphas[0])

    def test_two_state_average_rate(self, tolerances):
        """Test case where N = 2 follows α below the EP and α - √(α² - 4) beyond it - PASS scenario"""
        alphas = np.linspace(0.0, 4.0, 40)
        grid = SweepGrid.linspace("alpha", 0.0, 4.0, len(alphas), ToyChainSpec.centered(2, spacing=2.0))
        report = average_rate_vs_alpha(sweep(grid, tolerances, workers=1), tolerances)
        below = alphas < 2.0
        np.testing.assert_allclose(np.array(report.gamma_av)[below], alphas[below], atol=1e-10)
        beyond = alphas[~below]
        np.testing.assert_allclose(np.array(report.gamma_av)[~below], beyond - np.sqrt(beyond**2 - 4.0), atol=1e-8)
        assert report.broad_excluded == [bool(not b) for b in below]
        assert abs(report.saturation_alpha - 2.0) <= alphas[1] - alphas[0]
