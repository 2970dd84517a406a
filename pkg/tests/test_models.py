import math

import numpy as np
import pytest

from eptrap.errors import ConfigError, DomainError
from eptrap.linalg import eig
from eptrap.models import (
    BandModelSpec,
    PTSpec,
    ThreeLevelSpec,
    ToyChainSpec,
    TwoLevelSpec,
    apply_overrides,
    build,
    build_heff_band,
    closed_form_two_level,
    lamb_shift,
    parse_complex,
    pv_quadrature,
    pv_self_energy,
    residuum_matrix,
    self_consistent_poles,
    spec_from_dict,
    spin_swap_decoherence_rate,
    spin_swap_frequency,
    spin_swap_spec,
)

LN3_OVER_2PI = math.log(3.0) / (2.0 * math.pi)


def _box(e_b, gamma0, bands, energy=0.0, wide_band=False):
    return BandModelSpec(
        n=len(e_b), c=len(bands), e_b=e_b, gamma0=gamma0, bands=bands, energy=energy, wide_band=wide_band
    )


class TestComplexParsing:
    """Test the accepted complex-number spellings"""

    @pytest.mark.parametrize(
        "raw, expected",
        [
            (1.5, 1.5),
            ("1-0.5j", 1 - 0.5j),
            ("0.9i", 0.9j),
            ([1.0, -2.0], 1 - 2j),
            ({"re": 0.5, "im": 1.0}, 0.5 + 1j),
        ],
    )
    def test_spellings(self, raw, expected):
        """Test case where every supported spelling parses - PASS scenario"""
        assert parse_complex(raw) == expected

    def test_garbage_rejected(self):
        """Test case where an unparseable string is refused - FAIL scenario"""
        with pytest.raises(ValueError):
            parse_complex("one plus i")


class TestSpecs:
    """Test model spec validation and overrides"""

    def test_spec_from_dict(self):
        """Test case where a config model section validates - PASS scenario"""
        spec = spec_from_dict({"kind": "two_level", "eps1": 1, "eps2": "2-0.1j", "omega": 0})
        assert isinstance(spec, TwoLevelSpec)
        assert spec.eps2 == 2 - 0.1j

    def test_unknown_kind(self):
        """Test case where an unknown model kind is a config error - FAIL scenario"""
        with pytest.raises(ConfigError, match="unknown model kind"):
            spec_from_dict({"kind": "lattice"})

    def test_extra_field(self):
        """Test case where an unexpected field is a config error - FAIL scenario"""
        with pytest.raises(ConfigError):
            spec_from_dict({"kind": "pt", "gamma": 1, "omega": 1, "loss": 2})

    def test_toy_chain_lengths(self):
        """Test case where h0_diag does not match n - FAIL scenario"""
        with pytest.raises(ConfigError):
            spec_from_dict({"kind": "toy_chain", "n": 3, "h0_diag": [0, 1], "v": [1, 1, 1], "alpha": 1})

    def test_empty_band(self):
        """Test case where a reversed channel window is refused - FAIL scenario"""
        with pytest.raises(ValueError):
            _box([0.0], [[1.0]], [(2.0, 0.0)])

    def test_overrides(self):
        """Test case where dotted overrides reach nested parameters - PASS scenario"""
        spec = ThreeLevelSpec(two_level=TwoLevelSpec(eps1=0, eps2=0, omega=0.1), eps3=2, w13=0.1, w23=0.1)
        changed = apply_overrides(spec, {"two_level.omega": 0.3, "w23": "0.2"})
        assert changed.two_level.omega == 0.3
        assert changed.w23 == 0.2
        assert spec.two_level.omega == 0.1

    def test_unknown_override(self):
        """Test case where an override names a missing parameter - FAIL scenario"""
        with pytest.raises(ConfigError, match="unknown parameter"):
            apply_overrides(TwoLevelSpec(eps1=0, eps2=0, omega=0), {"delta": 1})

    def test_kind_not_overridable(self):
        """Test case where the model kind cannot be changed by an override - FAIL scenario"""
        with pytest.raises(ConfigError):
            apply_overrides(TwoLevelSpec(eps1=0, eps2=0, omega=0), {"kind": "pt"})


class TestBuilders:
    """Test model matrix assembly"""

    def test_two_level_diagonal(self):
        """Test case where ω = 0 gives diag(ε₁, ε₂) - PASS scenario"""
        m = build(TwoLevelSpec(eps1=1, eps2=2, omega=0))
        np.testing.assert_array_equal(m.entries, np.diag([1.0, 2.0]))
        assert m.symmetric

    def test_toy_chain_substitution(self):
        """Test case where N = 2, α = 1 gives the -i/2 rank-one matrix - PASS scenario"""
        m = build(ToyChainSpec(n=2, h0_diag=[0, 0], v=[1, 1], alpha=1))
        np.testing.assert_allclose(m.entries, np.full((2, 2), -0.5j))

    def test_toy_chain_width_sum(self, tolerances):
        """Test case where Σ Γ_k = α‖V‖² for the centered chain - PASS scenario"""
        spec = ToyChainSpec.centered(10, alpha=3.0)
        widths = [p.width for p in eig(build(spec), tolerances)]
        assert sum(widths) == pytest.approx(30.0, rel=1e-10)

    def test_pt_below_threshold(self, tolerances):
        """Test case where γ = 1, ω = 1 gives the real pair ±√(3/4) - PASS scenario"""
        values = [p.value for p in eig(build(PTSpec(gamma=1.0, omega=1.0)), tolerances)]
        assert values[0] == pytest.approx(-math.sqrt(0.75), abs=1e-12)
        assert values[1] == pytest.approx(math.sqrt(0.75), abs=1e-12)

    def test_three_level(self):
        """Test case where the third state couples through w13 and w23 - PASS scenario"""
        spec = ThreeLevelSpec(two_level=TwoLevelSpec(eps1=0.5, eps2=-0.5, omega=0.1), eps3=2, w13=0.1, w23=0.2)
        m = build(spec)
        assert m.entries[0, 2] == 0.1 and m.entries[2, 1] == 0.2 and m.entries[2, 2] == 2

    def test_build_with_overrides(self):
        """Test case where build applies overrides before assembly - PASS scenario"""
        m = build(TwoLevelSpec(eps1=0, eps2=0, omega=0), {"omega": 0.5})
        assert m.entries[0, 1] == 0.5


class TestPrincipalValue:
    """Test principal-value self-energies"""

    def test_symmetric_midpoint(self):
        """Test case where E at the band centre cancels the PV - PASS scenario"""
        assert pv_self_energy(_box([0.0], [[1.0]], [(0.0, 2.0)], energy=1.0), 0, 0) == pytest.approx(0.0, abs=1e-15)

    def test_box_closed_form(self, tolerances):
        """Test case where E = 1.5 in [0, 2] gives ln 3/2π in both evaluations - PASS scenario"""
        spec = _box([0.0], [[1.0]], [(0.0, 2.0)], energy=1.5)
        assert pv_self_energy(spec, 0, 0) == pytest.approx(LN3_OVER_2PI, rel=1e-12)
        assert pv_quadrature(spec, 0, 0, tolerances=tolerances) == pytest.approx(LN3_OVER_2PI, rel=1e-6)

    def test_zero_coupling(self):
        """Test case where γ⁰ = 0 gives no shift even outside the band - PASS scenario"""
        assert pv_self_energy(_box([0.0], [[0.0]], [(0.0, 2.0)], energy=5.0), 0, 0) == 0.0

    def test_outside_band(self):
        """Test case where E outside a coupled channel is a domain error - FAIL scenario"""
        with pytest.raises(DomainError):
            pv_self_energy(_box([0.0], [[1.0]], [(0.0, 2.0)], energy=3.0), 0, 0)

    def test_shaped_profile(self, tolerances):
        """Test case where a linear profile adds the band width to the box value - PASS scenario"""
        spec = _box([0.0], [[1.0]], [(0.0, 2.0)], energy=1.5)
        # PV∫ E'/(E - E') = E·PV∫ 1/(E - E') - (ε' - ε)
        expected = 1.5 * LN3_OVER_2PI - 2.0 / (2.0 * math.pi)
        assert pv_quadrature(spec, 0, 0, profile=lambda x: x, tolerances=tolerances) == pytest.approx(expected, rel=1e-6)


class TestEffectiveHamiltonian:
    """Test the band-model effective Hamiltonian"""

    def test_residuum_one_channel(self):
        """Test case where γ⁰ = (1, 2) gives -(1/2)γγᵀ - PASS scenario"""
        m = residuum_matrix(_box([0.0, 0.0], [[1.0], [2.0]], [(-1.0, 1.0)]))
        np.testing.assert_allclose(m.entries.real, -0.5 * np.array([[1.0, 2.0], [2.0, 4.0]]))

    def test_residuum_orthogonal_channels(self):
        """Test case where orthogonal channel columns give -(1/2)·I - PASS scenario"""
        m = residuum_matrix(_box([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], [(-1.0, 1.0), (-1.0, 1.0)]))
        np.testing.assert_allclose(m.entries.real, -0.5 * np.eye(2))

    def test_closed_system_limit(self, tolerances):
        """Test case where γ⁰ = 0 leaves diag(E^B) with zero widths - PASS scenario"""
        spec = _box([-1.0, 0.5], [[0.0], [0.0]], [(-2.0, 2.0)])
        pairs = eig(build_heff_band(spec), tolerances)
        assert [p.value for p in pairs] == [pytest.approx(-1.0), pytest.approx(0.5)]
        assert all(p.width == 0.0 for p in pairs)

    def test_single_state(self):
        """Test case where N = 1 gives E^B + shift - (i/2)g² - PASS scenario"""
        spec = _box([0.5], [[1.0]], [(0.0, 2.0)], energy=1.5)
        z = build_heff_band(spec).entries[0, 0]
        assert z == pytest.approx(0.5 + LN3_OVER_2PI - 0.5j)

    def test_symmetric_pair_closed_form(self, tolerances):
        """Test case where a 2-state band model matches the 2×2 closed form - PASS scenario"""
        spec = _box([-0.3, 0.3], [[0.6], [0.6]], [(-4.0, 4.0)], energy=0.0)
        entries = build_heff_band(spec).entries
        ref = closed_form_two_level(entries[0, 0], entries[1, 1], entries[0, 1])
        values = sorted((p.value for p in eig(build_heff_band(spec), tolerances)), key=lambda z: z.real)
        expected = sorted([ref.z_plus, ref.z_minus], key=lambda z: z.real)
        assert values == [pytest.approx(v, abs=1e-12) for v in expected]


class TestClosedForms:
    """Test the two-level regime classification and spin-swap formulas"""

    def test_regimes(self):
        """Test case where Z classifies repulsion, bifurcation and coalescence - PASS scenario"""
        assert closed_form_two_level(1, -1, 0.1).regime == "energy-repulsion"
        assert closed_form_two_level(1j, -1j, 0.1).regime == "width-bifurcation"
        assert closed_form_two_level(1, -1, 1j).regime == "exceptional"

    def test_swap_without_environment(self):
        """Test case where b = 1, k = 0 gives frequency 1 - PASS scenario"""
        assert spin_swap_frequency(1.0, 0.0, 3.0) == pytest.approx(1.0)

    def test_frozen_phase(self):
        """Test case where k/τ = 0.5 > b = 0.3 gives an imaginary frequency 0.4 - PASS scenario"""
        f = spin_swap_frequency(0.3, 1.0, 2.0)
        assert f.real == pytest.approx(0.0, abs=1e-15)
        assert abs(f) == pytest.approx(0.4)
        assert spin_swap_decoherence_rate(0.3, 1.0, 2.0) == pytest.approx(0.1)

    def test_transition_point(self):
        """Test case where b = k/τ gives zero frequency - PASS scenario"""
        assert spin_swap_frequency(0.5, 1.0, 2.0) == pytest.approx(0.0, abs=1e-15)

    def test_swap_frequency_is_half_splitting(self, tolerances):
        """Test case where the swap frequency equals half the two-level splitting - PASS scenario"""
        for b in (0.2, 0.5, 0.9):
            pairs = eig(build(spin_swap_spec(b, 0.4, 1.0)), tolerances)
            splitting = abs(pairs[1].value - pairs[0].value)
            assert splitting / 2.0 == pytest.approx(abs(spin_swap_frequency(b, 0.4, 1.0)), rel=1e-8)

    def test_invalid_exchange_time(self):
        """Test case where a non-positive spin-exchange time is refused - FAIL scenario"""
        with pytest.raises(DomainError):
            spin_swap_frequency(0.3, 1.0, 0.0)


class TestLambShift:
    """Test continuum-induced shifts and self-consistent poles"""

    def test_single_state_shift(self):
        """Test case where one state is shifted by its own principal value - PASS scenario"""
        shift = lamb_shift(_box([0.5], [[1.0]], [(0.0, 2.0)], energy=1.5))
        assert shift.self_energy == [pytest.approx(LN3_OVER_2PI)]
        assert shift.shifts == [pytest.approx(LN3_OVER_2PI)]
        assert shift.collective == [[0.0]]

    def test_collective_part(self):
        """Test case where two coupled states get an off-diagonal principal value - PASS scenario"""
        shift = lamb_shift(_box([-0.2, 0.4], [[0.5], [0.3]], [(-2.0, 2.0)], energy=0.7))
        assert shift.collective[0][1] == pytest.approx(shift.collective[1][0])
        assert shift.collective[0][1] != 0.0
        assert shift.collective[0][0] == 0.0

    def test_self_consistent_wide_band(self):
        """Test case where a wide-band pole is its own fixed point - PASS scenario"""
        poles = self_consistent_poles(_box([0.3], [[1.0]], [(-5.0, 5.0)], wide_band=True))
        assert poles[0] == pytest.approx(0.3 - 0.5j)
