import numpy as np
import pytest

from eptrap.errors import DimensionError
from eptrap.linalg import Matrix, eig
from eptrap.models import ToyChainSpec, TwoLevelSpec, build
from eptrap.nonlinear import linear_projection, solve_nonlinear, source_term
from eptrap.spectra import solve_modes

H0 = np.array([[0.0, 0.3], [0.3, 1.0]], dtype=complex)


class TestSolveNonlinear:
    """Test the damped fixed-point solver"""

    def test_linear_limit(self, tolerances):
        """Test case where W = 0 returns the linear eigenpair - PASS scenario"""
        result = solve_nonlinear(H0, np.zeros((2, 2)), seed=0, tolerances=tolerances)
        linear = eig(Matrix.of(H0), tolerances)[0]
        assert result.converged
        assert result.eigenvalue == pytest.approx(linear.value, abs=1e-12)
        assert abs(np.vdot(linear.right, result.state)) == pytest.approx(1.0, abs=1e-12)

    def test_first_order_shift(self, tolerances):
        """Test case where a weak W shifts ε by -s·Σ|φ_i|⁴ to first order - PASS scenario"""
        linear = eig(Matrix.of(H0), tolerances)[1]
        expected_slope = float(np.sum(np.abs(linear.right) ** 4))
        for s in (1e-3, 5e-4):
            result = solve_nonlinear(H0, s * np.eye(2), seed=1, tolerances=tolerances)
            assert result.converged
            first_order = linear.value - s * expected_slope
            assert abs(result.eigenvalue - first_order) <= 10.0 * s**2

    def test_norm_mode(self, tolerances):
        """Test case where the norm reading shifts ε by exactly -⟨φ|W|φ⟩ - PASS scenario"""
        result = solve_nonlinear(H0, 0.3 * np.eye(2), seed=0, mode="norm", tolerances=tolerances)
        linear = eig(Matrix.of(H0), tolerances)[0]
        assert result.converged
        assert result.mode == "norm"
        assert result.eigenvalue == pytest.approx(linear.value - 0.3, abs=1e-10)

    def test_vector_seed(self, tolerances):
        """Test case where a start vector selects the nearest branch - PASS scenario"""
        result = solve_nonlinear(H0, 1e-3 * np.eye(2), seed=np.array([0.0, 1.0]), tolerances=tolerances)
        assert result.converged
        assert result.eigenvalue.real > 0.5
        assert np.linalg.norm(result.state) == pytest.approx(1.0)

    def test_residual_history(self, tolerances):
        """Test case where the final residual is the last recorded one - PASS scenario"""
        result = solve_nonlinear(H0, 0.05 * np.eye(2), seed=0, tolerances=tolerances)
        assert len(result.residual_history) == result.iterations
        assert result.residual_history[-1] == pytest.approx(result.residual)

    def test_shape_mismatch(self, tolerances):
        """Test case where H₀ and W differ in shape - FAIL scenario"""
        with pytest.raises(DimensionError):
            solve_nonlinear(H0, np.eye(3), tolerances=tolerances)

    @pytest.mark.parametrize("mode", ["componentwise", "norm"])
    def test_near_exceptional_point(self, mode, tolerances):
        """Test case where H₀ sits 1e-3 from an EP and a weak W still converges - PASS scenario"""
        h0 = build(TwoLevelSpec(eps1=1.0, eps2=-1.0, omega=1j * (1.0 + 1e-3))).entries
        s = 1e-4
        result = solve_nonlinear(h0, s * np.eye(2), seed=0, mode=mode, tolerances=tolerances)
        linear = eig(Matrix.of(h0), tolerances)[0]
        assert result.converged
        assert np.isfinite(result.eigenvalue)
        assert np.all(np.isfinite(result.state))
        assert abs(result.eigenvalue - linear.value) <= 10.0 * s
        if mode == "norm":
            assert result.eigenvalue == pytest.approx(linear.value - s, abs=1e-10)


class TestSourceTerm:
    """Test the source term in the biorthogonal mode basis"""

    def test_hermitian_completeness(self, rng, tolerances):
        """Test case where an orthonormal basis reproduces W·φ - PASS scenario"""
        a = rng.normal(size=(4, 4))
        modes = solve_modes(Matrix.of((a + a.T).astype(complex)), tolerances)
        w = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        phi = rng.normal(size=4) + 1j * rng.normal(size=4)
        np.testing.assert_allclose(source_term(phi, w, modes), w @ phi, atol=1e-10)
        np.testing.assert_allclose(linear_projection(phi, w, modes), w @ phi, atol=1e-10)

    def test_open_system_differs(self, tolerances):
        """Test case where non-orthogonal modes separate the source term from the plain projection - PASS scenario"""
        modes = solve_modes(build(ToyChainSpec.centered(3, alpha=1.0)), tolerances)
        w = np.eye(3)
        phi = np.array([1.0, 0.5, -0.2], dtype=complex)
        difference = source_term(phi, w, modes) - linear_projection(phi, w, modes)
        assert np.linalg.norm(difference) > 1e-3

    def test_biorthogonal_bracket(self, rng, tolerances):
        """Test case where the biorthogonal bracket with A = 1, B = 0 is a plain expansion - PASS scenario"""
        a = rng.normal(size=(3, 3))
        modes = solve_modes(Matrix.of((a + a.T).astype(complex)), tolerances)
        w = np.diag([1.0, 2.0, 3.0])
        phi = np.array([0.2, -0.4, 1.0], dtype=complex)
        np.testing.assert_allclose(source_term(phi, w, modes, bracket="biorthogonal"), w @ phi, atol=1e-10)
