import numpy as np
import pytest

from eptrap.errors import ContractError, DimensionError, IllConditionedError, NotAnEPError
from eptrap.linalg import (
    EigenPair,
    Matrix,
    c_normalize,
    c_product_matrix,
    eig,
    hessenberg,
    jordan_chain,
)
from eptrap.models import TwoLevelSpec, build, closed_form_two_level


def _random_complex(rng, size):
    return rng.normal(size=size) + 1j * rng.normal(size=size)


class TestMatrix:
    """Test matrix validation"""

    def test_non_square_rejected(self):
        """Test case where a 2×3 input is refused - FAIL scenario"""
        with pytest.raises(DimensionError):
            Matrix.of(np.zeros((2, 3)))

    def test_non_finite_rejected(self):
        """Test case where a NaN entry is refused - FAIL scenario"""
        with pytest.raises(ContractError):
            Matrix.of([[1.0, np.nan], [0.0, 1.0]])

    def test_false_symmetric_flag_rejected(self):
        """Test case where the symmetric flag contradicts the entries - FAIL scenario"""
        with pytest.raises(ContractError):
            Matrix.of([[1.0, 2.0], [3.0, 1.0]], symmetric=True)

    def test_symmetry_detected(self):
        """Test case where complex symmetry is detected automatically - PASS scenario"""
        assert Matrix.of([[1.0, 1j], [1j, -1.0]]).symmetric
        assert not Matrix.of([[1.0, 1j], [-1j, -1.0]]).symmetric

    def test_scalar_promoted(self):
        """Test case where a scalar becomes a 1×1 matrix - PASS scenario"""
        m = Matrix.of(2 + 1j)
        assert m.n == 1
        assert m.scale == pytest.approx(abs(2 + 1j))


class TestHessenberg:
    """Test Hessenberg reduction"""

    def test_diagonal_unchanged(self):
        """Test case where a diagonal input is already Hessenberg - PASS scenario"""
        d = np.diag([1.0, 2.0 - 0.5j, -3.0])
        h, q = hessenberg(Matrix.of(d))
        np.testing.assert_allclose(np.abs(h.entries), np.abs(d), atol=1e-14)
        np.testing.assert_allclose(np.abs(q.entries), np.eye(3), atol=1e-14)

    def test_random_reconstruction(self, rng):
        """Test case where Q·H·Q† rebuilds a random 6×6 matrix - PASS scenario"""
        m = Matrix.of(_random_complex(rng, (6, 6)))
        h, q = hessenberg(m)
        assert np.all(np.tril(h.entries, -2) == 0)
        recon = q.entries @ h.entries @ q.entries.conj().T
        assert np.linalg.norm(recon - m.entries) <= 1e-12 * m.frobenius

    def test_scalar(self):
        """Test case where the 1×1 reduction is trivial - PASS scenario"""
        h, q = hessenberg(Matrix.of([[2 + 1j]]))
        assert h.entries[0, 0] == pytest.approx(2 + 1j)
        assert abs(q.entries[0, 0]) == pytest.approx(1.0)


class TestEig:
    """Test the eigen-solver against closed forms and sum rules"""

    def test_diagonal(self, tolerances):
        """Test case where a diagonal matrix returns its entries in Re order - PASS scenario"""
        pairs = eig(Matrix.of(np.diag([2 - 0.5j, 1.0])), tolerances)
        assert [p.value for p in pairs] == [pytest.approx(1.0), pytest.approx(2 - 0.5j)]
        assert abs(pairs[0].right[1]) == pytest.approx(1.0)
        assert abs(pairs[1].right[0]) == pytest.approx(1.0)
        assert pairs[1].width == pytest.approx(1.0)

    def test_symmetric_two_level(self, tolerances):
        """Test case where ε₁ = ε₂ = 0, ω = 0.5 gives ±0.5 - PASS scenario"""
        pairs = eig(build(TwoLevelSpec(eps1=0, eps2=0, omega=0.5)), tolerances)
        assert [p.value for p in pairs] == [pytest.approx(-0.5), pytest.approx(0.5)]

    def test_two_level_closed_form(self, rng, tolerances):
        """Test case where random 2×2 spectra match the closed form - PASS scenario"""
        for _ in range(200):
            eps1, eps2, omega = _random_complex(rng, 3)
            m = build(TwoLevelSpec(eps1=eps1, eps2=eps2, omega=omega))
            got = sorted((p.value for p in eig(m, tolerances)), key=lambda z: (z.real, z.imag))
            ref = closed_form_two_level(eps1, eps2, omega)
            want = sorted([ref.z_plus, ref.z_minus], key=lambda z: (z.real, z.imag))
            assert max(abs(a - b) for a, b in zip(got, want)) <= 1e-12 * m.scale

    @pytest.mark.parametrize(
        "entries",
        [[[1.0, 1j], [1j, -1.0]], [[1j, 1.0], [1.0, -1j]]],
        ids=["two-level-ep", "pt-threshold"],
    )
    def test_exactly_defective(self, entries, tolerances):
        """Test case where a 2×2 Jordan block gives finite pairs sharing one eigenvector - PASS scenario"""
        m = Matrix.of(np.array(entries, dtype=complex))
        pairs = eig(m, tolerances)
        assert len(pairs) == 2
        for p in pairs:
            assert abs(p.value) <= 1e-7
            assert np.all(np.isfinite(p.right)) and np.all(np.isfinite(p.left))
            assert p.residual <= tolerances.eig_tol * m.frobenius
            assert np.linalg.norm(m.entries @ p.right) <= 1e-7
        assert abs(np.vdot(pairs[0].right, pairs[1].right)) == pytest.approx(1.0, abs=1e-6)

    def test_trace_sum_rule(self, rng, tolerances):
        """Test case where Σ z_k equals the trace of random matrices - PASS scenario"""
        for n in (2, 5, 9, 16):
            m = Matrix.of(_random_complex(rng, (n, n)))
            total = sum(p.value for p in eig(m, tolerances))
            assert abs(total - np.trace(m.entries)) <= 1e-10 * m.frobenius

    def test_residual_bound(self, rng, tolerances):
        """Test case where each pair's residual stays below eig_tol·‖H‖_F - PASS scenario"""
        m = Matrix.of(_random_complex(rng, (8, 8)))
        for p in eig(m, tolerances):
            assert p.residual <= tolerances.eig_tol * m.frobenius
            np.testing.assert_allclose(p.left @ m.entries, p.value * p.left, atol=1e-8 * m.frobenius)

    def test_hermitian_real_spectrum(self, rng, tolerances):
        """Test case where a Hermitian matrix has real eigenvalues - PASS scenario"""
        a = _random_complex(rng, (6, 6))
        pairs = eig(Matrix.of(a + a.conj().T), tolerances)
        assert max(abs(p.value.imag) for p in pairs) <= 1e-10


class TestCNormalization:
    """Test biorthogonal c-normalization"""

    def test_biorthogonality(self, rng, tolerances):
        """Test case where ⟨φ_k*|φ_l⟩ = δ_kl for a complex symmetric matrix - PASS scenario"""
        a = _random_complex(rng, (5, 5))
        m = Matrix.of(a + a.T)
        pairs = c_normalize(eig(m, tolerances), m.scale, tolerances)
        np.testing.assert_allclose(c_product_matrix(pairs), np.eye(5), atol=1e-10)

    def test_hermitian_limit(self, tolerances):
        """Test case where the c-norm equals the Euclidean norm for a real symmetric matrix - PASS scenario"""
        m = Matrix.of([[1.0, 0.3], [0.3, -1.0]])
        for p in c_normalize(eig(m, tolerances), m.scale, tolerances):
            assert np.linalg.norm(p.right) == pytest.approx(1.0)

    def test_near_ep(self, tolerances):
        """Test case where biorthogonality survives close to an EP while ⟨φ|φ⟩ grows - PASS scenario"""
        m = build(TwoLevelSpec(eps1=1.0, eps2=-1.0, omega=1j * (1.0 - 1e-4)))
        pairs = c_normalize(eig(m, tolerances), m.scale, tolerances)
        np.testing.assert_allclose(c_product_matrix(pairs), np.eye(2), atol=1e-10)
        assert all(np.linalg.norm(p.right) ** 2 > 10.0 for p in pairs)

    def test_permutation_equivariance(self, tolerances):
        """Test case where reordering the input only reorders the output - PASS scenario"""
        m = Matrix.of([[1.0, 0.2j], [0.2j, -0.5 - 0.1j]])
        pairs = c_normalize(eig(m, tolerances), m.scale, tolerances)
        swapped = c_normalize(list(reversed(pairs)), m.scale, tolerances)
        for a, b in zip(pairs, reversed(swapped)):
            np.testing.assert_allclose(a.right, b.right, atol=1e-14)

    def test_exceptional_point_refused(self, tolerances):
        """Test case where coalesced eigenvalues cannot be c-normalized - FAIL scenario"""
        m = build(TwoLevelSpec(eps1=1.0, eps2=-1.0, omega=1j))
        with pytest.raises(IllConditionedError):
            c_normalize(eig(m, tolerances), m.scale, tolerances)

    def test_gap_relative_to_matrix_norm(self, tolerances):
        """Test case where small eigenvalues of a large matrix are judged against ‖H‖_F - FAIL scenario"""
        a, b = 1e4, 1e-14
        m = Matrix.of([[0.0, a], [b, 0.0]])
        z = complex(np.sqrt(a * b))
        pairs = [
            EigenPair(value=-z, right=[a, -z], left=[-z, a], residual=0.0),
            EigenPair(value=z, right=[a, z], left=[z, a], residual=0.0),
        ]
        assert len(c_normalize(pairs, 1.0, tolerances)) == 2
        with pytest.raises(IllConditionedError):
            c_normalize(pairs, m, tolerances)
        with pytest.raises(IllConditionedError):
            c_normalize(pairs, m.scale, tolerances)


class TestJordanChain:
    """Test the Jordan chain at a defective eigenvalue"""

    def test_canonical_block(self, tolerances):
        """Test case where [[0,1],[0,0]] yields φ = (1,0), φ_a = (0,1) - PASS scenario"""
        solve = jordan_chain(Matrix.of([[0.0, 1.0], [0.0, 0.0]]), 0.0, tolerances)
        np.testing.assert_allclose(solve.eigenvector, [1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(solve.associated, [0.0, 1.0], atol=1e-12)
        assert solve.defect_residual <= 1e-12

    def test_two_level_ep(self, tolerances):
        """Test case where the analytic EP ω = i of ε = ±1 gives a Jordan chain - PASS scenario"""
        m = build(TwoLevelSpec(eps1=1.0, eps2=-1.0, omega=1j))
        solve = jordan_chain(m, 0.0, tolerances)
        assert solve.null_residual <= 1e-10
        assert solve.defect_residual <= 1e-8
        # the EP state is self-orthogonal
        assert abs(np.dot(solve.eigenvector, solve.eigenvector)) <= 1e-10

    def test_diagonalizable_refused(self, tolerances):
        """Test case where a full-rank shifted matrix is not an EP - FAIL scenario"""
        with pytest.raises(NotAnEPError):
            jordan_chain(Matrix.of(np.diag([1.0, 2.0])), 0.5, tolerances)

    def test_identity_refused(self, tolerances):
        """Test case where a doubly degenerate but diagonalizable point is not an EP - FAIL scenario"""
        with pytest.raises(NotAnEPError):
            jordan_chain(Matrix.of(np.eye(2)), 1.0, tolerances)
