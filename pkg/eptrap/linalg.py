"""Dense complex linear algebra for non-Hermitian model Hamiltonians.

The eigensolver is a Hessenberg reduction followed by implicitly shifted
complex QR (Wilkinson shifts). Eigenvectors come from inverse iteration on
the Hessenberg form and are mapped back by the reduction's unitary factor.
Left eigenvectors are taken in the row sense: ``left @ m == z * left``.
"""

import logging
import warnings
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import (
    ContractError,
    ConvergenceError,
    DimensionError,
    IllConditionedError,
    NotAnEPError,
)

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
_EPS = np.finfo(float).eps

# =============================================================================
# PYDANTIC MODELS
# =============================================================================


def _frozen_array(value, ndim: int) -> np.ndarray:
    arr = np.array(value, dtype=complex)
    if arr.ndim != ndim:
        raise DimensionError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


class Matrix(BaseModel):
    """Dense square complex matrix (model units, ħ = 1)"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entries: np.ndarray = Field(description="n×n complex entries")
    symmetric: bool = Field(
        default=False, description="Certifies M = Mᵀ (complex symmetric) within 1e-12"
    )

    @field_validator("entries", mode="before")
    @classmethod
    def _check_entries(cls, value):
        arr = np.array(value, dtype=complex)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise DimensionError(f"matrix must be square and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ContractError("matrix entries must be finite")
        arr.setflags(write=False)
        return arr

    @field_validator("symmetric")
    @classmethod
    def _check_symmetric(cls, flag, info):
        entries = info.data.get("entries")
        if flag and entries is not None and not is_complex_symmetric(entries):
            raise ContractError("matrix flagged symmetric but M != Mᵀ")
        return flag

    @classmethod
    def of(cls, entries, symmetric: Optional[bool] = None) -> "Matrix":
        """Build a Matrix, detecting complex symmetry when not stated"""
        arr = np.array(entries, dtype=complex)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if symmetric is None:
            symmetric = arr.ndim == 2 and arr.shape[0] == arr.shape[1] and is_complex_symmetric(arr)
        return cls(entries=arr, symmetric=symmetric)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def frobenius(self) -> float:
        return float(np.linalg.norm(self.entries))

    @property
    def scale(self) -> float:
        """max(‖M‖_F, 1), the reference magnitude for relative tolerances"""
        return max(self.frobenius, 1.0)


class EigenPair(BaseModel):
    """One eigenvalue z_k = E_k - (i/2)Γ_k with its right and left vectors"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    value: complex = Field(description="Eigenvalue z_k")
    right: np.ndarray = Field(description="Right eigenvector φ_k (column sense)")
    left: np.ndarray = Field(description="Left eigenvector (row sense), left·M = z·left")
    residual: float = Field(description="‖Mφ_k - z_k φ_k‖₂")

    @field_validator("right", "left", mode="before")
    @classmethod
    def _vector(cls, value):
        return _frozen_array(value, 1)

    @property
    def energy(self) -> float:
        return float(self.value.real)

    @property
    def width(self) -> float:
        return float(-2.0 * self.value.imag)

    @property
    def c_product(self) -> complex:
        """⟨φ*|φ⟩ between the stored left and right vectors"""
        return complex(np.dot(self.left, self.right))


class JordanSolve(BaseModel):
    """Jordan chain at a coalesced eigenvalue"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    eigenvalue: complex = Field(description="Coalesced eigenvalue ε₀")
    eigenvector: np.ndarray = Field(description="φ^cr, null vector of M - ε₀")
    associated: np.ndarray = Field(description="φ^cra with (M - ε₀)φ^cra = φ^cr")
    null_residual: float = Field(description="‖(M - ε₀)φ^cr‖₂")
    defect_residual: float = Field(description="‖(M - ε₀)φ^cra - φ^cr‖₂")

    @field_validator("eigenvector", "associated", mode="before")
    @classmethod
    def _vector(cls, value):
        return _frozen_array(value, 1)


# =============================================================================
# HELPERS
# =============================================================================


def is_complex_symmetric(entries: np.ndarray, tol: float = SYMMETRY_TOL) -> bool:
    arr = np.asarray(entries)
    return bool(np.all(np.abs(arr - arr.T) <= tol))


def fix_phase(vector: np.ndarray) -> np.ndarray:
    """Flip sign so the largest-modulus component has argument in (-π/2, π/2]"""
    j = int(np.argmax(np.abs(vector)))
    arg = np.angle(vector[j])
    if arg > np.pi / 2 or arg <= -np.pi / 2:
        return -vector
    return vector


def _as_matrix(m) -> Matrix:
    return m if isinstance(m, Matrix) else Matrix.of(m)


# =============================================================================
# HESSENBERG REDUCTION
# =============================================================================


def hessenberg(m: Matrix) -> Tuple[Matrix, Matrix]:
    """Return (H, Q) with H upper Hessenberg and m = Q·H·Q†"""
    m = _as_matrix(m)
    a = np.array(m.entries)
    h, q = scipy.linalg.hessenberg(a, calc_q=True)
    h = np.array(h, dtype=complex)
    h[np.tril_indices(m.n, -2)] = 0.0
    recon = np.linalg.norm(q @ h @ q.conj().T - a)
    if recon > 1e-12 * max(m.frobenius, _EPS):
        logger.warning(f"⚠️ Hessenberg reconstruction residual {recon:.3e}")
    return Matrix.of(h, symmetric=False), Matrix.of(q, symmetric=False)


# =============================================================================
# SHIFTED QR
# =============================================================================


def _givens(x: complex, y: complex) -> np.ndarray:
    """Unitary G with G·[x, y]ᵀ = [r, 0]ᵀ"""
    ax, ay = abs(x), abs(y)
    r = np.hypot(ax, ay)
    if r == 0.0:
        return np.eye(2, dtype=complex)
    if ax == 0.0:
        c, s = 0.0, np.conj(y) / ay
    else:
        c = ax / r
        s = (x / ax) * np.conj(y) / r
    return np.array([[c, s], [-np.conj(s), c]], dtype=complex)


def _wilkinson_shift(block: np.ndarray) -> complex:
    a, b, c, d = block[0, 0], block[0, 1], block[1, 0], block[1, 1]
    half = (a - d) / 2.0
    disc = np.sqrt(half * half + b * c)
    mu1 = (a + d) / 2.0 + disc
    mu2 = (a + d) / 2.0 - disc
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def schur_qr(h: np.ndarray, q: np.ndarray, max_iters: int) -> Tuple[np.ndarray, np.ndarray]:
    """Complex Schur form of an upper Hessenberg matrix.

    Returns (T, Z) with T upper triangular and Q·H·Q† = Z·T·Z†. Raises
    ConvergenceError carrying the partial form when the sweep budget runs out.
    """
    t = np.array(h, dtype=complex)
    z = np.array(q, dtype=complex)
    n = t.shape[0]
    norm = max(np.linalg.norm(t), np.finfo(float).tiny)
    hi = n - 1
    sweeps = 0
    since_deflation = 0

    while hi > 0:
        lo = hi
        while lo > 0:
            ref = abs(t[lo, lo]) + abs(t[lo - 1, lo - 1])
            if ref == 0.0:
                ref = norm
            if abs(t[lo, lo - 1]) <= _EPS * ref:
                t[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            since_deflation = 0
            continue

        if sweeps >= max_iters:
            raise ConvergenceError(
                f"QR did not converge after {sweeps} sweeps (active block {lo}..{hi})",
                partial_schur=t,
                unitary=z,
            )
        sweeps += 1
        since_deflation += 1

        if since_deflation % 10 == 0:
            shift = t[hi, hi] + 0.75 * abs(t[hi, hi - 1])
        else:
            shift = _wilkinson_shift(t[hi - 1 : hi + 1, hi - 1 : hi + 1])

        x = t[lo, lo] - shift
        y = t[lo + 1, lo]
        for k in range(lo, hi):
            if k > lo:
                x = t[k, k - 1]
                y = t[k + 1, k - 1]
            g = _givens(x, y)
            col0 = lo if k == lo else k - 1
            t[k : k + 2, col0:] = g @ t[k : k + 2, col0:]
            if k > lo:
                t[k + 1, k - 1] = 0.0
            row1 = min(k + 3, hi + 1)
            gh = g.conj().T
            t[:row1, k : k + 2] = t[:row1, k : k + 2] @ gh
            z[:, k : k + 2] = z[:, k : k + 2] @ gh

    logger.debug(f"🔍 QR converged in {sweeps} sweeps for n={n}")
    return t, z


# =============================================================================
# INVERSE ITERATION
# =============================================================================


def _shifted_lu(a: np.ndarray, shift: complex, scale: float):
    """LU of a - shift·I with exactly singular pivots lifted to eps·scale"""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a - shift * np.eye(a.shape[0], dtype=complex), check_finite=False)
    floor = _EPS * max(scale, _EPS)
    pivots = np.diag(lu).copy()
    small = np.flatnonzero(np.abs(pivots) < floor)
    for i in small:
        p = pivots[i]
        lu[i, i] = floor if p == 0 else floor * p / abs(p)
    if small.size:
        logger.debug(f"🔍 Lifted {small.size} singular pivot(s) at shift {complex(shift):.6g}")
    return lu, piv


def _inverse_iteration(
    a: np.ndarray,
    values: Sequence[complex],
    scale: float,
    rng: np.random.Generator,
    cluster_tol: float,
    iterations: int = 3,
) -> List[np.ndarray]:
    """Unit eigenvectors of `a` for each of `values`.

    Within clusters of close eigenvalues each new vector is orthogonalized
    against the cluster's earlier vectors; if that spoils the residual (a
    defective cluster) the plain iterate is kept.
    """
    n = a.shape[0]
    vectors: List[np.ndarray] = []
    delta = 64 * _EPS * scale
    for i, value in enumerate(values):
        cluster = [
            vectors[j] for j in range(i) if abs(values[j] - value) <= cluster_tol
        ]
        lu = _shifted_lu(a, value + delta, scale)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x /= np.linalg.norm(x)
        plain = x
        for _ in range(iterations):
            plain = scipy.linalg.lu_solve(lu, plain, check_finite=False)
            plain /= np.linalg.norm(plain)
        best = plain
        if cluster:
            y = x
            for _ in range(iterations):
                y = scipy.linalg.lu_solve(lu, y, check_finite=False)
                for u in cluster:
                    y = y - np.vdot(u, y) * u
                nrm = np.linalg.norm(y)
                if nrm == 0.0 or not np.isfinite(nrm):
                    break
                y = y / nrm
            else:
                res_plain = np.linalg.norm(a @ plain - value * plain)
                res_orth = np.linalg.norm(a @ y - value * y)
                if res_orth <= max(res_plain, 1e-12 * scale):
                    best = y
        vectors.append(best)
    return vectors


# =============================================================================
# EIGENDECOMPOSITION
# =============================================================================


def _sort_order(values: np.ndarray, scale: float) -> np.ndarray:
    re = np.round(values.real / scale, 10)
    return np.lexsort((values.imag, re))


def eig(m: Matrix, tolerances: Optional[Tolerances] = None) -> List[EigenPair]:
    """All eigenpairs of m, sorted by (Re z, Im z)"""
    m = _as_matrix(m)
    tol = tolerances or DEFAULT_TOLERANCES
    n = m.n
    a = np.array(m.entries)
    scale = m.scale
    frob = m.frobenius

    h, q = hessenberg(m)
    t, _ = schur_qr(h.entries, q.entries, tol.max_qr_iters_factor * n * n)
    values = np.diag(t).copy()
    values = values[_sort_order(values, scale)]

    cluster_tol = 1e-6 * scale
    rng = np.random.default_rng(0)
    rights = [
        q.entries @ x
        for x in _inverse_iteration(h.entries, values, scale, rng, cluster_tol)
    ]
    if m.symmetric:
        lefts = list(rights)
    else:
        ht, qt = hessenberg(Matrix.of(a.T, symmetric=False))
        lefts = [
            qt.entries @ x
            for x in _inverse_iteration(ht.entries, values, scale, rng, cluster_tol)
        ]

    pairs = []
    for value, right, left in zip(values, rights, lefts):
        right = right / np.linalg.norm(right)
        left = left / np.linalg.norm(left)
        residual = float(np.linalg.norm(a @ right - value * right))
        if not residual <= tol.eig_tol * max(frob, _EPS):
            raise ConvergenceError(
                f"eigenvector residual {residual:.3e} exceeds bound for z={value:.6g}",
                partial_schur=t,
            )
        pairs.append(
            EigenPair(value=complex(value), right=right, left=left, residual=residual)
        )

    drift = abs(values.sum() - np.trace(a))
    if drift > 1e-10 * max(frob, _EPS):
        logger.warning(f"⚠️ Trace sum rule off by {drift:.3e}")
    return pairs


# =============================================================================
# BIORTHOGONAL NORMALIZATION
# =============================================================================


def degenerate_pairs(
    pairs: Sequence[EigenPair], scale: float, gap: float
) -> List[Tuple[int, int]]:
    """Index pairs whose eigenvalues lie within gap·scale"""
    out = []
    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            if abs(pairs[i].value - pairs[j].value) <= gap * scale:
                out.append((i, j))
    return out


def normalize_pair(pair: EigenPair) -> EigenPair:
    """Scale one pair to ⟨φ*|φ⟩ = 1 with the largest-component phase convention"""
    s = pair.c_product
    if s == 0 or not np.isfinite(s):
        raise IllConditionedError(f"vanishing c-product for z={pair.value:.6g}")
    root = np.sqrt(s)
    right = pair.right / root
    left = pair.left / root
    flipped = fix_phase(right)
    if flipped is not right:
        right, left = flipped, -left
    return EigenPair(value=pair.value, right=right, left=left, residual=pair.residual)


def c_normalize(
    pairs: Sequence[EigenPair],
    scale: Union[Matrix, float],
    tolerances: Optional[Tolerances] = None,
) -> List[EigenPair]:
    """Biorthogonal c-normalization ⟨φ_k*|φ_l⟩ = δ_kl.

    `scale` is the matrix the pairs came from or its Matrix.scale, so the
    degeneracy gap is measured against ‖H‖_F exactly as in solve_modes.
    """
    tol = tolerances or DEFAULT_TOLERANCES
    if isinstance(scale, Matrix):
        scale = scale.scale
    close = degenerate_pairs(pairs, scale, tol.degeneracy_gap)
    if close:
        raise IllConditionedError(
            f"near-degenerate eigenvalue pairs {close}; route to jordan_chain",
            indices=close,
        )
    return [normalize_pair(p) for p in pairs]


def c_product_matrix(pairs: Sequence[EigenPair]) -> np.ndarray:
    """Matrix of ⟨φ_k*|φ_l⟩ = left_k · right_l"""
    lefts = np.array([p.left for p in pairs])
    rights = np.array([p.right for p in pairs]).T
    return lefts @ rights


# =============================================================================
# JORDAN CHAIN
# =============================================================================


def jordan_chain(
    m: Matrix, eps0: complex, tolerances: Optional[Tolerances] = None
) -> JordanSolve:
    """Eigenvector and associated vector at a defective eigenvalue"""
    m = _as_matrix(m)
    tol = tolerances or DEFAULT_TOLERANCES
    a = np.array(m.entries) - eps0 * np.eye(m.n)
    _, sing, vh = scipy.linalg.svd(a)
    ref = max(sing[0], _EPS * m.scale)
    null_dim = int(np.sum(sing <= tol.jordan_rank_tol * ref))
    if null_dim != 1:
        raise NotAnEPError(
            f"rank deficiency {null_dim} at ε₀={complex(eps0):.6g} (expected 1)"
        )

    phi = vh[-1].conj()
    j = int(np.argmax(np.abs(phi)))
    phi = phi * (abs(phi[j]) / phi[j])
    null_residual = float(np.linalg.norm(a @ phi))
    assoc = scipy.linalg.lstsq(a, phi, cond=tol.jordan_rank_tol)[0]
    assoc = assoc - np.vdot(phi, assoc) * phi
    defect = float(np.linalg.norm(a @ assoc - phi))
    bound = tol.jordan_tol * m.scale
    if defect > bound:
        raise NotAnEPError(
            f"no associated vector: defect residual {defect:.3e} > {bound:.3e}"
        )
    logger.debug(f"🔍 Jordan chain at {complex(eps0):.6g}: defect {defect:.3e}")
    return JordanSolve(
        eigenvalue=complex(eps0),
        eigenvector=phi,
        associated=assoc,
        null_residual=null_residual,
        defect_residual=defect,
    )
