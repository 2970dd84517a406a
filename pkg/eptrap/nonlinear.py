"""Nonlinear source-term Schrödinger equation.

Solves (H₀ - ε)φ = ⟨φ|W|φ⟩·|φ|²·φ by damped fixed-point iteration. The
cubic factor |φ|²φ is read componentwise by default; ``mode="norm"``
switches to ‖φ‖²·φ. The linear counterpart of the equation is H₀ - W.
"""

import logging
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import DimensionError
from .linalg import Matrix, eig
from .spectra import ModeSet

logger = logging.getLogger(__name__)

Bracket = Literal["hermitian", "biorthogonal"]
CubicMode = Literal["componentwise", "norm"]

# =============================================================================
# PYDANTIC MODELS
# =============================================================================


class NonlinearSolve(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    state: np.ndarray = Field(description="Unit-norm solution φ_n")
    eigenvalue: complex = Field(description="ε_n (least-squares at the returned state)")
    iterations: int = Field(description="Iterations used")
    residual: float = Field(description="‖(H₀ - ε)φ - ⟨φ|W|φ⟩|φ|²φ‖ at the returned state")
    converged: bool = Field(description="residual ≤ nl_tol")
    residual_history: List[float] = Field(description="Residual after each iteration")
    mode: str = Field(description="Reading of the cubic factor")


# =============================================================================
# SOURCE TERM
# =============================================================================


def _bracket(modeset: ModeSet, k: int, w: np.ndarray, phi: np.ndarray, bracket: Bracket) -> complex:
    mode = modeset.modes[k]
    if bracket == "biorthogonal":
        return complex(mode.left @ w @ phi)
    return complex(np.vdot(mode.right, w @ phi))


def source_term(
    phi, w, modeset: ModeSet, bracket: Bracket = "hermitian"
) -> np.ndarray:
    """Σ_k ⟨φ_k|W|φ⟩ {A_k|φ_k⟩ + Σ_l B_k^l|φ_l⟩}"""
    phi = np.asarray(phi, dtype=complex)
    w = w.entries if isinstance(w, Matrix) else np.asarray(w, dtype=complex)
    out = np.zeros_like(phi)
    for k, mode in enumerate(modeset.modes):
        coeff = _bracket(modeset, k, w, phi, bracket)
        if coeff == 0:
            continue
        term = modeset.a_k[k] * mode.right
        for l, other in enumerate(modeset.modes):
            if l != k:
                term = term + modeset.b_kl[k, l] * other.right
        out += coeff * term
    logger.debug(f"🔍 Source term with {bracket} bracket, norm {np.linalg.norm(out):.3e}")
    return out


def linear_projection(phi, w, modeset: ModeSet) -> np.ndarray:
    """Σ_k ⟨u_k|W|φ⟩|u_k⟩ over unit-normalized modes u_k"""
    phi = np.asarray(phi, dtype=complex)
    w = w.entries if isinstance(w, Matrix) else np.asarray(w, dtype=complex)
    out = np.zeros_like(phi)
    for mode in modeset.modes:
        u = mode.right / np.linalg.norm(mode.right)
        out += np.vdot(u, w @ phi) * u
    return out


# =============================================================================
# SOLVER
# =============================================================================


def _cubic(phi: np.ndarray, mode: CubicMode) -> np.ndarray:
    if mode == "norm":
        return float(np.vdot(phi, phi).real) * phi
    return np.abs(phi) ** 2 * phi


def _residual(h0: np.ndarray, w: np.ndarray, phi: np.ndarray, mode: CubicMode):
    """(ε, residual) with ε the least-squares eigenvalue at φ"""
    g = np.vdot(phi, w @ phi)
    rhs = g * _cubic(phi, mode)
    lhs = h0 @ phi
    eps = np.vdot(phi, lhs - rhs) / np.vdot(phi, phi)
    return complex(eps), float(np.linalg.norm(lhs - eps * phi - rhs))


def solve_nonlinear(
    h0,
    w,
    seed: Union[int, np.ndarray] = 0,
    mode: CubicMode = "componentwise",
    tolerances: Optional[Tolerances] = None,
) -> NonlinearSolve:
    """Damped fixed point of H_j = H₀ - ⟨φ|W|φ⟩·D(φ), D = diag(|φ|²).

    `seed` is a mode index of H₀ (ordered by Re z) or a start vector. The
    damping halves whenever the residual rises. Non-convergence is reported
    on the result, never raised.
    """
    tol = tolerances or DEFAULT_TOLERANCES
    h0 = h0.entries if isinstance(h0, Matrix) else np.asarray(h0, dtype=complex)
    w = w.entries if isinstance(w, Matrix) else np.asarray(w, dtype=complex)
    if h0.shape != w.shape:
        raise DimensionError(f"H₀ {h0.shape} and W {w.shape} differ in shape")

    if isinstance(seed, (int, np.integer)):
        phi = np.array(eig(Matrix.of(h0), tol)[int(seed)].right)
    else:
        phi = np.asarray(seed, dtype=complex)
    phi = phi / np.linalg.norm(phi)

    eta = tol.nl_damping
    history: List[float] = []
    previous = np.inf
    converged = False
    iterations = 0
    for iterations in range(1, tol.nl_max_iters + 1):
        g = np.vdot(phi, w @ phi)
        if mode == "norm":
            d = np.eye(len(phi)) * float(np.vdot(phi, phi).real)
        else:
            d = np.diag(np.abs(phi) ** 2)
        pairs = eig(Matrix.of(h0 - g * d), tol)
        overlaps = [abs(np.vdot(p.right, phi)) for p in pairs]
        new = np.array(pairs[int(np.argmax(overlaps))].right)
        overlap = np.vdot(new, phi)
        if overlap != 0:
            new = new * (overlap / abs(overlap))

        phi = (1.0 - eta) * phi + eta * new
        phi = phi / np.linalg.norm(phi)
        _, residual = _residual(h0, w, phi, mode)
        history.append(residual)
        if residual <= tol.nl_tol:
            converged = True
            break
        if residual > previous:
            eta = max(eta / 2.0, 1e-3)
        previous = residual

    eps, residual = _residual(h0, w, phi, mode)
    if not converged:
        logger.warning(f"⚠️ Nonlinear iteration stopped at residual {residual:.3e} after {iterations} steps")
    return NonlinearSolve(
        state=phi,
        eigenvalue=eps,
        iterations=iterations,
        residual=residual,
        converged=residual <= tol.nl_tol,
        residual_history=history,
        mode=mode,
    )
