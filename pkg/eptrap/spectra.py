import logging
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ContractError
from .linalg import EigenPair, Matrix, degenerate_pairs, eig, normalize_pair

logger = logging.getLogger(__name__)

# =============================================================================
# PYDANTIC MODELS
# =============================================================================


class ModeSet(BaseModel):
    """Annotated biorthogonal spectrum of one model matrix"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    modes: List[EigenPair] = Field(description="Eigenpairs ordered by Re z")
    a_k: List[float] = Field(description="⟨φ_k|φ_k⟩ under c-normalization (≥ 1)")
    overlaps: np.ndarray = Field(
        description="Raw overlaps G_kl = ⟨φ_k|φ_l⟩, Hermitian; G_kk = a_k for c-normalized modes"
    )
    b_kl: np.ndarray = Field(
        description=(
            "Cross overlaps B_k^l = (G - Gᵀ)/2 = i·Im G_kl, the antisymmetric part of G; "
            "equal to G_kl off the diagonal only where Re G_kl = 0"
        )
    )
    r_k: List[float] = Field(description="Phase rigidity per mode, 1/a_k")
    ep_pairs: List[Tuple[int, int]] = Field(
        default_factory=list, description="Mode pairs closer than the degeneracy gap"
    )
    scale: float = Field(default=1.0, description="max(‖H‖_F, 1) of the source matrix")

    @property
    def values(self) -> np.ndarray:
        return np.array([m.value for m in self.modes])

    @property
    def energies(self) -> np.ndarray:
        return self.values.real

    @property
    def widths(self) -> np.ndarray:
        return -2.0 * self.values.imag

    @property
    def ep_flag(self) -> List[bool]:
        flagged = {i for pair in self.ep_pairs for i in pair}
        return [i in flagged for i in range(len(self.modes))]

    @property
    def rights(self) -> np.ndarray:
        """Right vectors as columns"""
        return np.array([m.right for m in self.modes]).T

    @property
    def lefts(self) -> np.ndarray:
        """Left vectors as rows"""
        return np.array([m.left for m in self.modes])


# =============================================================================
# DIAGNOSTICS
# =============================================================================


def phase_rigidity(mode: EigenPair) -> float:
    """|⟨φ*|φ⟩| / ⟨φ|φ⟩, gauge-free"""
    right = np.asarray(mode.right)
    left = np.asarray(mode.left)
    norm = np.linalg.norm(right) * np.linalg.norm(left)
    if not np.isfinite(norm) or norm == 0.0:
        raise ContractError("phase rigidity needs a nonzero finite mode")
    return float(min(1.0, abs(np.dot(left, right)) / norm))


def chirality_defect(first: EigenPair, second: EigenPair) -> float:
    """min over signs of ‖φ̂₁ ∓ i·φ̂₂‖ for unit-scaled vectors in the c-gauge"""
    u = np.asarray(first.right) / np.linalg.norm(first.right)
    w = np.asarray(second.right) / np.linalg.norm(second.right)
    return float(min(np.linalg.norm(u - 1j * w), np.linalg.norm(u + 1j * w)))


def lifetimes(modeset: ModeSet) -> List[float]:
    """τ_k = 1/Γ_k (ħ = 1); infinite for non-decaying modes"""
    return [float(1.0 / g) if g > 0.0 else float("inf") for g in modeset.widths]


# =============================================================================
# SPECTRUM
# =============================================================================


def solve_modes(m: Matrix, tolerances: Optional[Tolerances] = None) -> ModeSet:
    """Eigenpairs of m with overlaps A_k, B_k^l and rigidities r_k.

    Pairs closer than the degeneracy gap are listed in `ep_pairs` and kept
    at unit Euclidean norm instead of being c-normalized.
    """
    tol = tolerances or DEFAULT_TOLERANCES
    if not isinstance(m, Matrix):
        m = Matrix.of(m)
    pairs = eig(m, tol)
    close = degenerate_pairs(pairs, m.scale, tol.degeneracy_gap)
    flagged = {i for pair in close for i in pair}
    if close:
        logger.debug(f"🔍 EP-flagged pairs {close}")

    modes = [p if i in flagged else normalize_pair(p) for i, p in enumerate(pairs)]
    r_k = [phase_rigidity(p) for p in modes]
    a_k = [1.0 / r if r > 0.0 else float("inf") for r in r_k]

    rights = np.array([p.right for p in modes]).T
    gram = rights.conj().T @ rights
    b_kl = (gram - gram.T) / 2.0
    gram.setflags(write=False)
    b_kl.setflags(write=False)

    return ModeSet(modes=modes, a_k=a_k, overlaps=gram, b_kl=b_kl, r_k=r_k, ep_pairs=close, scale=m.scale)
