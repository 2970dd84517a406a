"""Model Hamiltonian families built from declarative specs.

Every builder returns a complex symmetric ``Matrix``. Widths follow the
convention z = E - (i/2)Γ with Γ ≥ 0, so the toy chain is assembled as
diag(h0) - (i/2)·α·v·vᵀ.
"""

import logging
import math
from typing import Annotated, Any, Callable, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import scipy.integrate
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    ValidationError,
    model_validator,
)
from scipy.optimize import linear_sum_assignment

from .config import DEFAULT_TOLERANCES, Tolerances, plain_data, set_dotted
from .errors import ConfigError, DomainError
from .linalg import Matrix, eig

logger = logging.getLogger(__name__)

# =============================================================================
# COMPLEX FIELDS
# =============================================================================


def parse_complex(value: Any) -> complex:
    """Accept numbers, "1-0.5j" strings, [re, im] pairs and {"re", "im"} objects"""
    if isinstance(value, bool):
        raise ValueError("boolean is not a complex number")
    if isinstance(value, (int, float, complex, np.number)):
        return complex(value)
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise ValueError(f"cannot parse complex number from '{value}'")
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, dict) and set(value) <= {"re", "im"}:
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    raise ValueError(f"cannot parse complex number from {value!r}")


CNum = Annotated[
    complex,
    BeforeValidator(parse_complex),
    PlainSerializer(lambda z: [z.real, z.imag], return_type=list, when_used="json"),
]

# =============================================================================
# PYDANTIC MODELS
# =============================================================================


class TwoLevelSpec(BaseModel):
    """Two coupled states: [[ε₁, ω], [ω, ε₂]]"""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["two_level"] = "two_level"
    eps1: CNum = Field(description="Unperturbed energy of state 1 (complex)")
    eps2: CNum = Field(description="Unperturbed energy of state 2 (complex)")
    omega: CNum = Field(description="Coupling between the two states")


class ToyChainSpec(BaseModel):
    """N states coupled to one channel through the vector V with strength α"""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["toy_chain"] = "toy_chain"
    n: int = Field(ge=2, description="Number of states N")
    h0_diag: List[float] = Field(description="Unperturbed energies (diagonal of H₀)")
    v: List[CNum] = Field(description="Coupling vector V to the channel")
    alpha: float = Field(ge=0.0, description="Coupling strength α")

    @model_validator(mode="after")
    def _lengths(self):
        if len(self.h0_diag) != self.n or len(self.v) != self.n:
            raise ValueError(f"h0_diag and v must both have n={self.n} entries")
        return self

    @classmethod
    def centered(cls, n: int, spacing: float = 1.0, alpha: float = 0.0) -> "ToyChainSpec":
        """Equally spaced levels centered on zero, uniform coupling vector"""
        half = spacing * (n - 1) / 2.0
        return cls(
            n=n,
            h0_diag=list(np.linspace(-half, half, n)),
            v=[1.0] * n,
            alpha=alpha,
        )


class BandModelSpec(BaseModel):
    """States coupled to C channels with box (energy-independent) profiles"""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["band"] = "band"
    n: int = Field(ge=1, description="Number of states N")
    c: int = Field(ge=1, description="Number of channels C")
    e_b: List[float] = Field(description="Basis energies E_k^B")
    gamma0: List[List[float]] = Field(description="N×C coupling amplitudes γ⁰_kc")
    bands: List[Tuple[float, float]] = Field(description="Channel windows [ε_c, ε_c']")
    energy: float = Field(default=0.0, description="Evaluation energy E")
    wide_band: bool = Field(
        default=False,
        description="Drop the principal-value shift (energy-independent reference configuration)",
    )

    @model_validator(mode="after")
    def _shapes(self):
        if len(self.e_b) != self.n:
            raise ValueError(f"e_b must have n={self.n} entries")
        if len(self.gamma0) != self.n or any(len(row) != self.c for row in self.gamma0):
            raise ValueError(f"gamma0 must be {self.n}×{self.c}")
        if len(self.bands) != self.c:
            raise ValueError(f"bands must have c={self.c} windows")
        for lo, hi in self.bands:
            if not lo < hi:
                raise ValueError(f"band [{lo}, {hi}] is empty")
        if not np.all(np.isfinite(self.gamma0)):
            raise ValueError("gamma0 must be finite")
        return self

    @property
    def couplings(self) -> np.ndarray:
        return np.array(self.gamma0, dtype=float).reshape(self.n, self.c)


class PTSpec(BaseModel):
    """Balanced gain/loss pair: [[e + iγ/2, ω], [ω, e - iγ/2]]"""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["pt"] = "pt"
    e: float = Field(default=0.0, description="Common level energy")
    gamma: float = Field(ge=0.0, description="Gain/loss rate γ")
    omega: float = Field(description="Real coupling ω")


class ThreeLevelSpec(BaseModel):
    """Crossing pair disturbed by a third state coupled directly"""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["three_level"] = "three_level"
    two_level: TwoLevelSpec = Field(description="The crossing pair")
    eps3: CNum = Field(description="Third-state energy")
    w13: CNum = Field(description="Coupling of state 3 to state 1")
    w23: CNum = Field(description="Coupling of state 3 to state 2")


ModelSpec = Annotated[
    Union[TwoLevelSpec, ToyChainSpec, BandModelSpec, PTSpec, ThreeLevelSpec],
    Field(discriminator="kind"),
]

SPEC_TYPES = {
    "two_level": TwoLevelSpec,
    "toy_chain": ToyChainSpec,
    "band": BandModelSpec,
    "pt": PTSpec,
    "three_level": ThreeLevelSpec,
}


class TwoLevelClosedForm(BaseModel):
    """Closed-form eigenvalues (ε₁+ε₂)/2 ± Z of a 2×2 model"""

    z_plus: CNum = Field(description="(ε₁+ε₂)/2 + Z")
    z_minus: CNum = Field(description="(ε₁+ε₂)/2 - Z")
    z: CNum = Field(description="Z = ½√((ε₁-ε₂)² + 4ω²)")
    regime: str = Field(description="energy-repulsion, width-bifurcation or exceptional")


class LambShift(BaseModel):
    """Continuum-induced energy shifts of a band model"""

    self_energy: List[float] = Field(description="Diagonal principal-value shifts per state")
    collective: List[List[float]] = Field(
        description="Off-diagonal principal-value couplings between states"
    )
    shifts: List[float] = Field(description="Δ_k = E_k - E_k^B per basis state")


# =============================================================================
# SPEC HANDLING
# =============================================================================


def spec_from_dict(data: Dict[str, Any]) -> BaseModel:
    """Validate a model section of a config document"""
    if not isinstance(data, dict):
        raise ConfigError("model section must be an object")
    kind = data.get("kind")
    if kind not in SPEC_TYPES:
        raise ConfigError(f"unknown model kind '{kind}' (expected one of {sorted(SPEC_TYPES)})")
    try:
        return SPEC_TYPES[kind].model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        raise ConfigError(f"invalid {kind} model: {err['msg']} at {'.'.join(map(str, err['loc']))}")


def apply_overrides(spec: BaseModel, overrides: Optional[Dict[str, Any]] = None) -> BaseModel:
    """Return a copy of spec with dotted-key parameter overrides applied"""
    if not overrides:
        return spec
    data = plain_data(spec.model_dump())
    for key, value in overrides.items():
        set_dotted(data, key, value, owner=f"{spec.kind} model")
    return spec_from_dict(data)


# =============================================================================
# BUILDERS
# =============================================================================


def _two_level_entries(s: TwoLevelSpec) -> np.ndarray:
    return np.array([[s.eps1, s.omega], [s.omega, s.eps2]], dtype=complex)


def build(spec: BaseModel, overrides: Optional[Dict[str, Any]] = None) -> Matrix:
    """Model matrix for any spec family, after applying overrides"""
    spec = apply_overrides(spec, overrides)

    if isinstance(spec, TwoLevelSpec):
        entries = _two_level_entries(spec)
    elif isinstance(spec, ToyChainSpec):
        v = np.array(spec.v, dtype=complex)
        entries = np.diag(np.array(spec.h0_diag, dtype=complex)) - 0.5j * spec.alpha * np.outer(v, v)
    elif isinstance(spec, PTSpec):
        entries = np.array(
            [
                [spec.e + 0.5j * spec.gamma, spec.omega],
                [spec.omega, spec.e - 0.5j * spec.gamma],
            ],
            dtype=complex,
        )
    elif isinstance(spec, ThreeLevelSpec):
        t = spec.two_level
        entries = np.array(
            [
                [t.eps1, t.omega, spec.w13],
                [t.omega, t.eps2, spec.w23],
                [spec.w13, spec.w23, spec.eps3],
            ],
            dtype=complex,
        )
    elif isinstance(spec, BandModelSpec):
        return build_heff_band(spec)
    else:
        raise ConfigError(f"unsupported model spec {type(spec).__name__}")

    return Matrix.of(entries, symmetric=True)


def pv_self_energy(spec: BandModelSpec, i: int, j: int) -> float:
    """Box-profile principal value (1/2π)·Σ_c γ_ic γ_jc ln((E - ε_c)/(ε_c' - E))"""
    g = spec.couplings
    energy = spec.energy
    total = 0.0
    for c, (lo, hi) in enumerate(spec.bands):
        weight = g[i, c] * g[j, c]
        if weight == 0.0:
            continue
        if not lo < energy < hi:
            raise DomainError(
                f"E={energy} outside channel {c} window [{lo}, {hi}] (discrete-state regime)"
            )
        total += weight * math.log((energy - lo) / (hi - energy))
    return total / (2.0 * math.pi)


def pv_quadrature(
    spec: BandModelSpec,
    i: int,
    j: int,
    profile: Optional[Callable[[float], float]] = None,
    tolerances: Optional[Tolerances] = None,
) -> float:
    """Principal value (1/2π)·Σ_c γ_ic γ_jc PV∫ f(E')/(E - E') dE' by adaptive quadrature.

    `profile` is the energy dependence f of the coupling product (1 for a box).
    """
    tol = tolerances or DEFAULT_TOLERANCES
    g = spec.couplings
    energy = spec.energy
    f = profile or (lambda x: 1.0)
    total = 0.0
    for c, (lo, hi) in enumerate(spec.bands):
        weight = g[i, c] * g[j, c]
        if weight == 0.0:
            continue
        if not lo < energy < hi:
            raise DomainError(f"E={energy} outside channel {c} window [{lo}, {hi}]")
        value, _ = scipy.integrate.quad(
            f, lo, hi, weight="cauchy", wvar=energy, epsabs=tol.pv_abs_tol, limit=200
        )
        total -= weight * value
    return total / (2.0 * math.pi)


def pv_matrix(spec: BandModelSpec) -> np.ndarray:
    """Real principal-value shift matrix of a band model"""
    out = np.zeros((spec.n, spec.n))
    for i in range(spec.n):
        for j in range(i, spec.n):
            out[i, j] = out[j, i] = pv_self_energy(spec, i, j)
    return out


def residuum_matrix(spec: BandModelSpec) -> Matrix:
    """-(1/2)·Σ_c γ_ic γ_jc, attached as the imaginary part of H_eff"""
    g = spec.couplings
    return Matrix.of((-0.5 * g @ g.T).astype(complex), symmetric=True)


def build_heff_band(spec: BandModelSpec) -> Matrix:
    """H_eff(E) = diag(E^B) + principal-value shift + i·residuum"""
    real = np.diag(np.array(spec.e_b, dtype=float))
    if not spec.wide_band:
        real = real + pv_matrix(spec)
    entries = real + 1j * residuum_matrix(spec).entries.real
    return Matrix.of(entries, symmetric=True)


# =============================================================================
# CLOSED FORMS
# =============================================================================


def eigenvalues_2x2(entries: np.ndarray) -> Tuple[complex, complex]:
    """(a+d)/2 ± ½√((a-d)² + 4bc) for any 2×2 matrix"""
    a, b, c, d = entries[0, 0], entries[0, 1], entries[1, 0], entries[1, 1]
    root = np.sqrt((a - d) ** 2 + 4.0 * b * c)
    return complex((a + d + root) / 2.0), complex((a + d - root) / 2.0)


def discriminant_2x2(entries: np.ndarray) -> complex:
    """(z₁ - z₂)² of a 2×2 matrix, zero exactly at coalescence"""
    a, b, c, d = entries[0, 0], entries[0, 1], entries[1, 0], entries[1, 1]
    return complex((a - d) ** 2 + 4.0 * b * c)


def closed_form_two_level(eps1: complex, eps2: complex, omega: complex) -> TwoLevelClosedForm:
    """Eigenvalues of [[ε₁, ω], [ω, ε₂]] and the regime set by Z"""
    eps1, eps2, omega = complex(eps1), complex(eps2), complex(omega)
    z = 0.5 * np.sqrt((eps1 - eps2) ** 2 + 4.0 * omega**2)
    mean = (eps1 + eps2) / 2.0
    scale = max(abs(eps1), abs(eps2), abs(omega), 1.0)
    if abs(z) <= 1e-12 * scale:
        regime = "exceptional"
    elif abs(z.real) >= abs(z.imag):
        regime = "energy-repulsion"
    else:
        regime = "width-bifurcation"
    return TwoLevelClosedForm(
        z_plus=complex(mean + z), z_minus=complex(mean - z), z=complex(z), regime=regime
    )


def spin_swap_frequency(b: float, k_aniso: float, tau_se: float) -> complex:
    """√(b² - (k/τ)²); purely imaginary in the frozen phase"""
    if tau_se <= 0:
        raise DomainError(f"spin-exchange time must be positive, got {tau_se}")
    return complex(np.sqrt(complex(b * b - (k_aniso / tau_se) ** 2)))


def spin_swap_spec(b: float, k_aniso: float, tau_se: float) -> TwoLevelSpec:
    """Two-level swap model ε₁ = 0, ε₂ = -2i·k/τ, ω = b"""
    return TwoLevelSpec(eps1=0.0, eps2=-2j * k_aniso / tau_se, omega=b)


def spin_swap_decoherence_rate(b: float, k_aniso: float, tau_se: float) -> float:
    """Slowest amplitude decay rate of the swap model, k/τ - Re√((k/τ)² - b²)"""
    if tau_se <= 0:
        raise DomainError(f"spin-exchange time must be positive, got {tau_se}")
    damping = k_aniso / tau_se
    return float(damping - np.sqrt(complex(damping**2 - b * b)).real)


# =============================================================================
# LAMB SHIFT AND POLES
# =============================================================================


def _basis_assignment(pairs) -> np.ndarray:
    """Mode index assigned to each basis state by eigenvector weight"""
    weights = np.abs(np.array([p.right for p in pairs])) ** 2
    rows, cols = linear_sum_assignment(-weights.T)
    order = np.empty(len(rows), dtype=int)
    order[rows] = cols
    return order


def lamb_shift(spec: BandModelSpec) -> LambShift:
    """Split the principal-value matrix into self-energy and collective parts"""
    shift = pv_matrix(spec)
    collective = shift - np.diag(np.diag(shift))
    pairs = eig(build_heff_band(spec))
    order = _basis_assignment(pairs)
    deltas = [pairs[order[k]].value.real - spec.e_b[k] for k in range(spec.n)]
    return LambShift(
        self_energy=list(np.diag(shift)),
        collective=collective.tolist(),
        shifts=[float(d) for d in deltas],
    )


def self_consistent_poles(
    spec: BandModelSpec, max_iters: int = 200, damping: float = 0.5, tol: float = 1e-10
) -> List[complex]:
    """Poles z_k(E_k) with E_k = Re z_k(E_k), one per basis state.

    Meaningful only for isolated resonances. A pole that does not settle or
    leaves the channel windows is reported as NaN.
    """
    poles: List[complex] = []
    for k in range(spec.n):
        energy = spec.energy if spec.wide_band else spec.e_b[k]
        previous: Optional[complex] = None
        result = complex(np.nan, np.nan)
        try:
            for _ in range(max_iters):
                pairs = eig(build_heff_band(spec.model_copy(update={"energy": energy})))
                if previous is None:
                    z = pairs[_basis_assignment(pairs)[k]].value
                else:
                    z = min((p.value for p in pairs), key=lambda v: abs(v - previous))
                previous = z
                step = z.real - energy
                energy += damping * step
                if abs(step) <= tol * max(1.0, abs(energy)):
                    result = z
                    break
        except DomainError as e:
            logger.warning(f"⚠️ Pole {k} left the channel window: {e.message}")
        if np.isnan(result.real):
            logger.warning(f"⚠️ Pole search for state {k} did not converge")
        poles.append(result)
    return poles
