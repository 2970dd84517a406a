import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field
from scipy.signal import find_peaks

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ContractError, DomainError, GridTooCoarseError, PoleError
from .models import BandModelSpec, build_heff_band
from .parallel import parallel_map
from .spectra import ModeSet
from .sweeps import Branch

logger = logging.getLogger(__name__)

# =============================================================================
# PYDANTIC MODELS
# =============================================================================


class ObservableSeries(BaseModel):
    """Sampled scalar observable with provenance"""

    name: str = Field(description="Observable name, also the CSV file stem")
    x: List[float] = Field(description="Sample axis")
    values: List[float] = Field(description="Observable value per sample")
    x_label: str = Field(default="x", description="Meaning of the sample axis")
    units: str = Field(default="model units (hbar = 1)", description="Units of the values")
    provenance: Dict[str, Any] = Field(default_factory=dict, description="Model and parameters")


class ScatteringSeries(BaseModel):
    """S-matrix and phases along an energy grid"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    energies: np.ndarray = Field(description="Energy grid")
    s_matrix: np.ndarray = Field(description="C×C S-matrix per energy")
    pair: Optional[Tuple[int, int]] = Field(
        default=None, description="Channel pair (a, b) read as transmission; None for one channel"
    )
    phase: np.ndarray = Field(description="Unwrapped arg det S")
    transmission: np.ndarray = Field(description="T = S_ab - δ_ab per energy")
    transmission_phase: np.ndarray = Field(description="Unwrapped arg T (NaN at exact zeros)")
    max_unitarity_defect: float = Field(description="max over energies of ‖S†S - I‖")


class PhaseLapse(BaseModel):
    left_peak: float = Field(description="Energy of the transmission peak below the lapse")
    right_peak: float = Field(description="Energy of the transmission peak above the lapse")
    energy: float = Field(description="Energy of the phase drop")
    zero_energy: float = Field(description="Energy of the transmission minimum between the peaks")
    min_transmission: float = Field(description="|T| at that minimum")
    jump: float = Field(description="Phase step across the lapse (≈ -π)")


class DecaySeries(BaseModel):
    times: List[float] = Field(description="Time grid (ħ = 1)")
    population: List[float] = Field(description="⟨Ψ(t)|Ψ(t)⟩")
    rate: List[float] = Field(description="k_gr(t)")
    weights: List[float] = Field(description="|c_k|² per mode")
    widths: List[float] = Field(description="Γ_k per mode")


class AverageRateReport(BaseModel):
    alphas: List[float] = Field(description="Coupling strengths")
    gamma_av: List[float] = Field(description="Mean width of the trapped branches")
    tau_av: List[float] = Field(description="Average lifetime 1/Γ_av")
    broad_branch: int = Field(description="Branch excluded as the broad state")
    broad_excluded: List[bool] = Field(description="Whether the broad branch was left out of Γ_av, per α")
    saturation_alpha: Optional[float] = Field(description="First α with dΓ_av/dα ≤ 0")


class OrderParameterSeries(BaseModel):
    alphas: List[float] = Field(description="Coupling strengths")
    gamma0_over_n: List[float] = Field(description="Γ₀/N, Γ₀ the largest width")
    derivative: List[float] = Field(description="d(Γ₀/N)/dα by finite differences")
    jump_tol: float = Field(description="Threshold the derivative jump had to exceed")
    alpha_cr: Optional[float] = Field(description="Detected break point")
    post_critical_r2: Optional[float] = Field(description="R² of the straight-line fit beyond alpha_cr")
    linear: Optional[bool] = Field(description="post_critical_r2 ≥ lin_r2")
    localized_states: List[int] = Field(description="Branches not aligned with the channel, per α")
    status: str = Field(description="transition, no-transition or inconclusive")


# =============================================================================
# S-MATRIX
# =============================================================================


def _at_energy(spec: BandModelSpec, energy: Optional[float]) -> BandModelSpec:
    return spec if energy is None else spec.model_copy(update={"energy": float(energy)})


def _resolvent_solve(energy: float, h, rhs: np.ndarray, tol: Tolerances) -> np.ndarray:
    """(E - H_eff)⁻¹·rhs; a near-singular pivot is a pole on the energy axis"""
    a = energy * np.eye(h.n) - h.entries
    lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    if not np.min(np.abs(np.diag(lu))) > tol.pole_tol * h.scale:
        raise PoleError(f"resolvent singular at E={energy}")
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def s_matrix(
    spec: BandModelSpec, energy: Optional[float] = None, tolerances: Optional[Tolerances] = None
) -> np.ndarray:
    """S(E) = I - i·γᵀ(E - H_eff)⁻¹γ"""
    tol = tolerances or DEFAULT_TOLERANCES
    spec = _at_energy(spec, energy)
    h = build_heff_band(spec)
    gamma = spec.couplings.astype(complex)
    resolvent_gamma = _resolvent_solve(spec.energy, h, gamma, tol)
    return np.eye(spec.c) - 1j * gamma.T @ resolvent_gamma


def _unwrap_checked(raw: np.ndarray, max_step: float, what: str) -> np.ndarray:
    steps = np.angle(np.exp(1j * np.diff(raw)))
    worst = np.max(np.abs(steps)) if len(steps) else 0.0
    if worst > max_step:
        s = int(np.argmax(np.abs(steps)))
        raise GridTooCoarseError(
            f"{what} steps by {worst:.3f} rad between samples {s} and {s + 1}; refine the grid"
        )
    return np.unwrap(raw)


def scattering_series(
    spec: BandModelSpec,
    energies: Sequence[float],
    pair: Optional[Tuple[int, int]] = None,
    tolerances: Optional[Tolerances] = None,
    workers: Optional[int] = None,
) -> ScatteringSeries:
    """S-matrix, det S phase and transmission along an energy grid"""
    tol = tolerances or DEFAULT_TOLERANCES
    energies = np.asarray(energies, dtype=float)
    if pair is None and spec.c != 1:
        raise DomainError("a channel pair is required for more than one channel")
    a, b = pair if pair is not None else (0, 0)

    matrices = np.array(
        parallel_map(lambda i, e: s_matrix(spec, e, tol), list(energies), workers)
    )
    eye = np.eye(spec.c)
    defect = max(
        float(np.linalg.norm(s.conj().T @ s - eye)) for s in matrices
    )
    if defect > tol.unitarity_tol and spec.wide_band:
        logger.warning(f"⚠️ Unitarity defect {defect:.3e} in a wide-band configuration")

    det_phase = np.unwrap(np.angle(np.linalg.det(matrices)))
    t = matrices[:, a, b] - (1.0 if a == b else 0.0)
    mag = np.abs(t)
    raw = np.angle(t)
    beta = np.full(len(t), np.nan)
    valid = mag > 1e-14 * max(np.max(mag), np.finfo(float).tiny)
    beta[valid] = np.unwrap(raw[valid])

    return ScatteringSeries(
        energies=energies,
        s_matrix=matrices,
        pair=pair,
        phase=det_phase,
        transmission=t,
        transmission_phase=beta,
        max_unitarity_defect=defect,
    )


def time_delay(series: ScatteringSeries, tolerances: Optional[Tolerances] = None) -> np.ndarray:
    """τ_w(E) = dΘ/dE, central differences inside, one-sided at the ends"""
    tol = tolerances or DEFAULT_TOLERANCES
    raw = np.angle(np.linalg.det(series.s_matrix))
    theta = _unwrap_checked(raw, tol.max_phase_step, "det S phase")
    return np.gradient(theta, series.energies)


def phase_shift_excursion(series: ScatteringSeries) -> float:
    """Total change of δ = Θ/2 over the grid, in units of π"""
    return float((series.phase[-1] - series.phase[0]) / 2.0 / math.pi)


def phase_lapse_scan(
    series: ScatteringSeries, tolerances: Optional[Tolerances] = None
) -> List[PhaseLapse]:
    """Downward π jumps of the transmission phase between successive peaks"""
    tol = tolerances or DEFAULT_TOLERANCES
    energies = series.energies
    mag = np.abs(series.transmission)
    if len(mag) < 3:
        return []
    top = float(np.max(mag))
    # edge peaks only fall off towards the grid ends, so prominence stays loose
    peaks, _ = find_peaks(mag, height=0.5 * top, prominence=1e-3 * top)
    if len(peaks) < 2:
        return []

    valid = np.flatnonzero(np.isfinite(series.transmission_phase))
    raw = np.angle(series.transmission[valid])
    steps = np.angle(np.exp(1j * np.diff(raw)))

    events = []
    for left, right in zip(peaks[:-1], peaks[1:]):
        inside = np.flatnonzero((valid[:-1] >= left) & (valid[1:] <= right))
        drops = [k for k in inside if steps[k] <= -(math.pi - tol.lapse_tol)]
        if not drops:
            continue
        k = drops[int(np.argmin(steps[drops]))]
        zero = left + int(np.argmin(mag[left : right + 1]))
        events.append(
            PhaseLapse(
                left_peak=float(energies[left]),
                right_peak=float(energies[right]),
                energy=float((energies[valid[k]] + energies[valid[k + 1]]) / 2.0),
                zero_energy=float(energies[zero]),
                min_transmission=float(mag[zero]),
                jump=float(steps[k]),
            )
        )
    logger.debug(f"🔍 {len(events)} phase lapses across {len(peaks)} peaks")
    return events


# =============================================================================
# INTERNAL WAVEFUNCTION
# =============================================================================


def _channel_vector(couplings, channel: int) -> np.ndarray:
    g = np.asarray(couplings, dtype=complex)
    return g if g.ndim == 1 else g[:, channel]


def internal_wavefunction(
    modeset: ModeSet,
    couplings,
    energy: float,
    channel: int = 0,
    tolerances: Optional[Tolerances] = None,
) -> np.ndarray:
    """Ψ_int(E) = Σ_k ⟨φ_k*|γ_c⟩/(E - z_k)·φ_k"""
    tol = tolerances or DEFAULT_TOLERANCES
    if modeset.ep_pairs:
        raise ContractError(f"mode expansion undefined at EP-flagged pairs {modeset.ep_pairs}")
    gamma = _channel_vector(couplings, channel)
    psi = np.zeros(len(gamma), dtype=complex)
    for mode in modeset.modes:
        denom = energy - mode.value
        if abs(denom) < tol.pole_tol * modeset.scale:
            raise PoleError(f"E={energy} sits on the pole z={mode.value:.6g}")
        psi += np.dot(mode.left, gamma) / denom * mode.right
    return psi


def rho_phase_rigidity(psi) -> float:
    """Rotate ψ so the cross term Σ Re·Im vanishes, then (ΣRe² - ΣIm²)/(ΣRe² + ΣIm²)"""
    psi = np.asarray(psi, dtype=complex)
    norm2 = float(np.vdot(psi, psi).real)
    if norm2 == 0.0 or not np.isfinite(norm2):
        raise DomainError("phase rigidity of a zero vector")
    theta = -np.angle(np.dot(psi, psi)) / 2.0
    rotated = np.exp(1j * theta) * psi
    re2 = float(np.sum(rotated.real**2))
    im2 = float(np.sum(rotated.imag**2))
    return min(1.0, max(0.0, (re2 - im2) / (re2 + im2)))


def rigidity_series(
    spec: BandModelSpec,
    energies: Sequence[float],
    channel: int = 0,
    workers: Optional[int] = None,
    tolerances: Optional[Tolerances] = None,
) -> ObservableSeries:
    """ρ(E) of the internal wavefunction (E - H_eff)⁻¹γ_c"""
    tol = tolerances or DEFAULT_TOLERANCES

    def task(i: int, energy: float) -> float:
        at = _at_energy(spec, energy)
        h = build_heff_band(at)
        psi = _resolvent_solve(energy, h, at.couplings[:, channel].astype(complex), tol)
        return rho_phase_rigidity(psi)

    values = parallel_map(task, list(energies), workers)
    return ObservableSeries(
        name="rho",
        x=[float(e) for e in energies],
        values=[float(v) for v in values],
        x_label="E",
        units="dimensionless",
        provenance={"model": spec.model_dump(mode="json"), "channel": channel},
    )


# =============================================================================
# DECAY RATE
# =============================================================================


def weights_from_coupling(modeset: ModeSet, couplings, energy: float, channel: int = 0) -> List[float]:
    """|⟨φ_k*|γ_c⟩/(E - z_k)| per mode"""
    gamma = _channel_vector(couplings, channel)
    return [abs(np.dot(m.left, gamma) / (energy - m.value)) for m in modeset.modes]


def decay_rate(
    modeset: Union[ModeSet, Sequence[float]],
    weights: Sequence[complex],
    times: Sequence[float],
) -> DecaySeries:
    """k_gr(t) = Σ Γ_k|c_k|²e^{-Γ_k t} / Σ |c_k|²e^{-Γ_k t} (ħ = 1)"""
    widths = np.asarray(
        modeset.widths if isinstance(modeset, ModeSet) else modeset, dtype=float
    )
    w = np.abs(np.asarray(weights, dtype=complex)) ** 2
    if len(w) != len(widths):
        raise DomainError(f"{len(w)} weights for {len(widths)} modes")
    scale = max(1.0, float(np.max(np.abs(widths))) if len(widths) else 1.0)
    if np.any(widths < -1e-12 * scale):
        raise DomainError(f"negative width {widths.min():.3e} (gain mode)")
    widths = np.clip(widths, 0.0, None)
    if not np.any(w > 0):
        raise DomainError("all decay weights are zero")

    t = np.asarray(times, dtype=float)
    live = w > 0
    g_live, w_live = widths[live], w[live]
    g_min = float(g_live.min())
    shifted = w_live[None, :] * np.exp(-np.outer(t, g_live - g_min))
    rate = (shifted @ g_live) / shifted.sum(axis=1)
    population = (w[None, :] * np.exp(-np.outer(t, widths))).sum(axis=1)
    return DecaySeries(
        times=list(t),
        population=list(population),
        rate=list(rate),
        weights=list(w),
        widths=list(widths),
    )


# =============================================================================
# TRAPPING DIAGNOSTICS
# =============================================================================


def _alphas(branches: Sequence[Branch]) -> np.ndarray:
    return np.asarray(branches[0].grid, dtype=float)


def average_rate_vs_alpha(
    branches: Sequence[Branch], tolerances: Optional[Tolerances] = None
) -> AverageRateReport:
    """Mean width of the trapped branches against α, with saturation onset.

    The broad branch joins the average until it aligns with the channel
    (width above alignment_ratio of the total); beyond that it is left out.
    """
    tol = tolerances or DEFAULT_TOLERANCES
    alphas = _alphas(branches)
    widths = np.array([b.widths for b in branches])
    broad = int(np.argmax(widths[:, -1]))
    totals = widths.sum(axis=0)
    aligned = (totals > 0) & (widths[broad] > tol.alignment_ratio * totals * (1 + 1e-9))
    trapped = np.delete(widths, broad, axis=0).mean(axis=0)
    gamma_av = np.where(aligned, trapped, widths.mean(axis=0))
    slope = np.gradient(gamma_av, alphas)
    onset = next((float(a) for a, d in zip(alphas, slope) if d <= 0), None)
    tau_av = [float(1.0 / g) if g > 0 else float("inf") for g in gamma_av]
    return AverageRateReport(
        alphas=list(alphas),
        gamma_av=list(gamma_av),
        tau_av=tau_av,
        broad_branch=branches[broad].index,
        broad_excluded=[bool(a) for a in aligned],
        saturation_alpha=onset,
    )


def order_parameter(
    branches: Sequence[Branch], tolerances: Optional[Tolerances] = None
) -> OrderParameterSeries:
    """Γ₀/N against α with derivative-jump detection of alpha_cr"""
    tol = tolerances or DEFAULT_TOLERANCES
    alphas = _alphas(branches)
    widths = np.array([b.widths for b in branches])
    n = len(branches)
    g0 = widths.max(axis=0) / n
    derivative = np.gradient(g0, alphas)
    totals = widths.sum(axis=0)
    localized = [
        int(np.sum(widths[:, s] <= tol.alignment_ratio * totals[s] * (1 + 1e-9))) if totals[s] > 0 else n
        for s in range(len(alphas))
    ]

    jumps = np.abs(np.diff(derivative))
    if len(jumps) < 3:
        return OrderParameterSeries(
            alphas=list(alphas), gamma0_over_n=list(g0), derivative=list(derivative),
            jump_tol=math.nan, alpha_cr=None, post_critical_r2=None, linear=None,
            localized_states=localized, status="inconclusive",
        )
    jump_tol = max(
        tol.jump_tol_factor * float(np.median(jumps)),
        1e-6 * float(np.max(np.abs(derivative))),
    )
    k = int(np.argmax(jumps))
    if jumps[k] <= jump_tol:
        return OrderParameterSeries(
            alphas=list(alphas), gamma0_over_n=list(g0), derivative=list(derivative),
            jump_tol=jump_tol, alpha_cr=None, post_critical_r2=None, linear=None,
            localized_states=localized, status="no-transition",
        )

    alpha_cr = float((alphas[k] + alphas[k + 1]) / 2.0)
    post = alphas > alpha_cr
    r2 = None
    if np.count_nonzero(post) >= 3:
        coeffs = np.polyfit(alphas[post], g0[post], 1)
        fit = np.polyval(coeffs, alphas[post])
        ss_res = float(np.sum((g0[post] - fit) ** 2))
        ss_tot = float(np.sum((g0[post] - g0[post].mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    status = "transition" if r2 is not None else "inconclusive"
    logger.info(f"📊 alpha_cr ≈ {alpha_cr:.4g}, post-critical R² = {r2}")
    return OrderParameterSeries(
        alphas=list(alphas),
        gamma0_over_n=list(g0),
        derivative=list(derivative),
        jump_tol=jump_tol,
        alpha_cr=alpha_cr,
        post_critical_r2=r2,
        linear=None if r2 is None else r2 >= tol.lin_r2,
        localized_states=localized,
        status=status,
    )
