"""Parameter sweeps with branch continuation, EP search and EP encircling.

Branches are matched by the c-product overlap |⟨v_prev*|v_next⟩| of
successive c-normalized eigenvectors, never by eigenvalue proximity. The
eigenvector gauge is the rotation maximizing Re of the overlap among those
keeping ⟨φ*|φ⟩ = 1, i.e. a sign flip per step. Around an EP this is the
analytic continuation: accumulated phases are 0 or π, and a reversed loop
maps p(b) back onto b with the negated phase.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import linear_sum_assignment, minimize

from .config import DEFAULT_TOLERANCES, Tolerances, get_dotted, plain_data
from .errors import (
    ConfigError,
    EptrapError,
    NoEPFoundError,
    NotAnEPError,
    StepSizeError,
    SweepError,
)
from .linalg import JordanSolve, jordan_chain
from .models import CNum, ModelSpec, apply_overrides, build, discriminant_2x2
from .parallel import parallel_map
from .spectra import ModeSet, solve_modes

logger = logging.getLogger(__name__)

# =============================================================================
# PYDANTIC MODELS
# =============================================================================


class SweepGrid(BaseModel):
    """One model parameter sampled along an ordered grid"""

    parameter: str = Field(description="Dotted name of the swept model parameter")
    samples: List[CNum] = Field(description="Parameter values in sweep order")
    model: ModelSpec = Field(description="Model spec the samples are applied to")

    @model_validator(mode="after")
    def _ordered(self):
        if len(self.samples) < 2:
            raise ValueError("a sweep grid needs at least 2 samples")
        if all(s.imag == 0 for s in self.samples):
            diffs = np.diff([s.real for s in self.samples])
            if not (np.all(diffs > 0) or np.all(diffs < 0)):
                raise ValueError("real sweep grids must be strictly monotone")
        return self

    @classmethod
    def linspace(cls, parameter: str, start: float, stop: float, num: int, model) -> "SweepGrid":
        return cls(parameter=parameter, samples=list(np.linspace(start, stop, num)), model=model)

    @property
    def is_real(self) -> bool:
        return all(s.imag == 0 for s in self.samples)


class Branch(BaseModel):
    """Continuity-matched eigenvalue trajectory"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    index: int = Field(description="Branch label, the mode index at the first sample")
    parameter: str = Field(description="Swept parameter")
    samples: List[complex] = Field(description="Parameter value per sample")
    values: np.ndarray = Field(description="Eigenvalue z per sample")
    vectors: np.ndarray = Field(description="Gauge-aligned right vectors, one row per sample")
    left_vectors: np.ndarray = Field(description="Matching left vectors, one row per sample")
    r_k: np.ndarray = Field(description="Phase rigidity per sample")
    a_k: np.ndarray = Field(description="c-normalized self overlap per sample")
    flagged_steps: List[int] = Field(
        default_factory=list,
        description="Steps s (sample s-1 to s) that were ambiguous, EP-adjacent or below the overlap floor",
    )

    @property
    def energies(self) -> np.ndarray:
        return self.values.real

    @property
    def widths(self) -> np.ndarray:
        return -2.0 * self.values.imag

    @property
    def grid(self) -> np.ndarray:
        """Real sample axis when the sweep is real, else the complex samples"""
        arr = np.array(self.samples)
        return arr.real if np.all(arr.imag == 0) else arr


class AvoidedCrossing(BaseModel):
    pair: Tuple[int, int] = Field(description="Branch indices")
    parameter: CNum = Field(description="Parameter value at the gap minimum")
    min_gap: float = Field(description="|z_i - z_j| at the minimum")
    kind: str = Field(description="energy-repulsion or width-bifurcation")


class EpCandidate(BaseModel):
    """Located coalescence of two eigenvalues"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    parameters: Dict[str, CNum] = Field(description="Parameter values at the coalescence")
    plane: List[str] = Field(description="Searched parameter names")
    complex_plane: bool = Field(description="True when a single complex parameter spans the plane")
    eigenvalue: CNum = Field(description="Coalesced eigenvalue ε₀")
    gap: float = Field(description="|z₁ - z₂| at the optimum")
    tolerance: float = Field(description="Accepted gap bound ep_gap_tol·scale")
    min_rigidity: float = Field(description="Smallest phase rigidity at the optimum")
    jordan: Optional[JordanSolve] = Field(default=None, description="Jordan chain at ε₀")


class CycleReport(BaseModel):
    """Branch bookkeeping while encircling an EP"""

    center: Dict[str, CNum] = Field(description="Loop center")
    radius: float = Field(description="Loop radius in the parameter plane")
    steps: int = Field(description="Steps per loop")
    loops: int = Field(description="Loops traversed")
    direction: int = Field(description="+1 counter-clockwise, -1 clockwise")
    permutations: List[List[int]] = Field(
        description="Mode index each branch sits on after 1, 2, ... loops"
    )
    loop_permutations: List[List[int]] = Field(description="Permutation performed by each single loop")
    phases: List[List[float]] = Field(
        description=(
            "Accumulated phase of each branch after 1, 2, ... loops, against the starting vector it lands on; "
            "c-normalized continuation leaves only 0 or π"
        )
    )
    loops_to_restore_values: Optional[int] = Field(description="First loop count restoring all eigenvalues")
    loops_to_restore_vectors: Optional[int] = Field(description="First loop count restoring all eigenvectors")
    value_history: List[List[CNum]] = Field(description="Eigenvalue per branch per step")
    phase_history: List[List[float]] = Field(
        description="arg of the c-overlap with the branch's own starting vector, per step"
    )

    def reversed_loop(self) -> Tuple[List[int], List[float]]:
        """Permutation and phases a single loop in the opposite direction must report.

        A loop taking branch b onto mode p(b) with phase α_b is undone by the
        reversed loop, which takes p(b) back onto b with phase -α_b.
        """
        perm, phases = self.loop_permutations[0], self.phases[0]
        inverse = [0] * len(perm)
        negated = [0.0] * len(perm)
        for b, j in enumerate(perm):
            inverse[j] = b
            negated[j] = _wrap(-phases[b])
        return inverse, negated


# =============================================================================
# MATCHING
# =============================================================================


def _overlaps(prev: Sequence[Tuple[np.ndarray, np.ndarray]], nxt: ModeSet, hermitian: bool) -> np.ndarray:
    """|overlap| matrix between tracked branches (rows) and new modes (cols)"""
    if hermitian:
        a = np.array([r / np.linalg.norm(r) for r, _ in prev]).conj()
        b = nxt.rights / np.linalg.norm(nxt.rights, axis=0)
    else:
        a = np.array([left for _, left in prev])
        b = nxt.rights
    return np.abs(a @ b)


def _assign(overlap: np.ndarray, floor: float) -> np.ndarray:
    """Greedy assignment with optimal-assignment fallback below the floor"""
    n = overlap.shape[0]
    assigned = -np.ones(n, dtype=int)
    taken = set()
    for flat in np.argsort(-overlap, axis=None):
        b, j = divmod(int(flat), n)
        if assigned[b] < 0 and j not in taken:
            assigned[b] = j
            taken.add(j)
    if np.any(overlap[np.arange(n), assigned] < floor):
        rows, cols = linear_sum_assignment(-overlap)
        assigned[rows] = cols
        logger.debug("🔍 Greedy matching fell below the overlap floor, used optimal assignment")
    return assigned


def _ambiguous(overlap: np.ndarray, assigned: np.ndarray, tol: float) -> bool:
    n = len(assigned)
    for p in range(n):
        for q in range(p + 1, n):
            kept = overlap[p, assigned[p]] + overlap[q, assigned[q]]
            swapped = overlap[p, assigned[q]] + overlap[q, assigned[p]]
            if abs(kept - swapped) <= tol:
                return True
    return False


def _advance(
    prev: List[Tuple[np.ndarray, np.ndarray]],
    nxt: ModeSet,
    tol: Tolerances,
    ep_adjacent: bool,
) -> Tuple[np.ndarray, List[Tuple[np.ndarray, np.ndarray]], float, bool]:
    """Match one step. Returns (assignment, new gauge-aligned vectors, min overlap, ambiguous)"""
    overlap = _overlaps(prev, nxt, hermitian=ep_adjacent)
    assigned = _assign(overlap, tol.overlap_floor)
    worst = float(np.min(overlap[np.arange(len(assigned)), assigned]))
    ambiguous = _ambiguous(overlap, assigned, tol.ambiguity_tol)

    aligned = []
    for b, j in enumerate(assigned):
        right = nxt.modes[j].right
        left = nxt.modes[j].left
        prev_right, prev_left = prev[b]
        if ep_adjacent:
            sign = np.vdot(prev_right, right).real
        else:
            sign = np.dot(prev_left, right).real
        if sign < 0:
            right, left = -right, -left
        aligned.append((right, left))
    return assigned, aligned, worst, ambiguous


# =============================================================================
# SWEEP
# =============================================================================


def evaluate_modes(
    model, parameter: str, samples: Sequence[complex], tolerances: Tolerances, workers: Optional[int] = None
) -> List[ModeSet]:
    """ModeSet per sample, evaluated concurrently"""
    base = apply_overrides(model, {parameter: _plain(samples[0])})

    def task(i: int, value):
        try:
            return solve_modes(build(base, {parameter: _plain(value)}), tolerances)
        except ConfigError:
            raise
        except EptrapError as e:
            raise SweepError(f"sample {i} ({parameter}={value}): {e.message}", i, value)

    return parallel_map(task, list(samples), workers)


def _plain(value: complex):
    value = complex(value)
    return value.real if value.imag == 0 else value


def sweep(
    grid: SweepGrid, tolerances: Optional[Tolerances] = None, workers: Optional[int] = None
) -> List[Branch]:
    """Continuity-matched branches over the grid"""
    tol = tolerances or DEFAULT_TOLERANCES
    logger.info(f"📊 Sweeping {grid.parameter} over {len(grid.samples)} samples")
    modesets = evaluate_modes(grid.model, grid.parameter, grid.samples, tol, workers)

    n = len(modesets[0].modes)
    first = modesets[0]
    current = [(m.right, m.left) for m in first.modes]
    slots = [list(range(n))]
    vectors = [list(current)]
    flagged: List[int] = []

    for s in range(1, len(modesets)):
        ep_adjacent = bool(modesets[s - 1].ep_pairs or modesets[s].ep_pairs)
        assigned, current, worst, ambiguous = _advance(current, modesets[s], tol, ep_adjacent)
        if ambiguous or ep_adjacent or worst < tol.overlap_floor:
            flagged.append(s)
            logger.debug(
                f"🔍 Step {s} flagged (ambiguous={ambiguous}, ep={ep_adjacent}, min overlap={worst:.3f})"
            )
        slots.append(list(assigned))
        vectors.append(list(current))

    branches = []
    for b in range(n):
        idx = [slots[s][b] for s in range(len(modesets))]
        branches.append(
            Branch(
                index=b,
                parameter=grid.parameter,
                samples=list(grid.samples),
                values=np.array([modesets[s].modes[j].value for s, j in enumerate(idx)]),
                vectors=np.array([vectors[s][b][0] for s in range(len(modesets))]),
                left_vectors=np.array([vectors[s][b][1] for s in range(len(modesets))]),
                r_k=np.array([modesets[s].r_k[j] for s, j in enumerate(idx)]),
                a_k=np.array([modesets[s].a_k[j] for s, j in enumerate(idx)]),
                flagged_steps=list(flagged),
            )
        )
    if flagged:
        logger.info(f"⚠️ {len(flagged)} sweep steps flagged during matching")
    return branches


def detect_avoided_crossings(
    branches: Sequence[Branch], threshold: float = math.inf
) -> List[AvoidedCrossing]:
    """Local minima of |z_i - z_j| below threshold, classified by which part of the gap survives"""
    found = []
    for i in range(len(branches)):
        for j in range(i + 1, len(branches)):
            dz = branches[i].values - branches[j].values
            gaps = np.abs(dz)
            for s in range(1, len(gaps) - 1):
                if gaps[s] < gaps[s - 1] and gaps[s] <= gaps[s + 1] and gaps[s] < threshold:
                    kind = (
                        "energy-repulsion"
                        if abs(dz[s].real) >= abs(dz[s].imag)
                        else "width-bifurcation"
                    )
                    found.append(
                        AvoidedCrossing(
                            pair=(branches[i].index, branches[j].index),
                            parameter=branches[i].samples[s],
                            min_gap=float(gaps[s]),
                            kind=kind,
                        )
                    )
    return found


# =============================================================================
# EP SEARCH
# =============================================================================


class _Plane:
    """Maps a real search vector onto model parameter overrides"""

    def __init__(self, model, names: Sequence[str]):
        if len(names) not in (1, 2):
            raise ConfigError("EP search needs one complex or two real parameters")
        self.model = model
        self.names = list(names)
        data = plain_data(model.model_dump())
        current = {name: get_dotted(data, name, owner=f"{model.kind} model") for name in self.names}
        self.current = current
        self.complex_plane = len(self.names) == 1 and isinstance(current[self.names[0]], complex)

    @property
    def dims(self) -> int:
        return 2 if self.complex_plane else len(self.names)

    def initial(self, guess) -> np.ndarray:
        if guess is None:
            guess = [self.current[n] for n in self.names]
        if not isinstance(guess, (list, tuple, np.ndarray)):
            guess = [guess]
        if self.complex_plane:
            g = guess[0] if len(guess) == 1 else complex(guess[0], guess[1])
            g = complex(g)
            return np.array([g.real, g.imag])
        return np.array([complex(g).real for g in guess], dtype=float)

    def overrides(self, x: np.ndarray) -> Dict[str, Any]:
        if self.complex_plane:
            return {self.names[0]: complex(x[0], x[1])}
        out = {}
        for name, value in zip(self.names, x):
            held = self.current[name]
            out[name] = complex(value, held.imag) if isinstance(held, complex) else float(value)
        return out

    def values(self, x: np.ndarray) -> Dict[str, complex]:
        return {k: complex(v) for k, v in self.overrides(x).items()}


def _closest_pair(values: np.ndarray) -> Tuple[int, int]:
    best, pair = math.inf, (0, 1)
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            d = abs(values[i] - values[j])
            if d < best:
                best, pair = d, (i, j)
    return pair


def _discriminant(model, overrides) -> complex:
    """(z₁ - z₂)² of the closest pair; closed form for 2×2 models"""
    m = build(model, overrides)
    if m.n == 2:
        return discriminant_2x2(m.entries)
    values = solve_modes(m).values
    i, j = _closest_pair(values)
    return complex((values[i] - values[j]) ** 2)


def _safe_abs_discriminant(model, plane: _Plane, x: np.ndarray) -> float:
    try:
        return abs(_discriminant(model, plane.overrides(x)))
    except EptrapError:
        return math.inf


def _newton_polish(model, plane: _Plane, x: np.ndarray, iters: int = 40) -> np.ndarray:
    """Newton on (Re D, Im D) with a central-difference Jacobian; keeps the best iterate"""
    best_x = x.copy()
    best_f = _safe_abs_discriminant(model, plane, x)
    for _ in range(iters):
        if best_f == 0.0 or not math.isfinite(best_f):
            break
        try:
            d0 = _discriminant(model, plane.overrides(x))
            jac = np.zeros((2, len(x)))
            for k in range(len(x)):
                h = 1e-7 * max(1.0, abs(x[k]))
                xp, xm = x.copy(), x.copy()
                xp[k] += h
                xm[k] -= h
                dd = (_discriminant(model, plane.overrides(xp)) - _discriminant(model, plane.overrides(xm))) / (2 * h)
                jac[:, k] = [dd.real, dd.imag]
        except EptrapError:
            break
        step = np.linalg.lstsq(jac, -np.array([d0.real, d0.imag]), rcond=None)[0]
        x = x + step
        f = _safe_abs_discriminant(model, plane, x)
        if f < best_f:
            best_x, best_f = x.copy(), f
        if np.linalg.norm(step) <= 1e-17 * max(1.0, np.linalg.norm(x)):
            break
    return best_x


def _ulp_polish(model, plane: _Plane, x: np.ndarray, passes: int = 3) -> np.ndarray:
    """Coordinate scan over neighbouring floats (and zero for vanishing coordinates)"""
    best = x.copy()
    best_f = _safe_abs_discriminant(model, plane, best)
    for _ in range(passes):
        improved = False
        for k in range(len(best)):
            candidates = []
            up = down = best[k]
            for _ in range(4):
                up = np.nextafter(up, math.inf)
                down = np.nextafter(down, -math.inf)
                candidates += [up, down]
            if abs(best[k]) < 1e-12:
                candidates.append(0.0)
            for value in candidates:
                trial = best.copy()
                trial[k] = value
                f = _safe_abs_discriminant(model, plane, trial)
                if f < best_f:
                    best, best_f, improved = trial, f, True
            if best_f == 0.0:
                return best
        if not improved:
            break
    return best


def locate_ep(
    model,
    parameters: Sequence[str],
    guess=None,
    tolerances: Optional[Tolerances] = None,
) -> EpCandidate:
    """Coalescence of the closest eigenvalue pair in a parameter plane.

    `parameters` names one complex parameter or two real ones (complex-typed
    fields searched as real keep their imaginary part). Simplex descent on
    |D| with D = (z₁ - z₂)² seeds a Newton polish on D.
    """
    tol = tolerances or DEFAULT_TOLERANCES
    plane = _Plane(model, parameters)
    x0 = plane.initial(guess)
    build(model, plane.overrides(x0))
    logger.info(f"🔍 Searching EP in {plane.names} from {plane.values(x0)}")

    result = minimize(
        lambda x: _safe_abs_discriminant(model, plane, x),
        x0,
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-24, "maxiter": 4000 * plane.dims, "maxfev": 8000 * plane.dims},
    )
    x = _newton_polish(model, plane, np.array(result.x, dtype=float))
    x = _ulp_polish(model, plane, x)

    overrides = plane.overrides(x)
    m = build(model, overrides)
    gap = math.sqrt(_safe_abs_discriminant(model, plane, x))
    bound = tol.ep_gap_tol * m.scale
    best_point = plane.values(x)
    if not gap <= bound:
        raise NoEPFoundError(
            f"descent stagnated at gap {gap:.3e} > {bound:.3e} near {best_point}",
            best_point=best_point,
            best_gap=gap,
        )

    modes = solve_modes(m, tol)
    i, j = _closest_pair(modes.values)
    eps0 = complex((modes.values[i] + modes.values[j]) / 2.0)
    if m.n == 2:
        eps0 = complex(np.trace(m.entries) / 2.0)
    try:
        jordan = jordan_chain(m, eps0, tol)
    except NotAnEPError as e:
        raise NoEPFoundError(
            f"degeneracy at {best_point} is not defective: {e.message}",
            best_point=best_point,
            best_gap=gap,
        )
    logger.info(f"✅ EP at {best_point} with gap {gap:.3e}")
    return EpCandidate(
        parameters=best_point,
        plane=plane.names,
        complex_plane=plane.complex_plane,
        eigenvalue=eps0,
        gap=gap,
        tolerance=bound,
        min_rigidity=float(min(modes.r_k)),
        jordan=jordan,
    )


# =============================================================================
# ENCIRCLING
# =============================================================================


def _loop_overrides(ep: EpCandidate, radius: float, theta: float) -> Dict[str, Any]:
    shift = radius * np.exp(1j * theta)
    if ep.complex_plane:
        name = ep.plane[0]
        return {name: complex(ep.parameters[name]) + shift}
    if len(ep.plane) != 2:
        raise ConfigError("encircling needs a two-dimensional parameter plane")
    first, second = ep.plane
    return {
        first: _plain(complex(ep.parameters[first]) + shift.real),
        second: _plain(complex(ep.parameters[second]) + shift.imag),
    }


def _wrap(angle: float) -> float:
    """Angle in (-π, π]"""
    wrapped = math.remainder(angle, 2 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def encircle_ep(
    model,
    ep: EpCandidate,
    radius: float,
    steps: int = 200,
    loops: int = 4,
    direction: int = 1,
    tolerances: Optional[Tolerances] = None,
    workers: Optional[int] = None,
) -> CycleReport:
    """Continue all branches around a circle centered on the EP"""
    tol = tolerances or DEFAULT_TOLERANCES
    if steps < 100:
        raise ConfigError(f"encircling needs at least 100 steps per loop, got {steps}")
    if loops < 1 or radius <= 0:
        raise ConfigError("encircling needs loops ≥ 1 and a positive radius")
    direction = 1 if direction >= 0 else -1

    thetas = [direction * 2 * math.pi * s / steps for s in range(steps)]

    def task(i: int, theta: float) -> ModeSet:
        return solve_modes(build(model, _loop_overrides(ep, radius, theta)), tol)

    modesets = parallel_map(task, thetas, workers)
    start = modesets[0]
    n = len(start.modes)
    current = [(m.right, m.left) for m in start.modes]
    slots = np.arange(n)
    history_values: List[List[complex]] = [[m.value] for m in start.modes]
    history_phase: List[List[float]] = [[0.0] for _ in range(n)]

    permutations, loop_perms, phases = [], [], []
    previous_slots = np.arange(n)
    for k in range(1, loops * steps + 1):
        ms = modesets[k % steps]
        slots, current, worst, _ = _advance(current, ms, tol, ep_adjacent=False)
        if worst < tol.overlap_floor:
            raise StepSizeError(
                f"overlap {worst:.3f} below floor {tol.overlap_floor} at step {k}; use more steps"
            )
        for b in range(n):
            history_values[b].append(ms.modes[slots[b]].value)
            history_phase[b].append(float(np.angle(np.dot(start.modes[b].left, current[b][0]))))
        if k % steps == 0:
            perm = [int(j) for j in slots]
            permutations.append(perm)
            step_perm = [0] * n
            for b in range(n):
                step_perm[previous_slots[b]] = perm[b]
            loop_perms.append(step_perm)
            previous_slots = np.array(perm)
            phases.append(
                [_wrap(float(np.angle(np.dot(start.modes[perm[b]].left, current[b][0])))) for b in range(n)]
            )

    identity = list(range(n))
    restore_values = next((i + 1 for i, p in enumerate(permutations) if p == identity), None)
    restore_vectors = next(
        (
            i + 1
            for i, p in enumerate(permutations)
            if p == identity and all(abs(_wrap(ph)) <= tol.phase_tol for ph in phases[i])
        ),
        None,
    )
    logger.info(
        f"📊 Encircled EP {loops}x: values restored after {restore_values}, vectors after {restore_vectors}"
    )
    return CycleReport(
        center={k: complex(v) for k, v in ep.parameters.items()},
        radius=radius,
        steps=steps,
        loops=loops,
        direction=direction,
        permutations=permutations,
        loop_permutations=loop_perms,
        phases=phases,
        loops_to_restore_values=restore_values,
        loops_to_restore_vectors=restore_vectors,
        value_history=[[complex(v) for v in row] for row in history_values],
        phase_history=history_phase,
    )
