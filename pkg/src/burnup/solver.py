from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np
from scipy.linalg import expm, solve_triangular

from ..nuclear_data import AVOGADRO, NuclideId, as_identity
from .chain import ChainError, ChainSpec
from .scenario import IrradiationScenario

CONFLUENCE_TOLERANCE = 1e-12


class DegenerateChainError(ArithmeticError):
    """Two coupled removal rates stay confluent after perturbation"""


def burnup_matrix(chain: ChainSpec, flux: float) -> np.ndarray:
    """Rate matrix A (s^-1) with dN/dt = A N; A[j, i] is the feeding rate i -> j"""
    size = len(chain)
    matrix = np.zeros((size, size))
    for edge in chain.captures:
        source, dest = chain.index(edge.source), chain.index(edge.dest)
        rate = edge.rate(flux)
        matrix[dest, source] += rate
        matrix[source, source] -= rate
    for edge in chain.decays:
        source, dest = chain.index(edge.source), chain.index(edge.dest)
        matrix[dest, source] += edge.rate
        matrix[source, source] -= edge.rate
    return matrix


@dataclass(frozen=True, eq=False)
class InventoryTrajectory:
    times: np.ndarray
    # shape (nuclides, times)
    counts: np.ndarray
    nuclides: Tuple[NuclideId, ...]
    molar_masses: Tuple[float, ...]
    boundaries: Tuple[float, ...]
    chain: Optional[ChainSpec] = None
    matrices: Tuple[np.ndarray, ...] = ()
    evaluator: Optional[Callable[[float], np.ndarray]] = field(default=None, repr=False)

    def index(self, identity: Union[str, NuclideId]) -> int:
        key = as_identity(identity)
        try:
            return self.nuclides.index(key)
        except ValueError:
            raise ChainError(f"{key} is not in the trajectory") from None

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(nid.name for nid in self.nuclides)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def series(self, identity: Union[str, NuclideId]) -> np.ndarray:
        return self.counts[self.index(identity)]

    def mass_g(self, identity: Union[str, NuclideId]) -> np.ndarray:
        position = self.index(identity)
        return self.counts[position] * self.molar_masses[position] / AVOGADRO

    def at_index(self, position: int) -> Dict[NuclideId, float]:
        return {nid: float(value) for nid, value in zip(self.nuclides, self.counts[:, position])}

    def total(self) -> np.ndarray:
        """Summed atom count per grid time"""
        return self.counts.sum(axis=0)

    def segment_index(self, t: float) -> int:
        """Segment in force at time t; boundary instants belong to the earlier segment"""
        if not self.boundaries:
            return 0
        return min(int(np.searchsorted(self.boundaries, t, side='left')), len(self.boundaries) - 1)

    def state_at(self, t: float) -> np.ndarray:
        if not 0.0 <= t <= self.t_end:
            raise ValueError(f"t={t} outside [0, {self.t_end}]")
        if self.evaluator is not None:
            return self.evaluator(t)
        hits = np.nonzero(self.times == t)[0]
        if not len(hits):
            raise ValueError(f"t={t} is not a grid time of this trajectory")
        return self.counts[:, hits[0]].copy()


def _output_grid(scenario: IrradiationScenario) -> np.ndarray:
    if not scenario.segments:
        raise ValueError("Scenario has no segments")
    end = scenario.boundaries[-1]
    if scenario.grid_points == 1 or end == 0.0:
        return np.array([end])
    return np.linspace(0.0, end, scenario.grid_points)


def _initial_vector(chain: ChainSpec, scenario: IrradiationScenario) -> np.ndarray:
    state = np.zeros(len(chain))
    for nuclide, atoms in scenario.initial_inventory.items():
        if nuclide not in chain:
            raise ChainError(f"Initial inventory names {nuclide}, which is not in the chain")
        state[chain.index(nuclide)] = atoms
    return state


def _ancestors(matrix: np.ndarray) -> np.ndarray:
    """ancestors[i, k] is True when nuclide k feeds nuclide i through any path"""
    size = len(matrix)
    ancestors = np.zeros((size, size), dtype=bool)
    for i in range(size):
        parents = np.nonzero(matrix[i, :i])[0]
        ancestors[i, parents] = True
        if len(parents):
            ancestors[i] |= ancestors[parents].any(axis=0)
    return ancestors


def _confluent(a: float, b: float, tolerance: float) -> bool:
    scale = max(abs(a), abs(b))
    return scale > 0.0 and abs(a - b) <= tolerance * scale


def _separate_eigenvalues(matrix: np.ndarray, names: Sequence[str], tolerance: float) -> np.ndarray:
    """Diagonal with coupled near-equal entries pushed apart by 2*tolerance relative"""
    diagonal = np.diag(matrix).copy()
    ancestors = _ancestors(matrix)
    for i in range(len(diagonal)):
        upstream = np.nonzero(ancestors[i])[0]
        clashes = [k for k in upstream if _confluent(diagonal[k], diagonal[i], tolerance)]
        if not clashes:
            continue
        scale = max(abs(diagonal[i]), max(abs(diagonal[k]) for k in clashes))
        diagonal[i] -= 2.0 * tolerance * scale
        logging.warning(f"Confluent removal rates for {names[i]} and "
                        f"{', '.join(names[k] for k in clashes)}; perturbed by {2.0 * tolerance:g} relative")
        if any(_confluent(diagonal[k], diagonal[i], tolerance) or diagonal[k] == diagonal[i] for k in upstream):
            raise DegenerateChainError(
                f"Removal rate of {names[i]} still confluent with an upstream nuclide after perturbation")
    return diagonal


class _SegmentPropagator:
    """Bateman eigen form of one constant-flux segment"""

    def __init__(self, matrix: np.ndarray, start_state: np.ndarray, start_time: float,
                 names: Sequence[str], tolerance: float):
        size = len(matrix)
        diagonal = _separate_eigenvalues(matrix, names, tolerance)
        vectors = np.eye(size)
        for k in range(size):
            for i in range(k + 1, size):
                numerator = matrix[i, k:i] @ vectors[k:i, k]
                if numerator != 0.0:
                    vectors[i, k] = numerator / (diagonal[k] - diagonal[i])
        self.start_time = start_time
        self.eigenvalues = diagonal
        self.vectors = vectors
        self.coefficients = solve_triangular(vectors, start_state, lower=True, unit_diagonal=True)

    def __call__(self, t: Union[float, np.ndarray]) -> np.ndarray:
        elapsed = np.asarray(t, dtype=float) - self.start_time
        if elapsed.ndim == 0:
            return self.vectors @ (self.coefficients * np.exp(self.eigenvalues * elapsed))
        growth = np.exp(np.outer(self.eigenvalues, elapsed))
        return self.vectors @ (self.coefficients[:, None] * growth)


def solve_inventory(chain: ChainSpec,
                    scenario: IrradiationScenario,
                    confluence_tolerance: float = CONFLUENCE_TOLERANCE) -> InventoryTrajectory:
    """Exact piecewise solution of dN/dt = A N over the scenario's flux segments"""
    times = _output_grid(scenario)
    boundaries = scenario.boundaries
    state = _initial_vector(chain, scenario)
    counts = np.empty((len(chain), len(times)))
    counts[:, times == 0.0] = state[:, None]

    propagators: List[_SegmentPropagator] = []
    matrices = []
    start = 0.0
    for number, (segment, end) in enumerate(zip(scenario.segments, boundaries)):
        matrix = burnup_matrix(chain, segment.flux)
        propagator = _SegmentPropagator(matrix, state, start, chain.names, confluence_tolerance)
        last = number == len(boundaries) - 1
        mask = (times > start) & ((times <= end) | last)
        if mask.any():
            counts[:, mask] = propagator(times[mask])
        state = propagator(end)
        propagators.append(propagator)
        matrices.append(matrix)
        start = end

    def evaluate(t: float) -> np.ndarray:
        if t == 0.0:
            return _initial_vector(chain, scenario)
        segment = min(int(np.searchsorted(boundaries, t, side='left')), len(boundaries) - 1)
        return propagators[segment](t)

    return InventoryTrajectory(
        times=times,
        counts=counts,
        nuclides=chain.nuclides,
        molar_masses=chain.molar_masses,
        boundaries=boundaries,
        chain=chain,
        matrices=tuple(matrices),
        evaluator=evaluate,
    )


def analytic_chain(removal_rates: Sequence[float],
                   initial: Sequence[float],
                   t: float,
                   transfer_rates: Optional[Sequence[float]] = None,
                   confluent: bool = False) -> np.ndarray:
    """Textbook Bateman values for a linear chain of two or three species.

    removal_rates[i] is the total loss rate of species i; transfer_rates[i]
    (default: removal_rates[i]) is the part of it that feeds species i + 1.
    Equal rates need confluent=True, which switches to the exponential of the
    bidiagonal rate matrix.
    """
    rates = [float(rate) for rate in removal_rates]
    size = len(rates)
    if size not in (2, 3):
        raise ValueError(f"analytic_chain handles two or three species, got {size}")
    if len(initial) != size:
        raise ValueError("initial must have one entry per species")
    transfers = list(rates[:-1]) if transfer_rates is None else [float(rate) for rate in transfer_rates]
    if len(transfers) != size - 1:
        raise ValueError("transfer_rates must have one entry per link")
    if any(rate < 0 for rate in rates + transfers):
        raise ValueError("Rates must be non-negative")
    if t == 0:
        return np.asarray(initial, dtype=float).copy()

    degenerate = any(
        _confluent(rates[a], rates[b], CONFLUENCE_TOLERANCE) or rates[a] == rates[b]
        for a in range(size) for b in range(a + 1, size)
    )
    if degenerate and not confluent:
        raise DegenerateChainError("Equal removal rates need the confluent form (confluent=True)")
    if confluent:
        matrix = np.diag([-rate for rate in rates]) + np.diag(transfers, k=-1)
        return expm(matrix * t) @ np.asarray(initial, dtype=float)

    result = np.zeros(size)
    for j in range(size):
        for i in range(j + 1):
            if initial[i] == 0:
                continue
            feed = math.prod(transfers[i:j])
            terms = 0.0
            for k in range(i, j + 1):
                denominator = math.prod(rates[l] - rates[k] for l in range(i, j + 1) if l != k)
                terms += math.exp(-rates[k] * t) / denominator
            result[j] += initial[i] * feed * terms
    return result


def _lump_fast(matrix: np.ndarray, fast: Sequence[int]) -> np.ndarray:
    """Redirect every inflow of a fast nuclide to its daughters by branching"""
    matrix = matrix.copy()
    for f in fast:
        removal = -matrix[f, f]
        if removal > 0:
            weights = matrix[:, f].copy()
            weights[f] = 0.0
            weights /= removal
            for source in np.nonzero(matrix[f, :])[0]:
                if source == f:
                    continue
                matrix[:, source] += matrix[f, source] * weights
                matrix[f, source] = 0.0
        matrix[:, f] = 0.0
    return matrix


def _rk4_step_matrix(matrix: np.ndarray, h: float) -> np.ndarray:
    scaled = matrix * h
    squared = scaled @ scaled
    cubed = squared @ scaled
    return np.eye(len(matrix)) + scaled + squared / 2.0 + cubed / 6.0 + (cubed @ scaled) / 24.0


def integrate_rk4(chain: ChainSpec,
                  scenario: IrradiationScenario,
                  lump_rate: Optional[float] = None,
                  step_factor: float = 1e-3) -> InventoryTrajectory:
    """Fixed-step classical Runge-Kutta integration of the same rate equations.

    The step is at most step_factor / max|A_ii| inside every grid interval.
    Nuclides whose removal rate exceeds lump_rate are folded into their
    daughters and left out of the returned trajectory.
    """
    times = _output_grid(scenario)
    full = [burnup_matrix(chain, segment.flux) for segment in scenario.segments]
    state = _initial_vector(chain, scenario)

    fast: List[int] = []
    if lump_rate is not None:
        fastest = np.max([-np.diag(matrix) for matrix in full], axis=0)
        fast = [i for i in range(len(chain)) if fastest[i] > lump_rate]
    for f in fast:
        removal = -full[0][f, f]
        if state[f] and removal > 0:
            outflow = full[0][:, f].copy()
            outflow[f] = 0.0
            state += state[f] * outflow / removal
            state[f] = 0.0
    keep = [i for i in range(len(chain)) if i not in fast]
    reduced = [_lump_fast(matrix, fast)[np.ix_(keep, keep)] for matrix in full]
    state = state[keep]
    if fast:
        logging.info(f"RK4 oracle lumped {', '.join(chain.nuclides[f].name for f in fast)} "
                     f"(removal above {lump_rate:g}/s)")

    boundaries = scenario.boundaries
    events = np.union1d(times, np.asarray(boundaries))
    counts = np.empty((len(keep), len(times)))
    recorded = 0
    if times[0] == 0.0:
        counts[:, 0] = state
        recorded = 1
    previous = 0.0
    for t in events:
        if t <= previous:
            continue
        segment = min(int(np.searchsorted(boundaries, t, side='left')), len(boundaries) - 1)
        matrix = reduced[segment]
        interval = t - previous
        fastest = np.max(np.abs(np.diag(matrix))) if matrix.size else 0.0
        if fastest > 0.0:
            steps = max(1, math.ceil(interval * fastest / step_factor))
            step = _rk4_step_matrix(matrix, interval / steps)
            state = np.linalg.matrix_power(step, steps) @ state
        previous = t
        while recorded < len(times) and times[recorded] <= t:
            counts[:, recorded] = state
            recorded += 1

    return InventoryTrajectory(
        times=times,
        counts=counts,
        nuclides=tuple(chain.nuclides[i] for i in keep),
        molar_masses=tuple(chain.molar_masses[i] for i in keep),
        boundaries=boundaries,
        chain=None if fast else chain,
        matrices=tuple(reduced),
    )
