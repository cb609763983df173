"""Capacity outage probability tables by analytic convolution, with LOLP and EENS."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numba
import numpy as np

from .ldc import LoadDurationCurve

DEFAULT_PRUNE_THRESHOLD = 1e-10


@numba.njit(cache=True)
def _prune_kernel(vec: np.ndarray, tau: float) -> float:
    removed = 0.0
    for i in range(vec.shape[0]):
        v = vec[i]
        if 0.0 < v < tau:
            removed += v
            vec[i] = 0.0
    return removed


@numba.njit(cache=True)
def _two_state_kernel(vec: np.ndarray, shift: int, for_rate: float) -> np.ndarray:
    n = vec.shape[0]
    out = np.empty(n + shift)
    for i in range(n):
        out[i] = for_rate * vec[i]
    for i in range(n, n + shift):
        out[i] = 0.0
    avail = 1.0 - for_rate
    for i in range(n):
        out[shift + i] += avail * vec[i]
    return out


@numba.njit(cache=True)
def _levels_kernel(vec: np.ndarray, shifts: np.ndarray,
                   probs: np.ndarray) -> np.ndarray:
    n = vec.shape[0]
    out = np.zeros(n + shifts[-1])
    for k in range(shifts.shape[0]):
        p = probs[k]
        if p != 0.0:
            s = shifts[k]
            for i in range(n):
                out[s + i] += p * vec[i]
    return out


@numba.njit(cache=True)
def _chain_kernel(band: np.ndarray, lo: int, steps: np.ndarray,
                  shifts: np.ndarray, for_rates: np.ndarray,
                  level_counts: np.ndarray, level_shifts: np.ndarray,
                  level_probs: np.ndarray, threshold: float):
    """Convolve a sequence of units onto a banded vector.

    One step per entry of ``steps``: convolve unit type ``steps[s]``, prune
    with the per-convolution budget, then trim zero edges.  ``lo`` tracks the
    grid offset of the band's first entry.
    """
    for s in range(steps.shape[0]):
        j = steps[s]
        m = level_counts[j]
        n = band.shape[0]
        if m == 0:
            shift = shifts[j]
            q = for_rates[j]
            out = np.empty(n + shift)
            for i in range(n):
                out[i] = q * band[i]
            for i in range(n, n + shift):
                out[i] = 0.0
            p = 1.0 - q
            for i in range(n):
                out[shift + i] += p * band[i]
        else:
            top = level_shifts[j, m - 1]
            out = np.zeros(n + top)
            for k in range(m):
                pr = level_probs[j, k]
                if pr != 0.0:
                    sh = level_shifts[j, k]
                    for i in range(n):
                        out[sh + i] += pr * band[i]
        if threshold > 0.0:
            tau = threshold / out.shape[0]
            for i in range(out.shape[0]):
                v = out[i]
                if 0.0 < v < tau:
                    out[i] = 0.0
        a = 0
        b = out.shape[0]
        while a < b and out[a] == 0.0:
            a += 1
        while b > a and out[b - 1] == 0.0:
            b -= 1
        band = out[a:b]
        lo += a
    return band, lo


def _prune_vector(vec: np.ndarray, threshold: float) -> float:
    """Zero entries below a per-convolution budget; returns the mass removed.

    The budget ``threshold`` is split evenly over the vector's entries, so
    each convolution discards at most ``threshold`` probability in total no
    matter how long the table grows.
    """
    if threshold <= 0.0 or len(vec) == 0:
        return 0.0
    return float(_prune_kernel(vec, threshold / len(vec)))


def convolve_two_state_vec(vec: np.ndarray, shift: int, for_rate: float) -> np.ndarray:
    """Convolve a capacity-probability vector with one two-state unit.

    ``shift`` is the unit capacity in grid steps.  Index k of the result is
    the probability that available capacity equals k steps.
    """
    return _two_state_kernel(np.ascontiguousarray(vec), shift, for_rate)


def convolve_levels_vec(vec: np.ndarray, shifts: np.ndarray,
                        probs: np.ndarray) -> np.ndarray:
    """Convolve with a multi-state unit given level shifts (grid steps) and probs."""
    return _levels_kernel(np.ascontiguousarray(vec),
                          np.ascontiguousarray(shifts, dtype=np.int64),
                          np.ascontiguousarray(probs, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class OutageTable:
    """Distribution of total available capacity on a uniform grid.

    ``probs[k]`` is the probability that available capacity equals
    ``k * step_mw``.  ``discarded`` accumulates the probability mass removed
    by pruning; it is bounded by ``prune_threshold * n_convolutions``.
    """

    step_mw: float
    probs: np.ndarray
    prune_threshold: float = DEFAULT_PRUNE_THRESHOLD
    discarded: float = 0.0
    n_convolutions: int = 0

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if self.step_mw <= 0.0:
            raise ValueError(f"grid step must be positive, got {self.step_mw}")
        if probs.ndim != 1 or len(probs) == 0:
            raise ValueError("probability vector must be a non-empty 1-d array")
        if np.any(probs < 0.0):
            raise ValueError("probabilities must be non-negative")

    @property
    def capacities(self) -> np.ndarray:
        """Available-capacity grid (MW) aligned with ``probs``."""
        return np.arange(len(self.probs)) * self.step_mw

    @property
    def total_capacity(self) -> float:
        return float((len(self.probs) - 1) * self.step_mw)

    def entries(self) -> list[tuple[float, float]]:
        """Non-zero (available_mw, probability) pairs in ascending capacity order."""
        caps = self.capacities
        return [(float(caps[k]), float(self.probs[k]))
                for k in np.flatnonzero(self.probs)]

    def _steps_of(self, capacity_mw: float) -> int:
        steps = int(round(capacity_mw / self.step_mw))
        if steps < 1:
            raise ValueError(f"capacity {capacity_mw} MW vanishes on a "
                             f"{self.step_mw} MW grid")
        if abs(steps * self.step_mw - capacity_mw) > 1e-9 * max(capacity_mw,
                                                                self.step_mw):
            raise ValueError(f"capacity {capacity_mw} MW is not a multiple of "
                             f"the {self.step_mw} MW grid")
        return steps


def empty_table(step_mw: float = 1.0,
                prune_threshold: float = DEFAULT_PRUNE_THRESHOLD) -> OutageTable:
    """Table of an empty fleet: zero capacity available with certainty."""
    return OutageTable(step_mw, np.array([1.0]), prune_threshold)


def convolve_two_state(table: OutageTable, capacity_mw: float,
                       for_rate: float) -> OutageTable:
    """Add one two-state unit (fully available or fully out) to the table."""
    if not (0.0 <= for_rate < 1.0):
        raise ValueError(f"forced outage rate must lie in [0, 1), got {for_rate}")
    vec = convolve_two_state_vec(table.probs, table._steps_of(capacity_mw), for_rate)
    removed = _prune_vector(vec, table.prune_threshold)
    return replace(table, probs=vec, discarded=table.discarded + removed,
                   n_convolutions=table.n_convolutions + 1)


def convolve_multi_state(table: OutageTable, powers_mw: np.ndarray,
                         probs: np.ndarray) -> OutageTable:
    """Add one multi-state unit given its output levels (MW) and probabilities."""
    powers_mw = np.asarray(powers_mw, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if powers_mw.shape != probs.shape or powers_mw.ndim != 1:
        raise ValueError("levels and probabilities must be matching 1-d arrays")
    if np.any(probs < 0.0):
        raise ValueError("probabilities must be non-negative")
    shifts = np.rint(powers_mw / table.step_mw).astype(int)
    if np.any(np.diff(shifts) <= 0):
        raise ValueError(f"output levels must stay distinct on the "
                         f"{table.step_mw} MW grid, got {powers_mw.tolist()}")
    vec = convolve_levels_vec(table.probs, shifts, probs)
    removed = _prune_vector(vec, table.prune_threshold)
    return replace(table, probs=vec, discarded=table.discarded + removed,
                   n_convolutions=table.n_convolutions + 1)


def lolp(table: OutageTable, curve: LoadDurationCurve) -> float:
    """Probability-weighted fraction of the year with demand above available capacity."""
    durations = curve.duration_at(table.capacities)
    return float(table.probs @ durations) / curve.hours


def eens(table: OutageTable, curve: LoadDurationCurve) -> float:
    """Expected energy not supplied per year (MWh)."""
    shortfall = curve.energy_above(table.capacities)
    return float(table.probs @ shortfall)
