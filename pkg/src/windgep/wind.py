"""Wind turbine power curve, empirical output levels, and multi-state farm models."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class PowerCurve:
    """Quadratic turbine power curve between cut-in and rated speed.

    Output is zero below cut-in and at or above cut-out, rises as
    ``rated_power * (a + b*v + c*v**2)`` on [cut_in, rated], and holds at
    rated power on [rated, cut_out).
    """

    cut_in: float     # m/s
    rated: float      # m/s
    cut_out: float    # m/s
    rated_power: float  # MW
    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.cut_in < self.rated < self.cut_out):
            raise ValueError(f"speeds must satisfy 0 <= cut_in < rated < cut_out, "
                             f"got ({self.cut_in}, {self.rated}, {self.cut_out})")
        if self.rated_power <= 0.0:
            raise ValueError(f"rated power must be positive, got {self.rated_power}")

    def output(self, speed):
        """Power output (MW) at the given wind speed(s).

        The fitted quadratic can dip slightly below zero just above cut-in
        (or overshoot rated) for extreme speed ratios; output is clipped to
        the physical range.
        """
        v = np.asarray(speed, dtype=float)
        frac = np.clip(self.a + self.b * v + self.c * v * v, 0.0, 1.0)
        out = np.select(
            [v < self.cut_in, v <= self.rated, v < self.cut_out],
            [0.0, self.rated_power * frac, self.rated_power],
            default=0.0,
        )
        return float(out) if np.isscalar(speed) else out


def fit_power_curve(cut_in: float, rated: float, cut_out: float,
                    rated_power: float) -> PowerCurve:
    """Fit the quadratic coefficients from the curve's defining conditions.

    The quadratic section is pinned by zero output at cut-in, rated output at
    rated speed, and the cubic wind-power ratio at the midpoint speed:
    P((cut_in + rated)/2) = ((cut_in + rated) / (2 * rated))**3 * rated_power.
    """
    if not (0.0 <= cut_in < rated):
        raise ValueError(f"need 0 <= cut_in < rated, got ({cut_in}, {rated})")
    mid = 0.5 * (cut_in + rated)
    lhs = np.array([[1.0, cut_in, cut_in ** 2],
                    [1.0, mid, mid ** 2],
                    [1.0, rated, rated ** 2]])
    rhs = np.array([0.0, (mid / rated) ** 3, 1.0])
    a, b, c = np.linalg.solve(lhs, rhs)
    return PowerCurve(cut_in, rated, cut_out, rated_power, float(a), float(b), float(c))


@dataclass(frozen=True, eq=False)
class WindSeries:
    """Wind speed samples (m/s) at a fixed sampling interval."""

    speeds: np.ndarray
    interval_hours: float = 1.0

    def __post_init__(self) -> None:
        speeds = np.asarray(self.speeds, dtype=float)
        speeds.setflags(write=False)
        object.__setattr__(self, "speeds", speeds)
        if speeds.ndim != 1 or len(speeds) == 0:
            raise ValueError("wind series must be a non-empty 1-d array")
        if np.any(speeds < 0.0) or not np.all(np.isfinite(speeds)):
            raise ValueError("wind speeds must be finite and non-negative")
        if self.interval_hours <= 0.0:
            raise ValueError(f"interval must be positive, got {self.interval_hours}")


def read_wind_series(path: str | Path, interval_hours: float = 1.0) -> WindSeries:
    """Read a ``timestamp,wind_speed_ms`` CSV into a wind series."""
    speeds = []
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        for row in rows:
            if not row or row[0].startswith("#"):
                continue
            if row[0].strip().lower() == "timestamp":
                continue
            if len(row) < 2:
                raise ValueError(f"{path}: expected 'timestamp,wind_speed_ms' rows, "
                                 f"got {row!r}")
            speeds.append(float(row[1]))
    if not speeds:
        raise ValueError(f"{path}: no wind speed samples found")
    return WindSeries(np.asarray(speeds), interval_hours)


def _validate_model(powers: np.ndarray, probs: np.ndarray, prob_tol: float) -> None:
    if powers.ndim != 1 or powers.shape != probs.shape or len(powers) < 2:
        raise ValueError("output model needs matching 1-d arrays of >= 2 levels")
    if np.any(np.diff(powers) <= 0.0):
        raise ValueError("output levels must be strictly increasing")
    if powers[0] != 0.0:
        raise ValueError(f"lowest output level must be 0, got {powers[0]}")
    if np.any(probs < 0.0):
        raise ValueError("level probabilities must be non-negative")
    total = float(probs.sum())
    if abs(total - 1.0) > prob_tol:
        raise ValueError(f"level probabilities sum to {total!r}, expected 1 "
                         f"within {prob_tol}")


def _freeze(obj, powers, probs) -> None:
    powers = np.asarray(powers, dtype=float)
    probs = np.asarray(probs, dtype=float)
    powers.setflags(write=False)
    probs.setflags(write=False)
    object.__setattr__(obj, "powers", powers)
    object.__setattr__(obj, "probs", probs)


@dataclass(frozen=True, eq=False)
class TurbineOutputModel:
    """Discrete output model of a single turbine: K power levels with probabilities.

    ``prob_tol`` loosens the unit-mass check when ingesting rounded published
    tables; models built by the pipeline satisfy the default tolerance.
    """

    powers: np.ndarray  # MW, ascending, first level 0, last level rated power
    probs: np.ndarray
    prob_tol: float = 1e-9

    def __post_init__(self) -> None:
        _freeze(self, self.powers, self.probs)
        _validate_model(self.powers, self.probs, self.prob_tol)

    @property
    def rated_power(self) -> float:
        return float(self.powers[-1])

    @property
    def expected_output(self) -> float:
        """Probability-weighted mean output (MW)."""
        return float(self.powers @ self.probs)


@dataclass(frozen=True, eq=False)
class FarmOutputModel:
    """Discrete output model of a whole farm after forced-outage aggregation."""

    powers: np.ndarray  # MW, class representatives, ascending from 0
    probs: np.ndarray
    turbine_count: int
    for_rate: float
    prob_tol: float = 1e-9

    def __post_init__(self) -> None:
        _freeze(self, self.powers, self.probs)
        _validate_model(self.powers, self.probs, self.prob_tol)
        if self.turbine_count < 1:
            raise ValueError(f"turbine count must be >= 1, got {self.turbine_count}")
        if not (0.0 <= self.for_rate < 1.0):
            raise ValueError(f"forced outage rate must lie in [0, 1), "
                             f"got {self.for_rate}")

    @property
    def nameplate(self) -> float:
        return float(self.powers[-1])

    @property
    def expected_output(self) -> float:
        """Probability-weighted mean output (MW)."""
        return float(self.powers @ self.probs)


def build_turbine_model(curve: PowerCurve, series: WindSeries,
                        levels: int = 6) -> TurbineOutputModel:
    """Cluster a wind series' power outputs into equally spaced levels.

    Level representatives are evenly spaced from 0 to rated power; samples are
    assigned to the nearest representative (class edges at midpoints, an edge
    value belongs to the class above it).
    """
    if levels < 2:
        raise ValueError(f"need at least 2 output levels, got {levels}")
    reps = np.linspace(0.0, curve.rated_power, levels)
    edges = (reps[:-1] + reps[1:]) / 2.0
    idx = np.searchsorted(edges, curve.output(series.speeds), side="right")
    probs = np.bincount(idx, minlength=levels) / len(series.speeds)
    return TurbineOutputModel(reps, probs)


def availability_distribution(n_units: int, for_rate: float) -> np.ndarray:
    """Binomial distribution of the number of available units.

    Returns the probability vector indexed by available-unit count 0..n_units.
    Computed in log space so large fleets stay finite.
    """
    if n_units < 1:
        raise ValueError(f"unit count must be >= 1, got {n_units}")
    if not (0.0 <= for_rate < 1.0):
        raise ValueError(f"forced outage rate must lie in [0, 1), got {for_rate}")
    if for_rate == 0.0:
        probs = np.zeros(n_units + 1)
        probs[n_units] = 1.0
        return probs
    i = np.arange(n_units + 1)
    log_comb = (math.lgamma(n_units + 1)
                - np.array([math.lgamma(k + 1) + math.lgamma(n_units - k + 1)
                            for k in i]))
    log_p = log_comb + i * math.log1p(-for_rate) + (n_units - i) * math.log(for_rate)
    return np.exp(log_p)


def aggregate_farm(turbine: TurbineOutputModel, n_units: int,
                   for_rate: float) -> FarmOutputModel:
    """Combine per-turbine output levels with unit availability into a farm model.

    Every (available-count, output-level) state contributes its joint
    probability to the farm class whose representative ``n_units * level`` is
    nearest to the state capacity (edges at midpoints, edge values rounding up).
    """
    avail = availability_distribution(n_units, for_rate)
    caps = np.multiply.outer(np.arange(n_units + 1, dtype=float), turbine.powers)
    joint = np.multiply.outer(avail, turbine.probs)
    reps = n_units * turbine.powers
    edges = (reps[:-1] + reps[1:]) / 2.0
    idx = np.searchsorted(edges, caps.ravel(), side="right")
    probs = np.bincount(idx, weights=joint.ravel(), minlength=len(reps))
    mass = float(turbine.probs.sum())
    tol = max(1e-9, abs(1.0 - mass) + 1e-9)
    return FarmOutputModel(reps, probs, n_units, for_rate, prob_tol=tol)
