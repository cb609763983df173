"""Piecewise-linear annual load duration curves with exact band-energy integration."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numba
import numpy as np


@numba.njit(cache=True)
def _integral_kernel(loads: np.ndarray, x: np.ndarray, y: np.ndarray,
                     cum: np.ndarray, peak: float) -> np.ndarray:
    """Running duration integral at each load, clipped to [0, peak]."""
    out = np.empty(loads.shape[0])
    kmax = x.shape[0] - 2
    for i in range(loads.shape[0]):
        b = loads[i]
        if b < 0.0:
            b = 0.0
        elif b > peak:
            b = peak
        k = 0
        for s in range(1, x.shape[0]):
            if x[s] <= b:
                k = s
            else:
                break
        if k > kmax:
            k = kmax
        x0 = x[k]
        y0 = y[k]
        slope = (y[k + 1] - y0) / (x[k + 1] - x0)
        dx = b - x0
        out[i] = cum[k] + dx * (y0 + 0.5 * slope * dx)
    return out


@dataclass(frozen=True)
class LoadDurationCurve:
    """Annual load duration curve: duration of exceedance as a function of load level.

    The curve is piecewise linear and non-increasing.  Loads at or below the
    base level are exceeded for the full year; duration falls linearly (through
    an optional interior breakpoint) to zero at the peak.  When ``base == peak``
    the curve degenerates to a rectangle.
    """

    peak_mw: float
    base_mw: float
    hours: float = 8760.0
    # optional interior knot as (duration_fraction, load_fraction); the load
    # fraction interpolates between base and peak, the duration fraction scales
    # the year.  None gives the single straight segment from base to peak.
    breakpoint: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if not (0.0 < self.base_mw <= self.peak_mw):
            raise ValueError(f"base load must satisfy 0 < base <= peak, got "
                             f"base={self.base_mw}, peak={self.peak_mw}")
        if self.hours <= 0.0:
            raise ValueError(f"hours must be positive, got {self.hours}")
        if self.breakpoint is not None:
            df, lf = self.breakpoint
            if not (0.0 < df < 1.0 and 0.0 < lf < 1.0):
                raise ValueError(f"breakpoint fractions must lie strictly inside "
                                 f"(0, 1), got {self.breakpoint}")
            if self.base_mw == self.peak_mw:
                raise ValueError("breakpoint is meaningless on a rectangular curve")

    @cached_property
    def _knots(self) -> tuple[np.ndarray, np.ndarray]:
        # strictly increasing load knots with their exceedance durations
        loads = [0.0, self.base_mw]
        durations = [self.hours, self.hours]
        if self.breakpoint is not None:
            df, lf = self.breakpoint
            loads.append(self.base_mw + lf * (self.peak_mw - self.base_mw))
            durations.append(df * self.hours)
        if self.peak_mw > self.base_mw:
            loads.append(self.peak_mw)
            durations.append(0.0)
        return np.asarray(loads), np.asarray(durations)

    @cached_property
    def _cum_energy(self) -> np.ndarray:
        # running integral of duration over load at each knot (MWh)
        x, y = self._knots
        seg = np.diff(x) * (y[1:] + y[:-1]) / 2.0
        return np.concatenate(([0.0], np.cumsum(seg)))

    def duration_at(self, load_mw):
        """Hours per year during which demand strictly exceeds ``load_mw``."""
        x, y = self._knots
        load = np.asarray(load_mw, dtype=float)
        out = np.where(load >= self.peak_mw, 0.0, np.interp(load, x, y))
        return float(out) if np.isscalar(load_mw) else out

    def _integral_to(self, load):
        x, y = self._knots
        clipped = np.minimum(np.maximum(load, 0.0), self.peak_mw)
        idx = np.clip(np.searchsorted(x, clipped, side="right") - 1, 0, len(x) - 2)
        x0, y0 = x[idx], y[idx]
        slope = (y[idx + 1] - y0) / (x[idx + 1] - x0)
        dx = clipped - x0
        return self._cum_energy[idx] + dx * (y0 + 0.5 * slope * dx)

    def energy_between(self, lo_mw, hi_mw):
        """Annual energy (MWh) demanded within the load band [lo_mw, hi_mw]."""
        lo = np.asarray(lo_mw, dtype=float)
        hi = np.asarray(hi_mw, dtype=float)
        if np.any(lo < 0.0) or np.any(hi < lo):
            raise ValueError(f"band must satisfy 0 <= lo <= hi, got "
                             f"[{lo_mw}, {hi_mw}]")
        out = self._integral_to(hi) - self._integral_to(lo)
        return float(out) if out.ndim == 0 else out

    def energy_above(self, load_mw):
        """Annual energy (MWh) demanded above each load level (vectorized)."""
        total = self._cum_energy[-1]
        out = total - self._integral_to(np.asarray(load_mw, dtype=float))
        return float(out) if np.isscalar(load_mw) else out

    def integrals_at(self, loads: np.ndarray) -> np.ndarray:
        """Running energy integral at each load, clipped to [0, peak] (fast path)."""
        x, y = self._knots
        return _integral_kernel(np.ascontiguousarray(loads, dtype=np.float64),
                                x, y, self._cum_energy, self.peak_mw)

    @property
    def total_energy(self) -> float:
        """Annual energy under the whole curve (MWh)."""
        return float(self._cum_energy[-1])


def build_ldc(peak_mw: float, base_ratio: float, hours: float = 8760.0,
              breakpoint: tuple[float, float] | None = None) -> LoadDurationCurve:
    """Construct a curve from peak load and the base-to-peak ratio."""
    if peak_mw <= 0.0:
        raise ValueError(f"peak load must be positive, got {peak_mw}")
    if not (0.0 < base_ratio <= 1.0):
        raise ValueError(f"base ratio must lie in (0, 1], got {base_ratio}")
    return LoadDurationCurve(peak_mw, base_ratio * peak_mw, hours, breakpoint)
