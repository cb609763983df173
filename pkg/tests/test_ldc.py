"""Load duration curve: durations, energy integrals, and their consistency."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from windgep import build_ldc


def test_rectangular_curve_duration_and_energy():
    # base == peak: constant load, energy above x is linear in the gap
    curve = build_ldc(peak_mw=300.0, base_ratio=1.0, hours=8760.0)
    assert curve.duration_at(0.0) == 8760.0
    assert curve.duration_at(299.9) == 8760.0
    assert curve.duration_at(300.0) == 0.0
    assert curve.total_energy == pytest.approx(300.0 * 8760.0)
    assert curve.energy_above(100.0) == pytest.approx(200.0 * 8760.0)


def test_linear_curve_hand_values():
    # linear duration from base to peak; hand integrals:
    #   total = hours * (peak + base) / 2 = 8760 * 5250 = 45,990,000 MWh
    #   above base = hours * (peak - base) / 2 = 15,330,000 MWh
    curve = build_ldc(peak_mw=7000.0, base_ratio=0.5, hours=8760.0)
    assert curve.duration_at(3500.0) == pytest.approx(8760.0)
    assert curve.duration_at(5250.0) == pytest.approx(4380.0)
    assert curve.duration_at(7000.0) == 0.0
    assert curve.total_energy == pytest.approx(45_990_000.0)
    assert curve.energy_above(0.0) == pytest.approx(45_990_000.0)
    assert curve.energy_above(3500.0) == pytest.approx(15_330_000.0)
    # closed-form triangle area above an interior load level L:
    #   hours * (peak - L)^2 / (2 * (peak - base))
    for level in (4000.0, 5250.0, 6500.0):
        expect = 8760.0 * (7000.0 - level) ** 2 / (2.0 * 3500.0)
        assert curve.energy_above(level) == pytest.approx(expect, rel=1e-12)


def test_breakpoint_curve_knots():
    # interior knot: load = base + lf*(peak - base), duration = df*hours
    curve = build_ldc(peak_mw=1000.0, base_ratio=0.4, hours=1000.0,
                      breakpoint=(0.3, 0.5))
    assert curve.duration_at(0.0) == 1000.0
    assert curve.duration_at(400.0) == 1000.0
    assert curve.duration_at(700.0) == pytest.approx(300.0)
    assert curve.duration_at(1000.0) == 0.0
    # trapezoid sum over both segments plus the base band
    seg1 = 0.5 * (1000.0 + 300.0) * (700.0 - 400.0)
    seg2 = 0.5 * (300.0 + 0.0) * (1000.0 - 700.0)
    assert curve.total_energy == pytest.approx(400.0 * 1000.0 + seg1 + seg2)


def test_duration_monotone_and_energy_matches_quadrature():
    curve = build_ldc(peak_mw=900.0, base_ratio=0.35, hours=8760.0,
                      breakpoint=(0.2, 0.8))
    grid = np.linspace(0.0, 900.0, 20001)
    durations = np.array([curve.duration_at(x) for x in grid])
    assert np.all(np.diff(durations) <= 1e-9)
    quad = np.trapezoid(durations, grid)
    assert curve.total_energy == pytest.approx(quad, rel=1e-6)


def test_integrals_at_matches_energy_above():
    curve = build_ldc(peak_mw=600.0, base_ratio=0.5, hours=8760.0,
                      breakpoint=(0.25, 0.75))
    loads = np.array([-50.0, 0.0, 123.4, 300.0, 450.0, 600.0, 900.0])
    fast = curve.integrals_at(loads)
    total = curve.total_energy
    for x, value in zip(loads, fast):
        clipped = min(max(x, 0.0), curve.peak_mw)
        assert value == pytest.approx(total - curve.energy_above(clipped),
                                      rel=1e-12, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(
    peak=st.floats(10.0, 1e5),
    base_ratio=st.floats(0.05, 1.0),
    cuts=st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 1.0),
                   st.floats(0.0, 1.0)),
)
def test_energy_between_is_additive(peak, base_ratio, cuts):
    curve = build_ldc(peak_mw=peak, base_ratio=base_ratio, hours=8760.0)
    a, b, c = sorted(peak * np.asarray(cuts))
    whole = curve.energy_between(a, c)
    split = curve.energy_between(a, b) + curve.energy_between(b, c)
    assert split == pytest.approx(whole, rel=1e-9, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(
    peak=st.floats(10.0, 1e5),
    base_ratio=st.floats(0.05, 0.99),
    frac=st.floats(0.0, 1.5),
)
def test_energy_above_never_negative_and_bounded(peak, base_ratio, frac):
    curve = build_ldc(peak_mw=peak, base_ratio=base_ratio, hours=8760.0)
    value = curve.energy_above(frac * peak)
    assert 0.0 <= value <= curve.total_energy * (1.0 + 1e-12)
