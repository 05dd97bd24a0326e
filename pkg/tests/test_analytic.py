import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collgate import analytic
from collgate.model import TWO_PI, TrapParams

R = np.linspace(-12, 12, 6001)
r = np.linspace(-25, 25, 12001)


def _q(f, g, x):
    return complex(np.vdot(f, g) * (x[1] - x[0]))


@pytest.mark.parametrize("t", [0.0, 0.3, 1.1, math.pi / 2, 2.9, 5.0, 9.7])
def test_cm_overlap_matches_quadrature(base, t):
    q = _q(analytic.cm_wavefunction(base, R, t), analytic.cm_wavefunction(base, R, 0.0), R)
    assert abs(q - analytic.cm_overlap(base, t)) < 1e-10
    assert abs(abs(q) ** 2 - analytic.cm_overlap_sq(base, t)) < 1e-10


@pytest.mark.parametrize("t", [0.0, 0.4, 1.2, math.pi / 2, 3.0, 4.4, 8.1])
def test_rel_overlap_matches_quadrature(base, t):
    q = _q(analytic.rel_wavefunction_free(base, r, t), analytic.rel_wavefunction_free(base, r, 0.0), r)
    assert abs(q - analytic.rel_overlap_free(base, t)) < 1e-10
    assert abs(abs(q) ** 2 - analytic.rel_overlap_free_sq(base, t)) < 1e-10


def test_cm_overlap_minimum_is_0p8():
    p = TrapParams(omega0=2.0)
    t = np.linspace(0, TWO_PI, 4001)
    v = analytic.cm_overlap_sq(p, t)
    assert v.min() == pytest.approx(0.8, abs=1e-12)
    assert t[np.argmin(v)] == pytest.approx(math.pi / 2, abs=2e-3)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.1, 5.0), st.floats(0.0, 20.0))
def test_cm_closed_forms_consistent(w0, t):
    p = TrapParams(omega0=w0, x0=6.0)
    assert abs(analytic.cm_overlap(p, t)) ** 2 == pytest.approx(float(analytic.cm_overlap_sq(p, t)), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.1, 5.0), st.floats(0.0, 20.0))
def test_rel_closed_forms_consistent(w0, t):
    p = TrapParams(omega0=w0, x0=6.0)
    assert abs(analytic.rel_overlap_free(p, t)) ** 2 == pytest.approx(
        float(analytic.rel_overlap_free_sq(p, t)), rel=1e-10, abs=1e-14)


def test_free_recurrences(base):
    for k in range(4):
        assert abs(analytic.rel_overlap_free(base, k * TWO_PI)) == pytest.approx(1.0, abs=1e-12)
    # half period: the lobes have swapped, the overlap returns by symmetry
    assert abs(analytic.rel_overlap_free(base, math.pi)) == pytest.approx(1.0, abs=1e-12)
    assert abs(analytic.rel_overlap_free(base, math.pi / 2)) < 1e-6


def test_half_period_phase_is_pi_over_2(base):
    assert np.angle(analytic.rel_overlap_free(base, math.pi)) == pytest.approx(math.pi / 2, abs=1e-12)


def test_breathing_width_periodicity(base):
    t = np.linspace(0, 3, 7)
    assert np.allclose(analytic.breathing_width(base, t), analytic.breathing_width(base, t + math.pi))
    assert analytic.breathing_width(base, 0.0) == pytest.approx(base.omega0)
    st_ = analytic.breathing_state(base, 0.0)
    assert st_.phase_curvature == 0.0 and st_.gouy == 0.0
