import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import mp_kernels
from sdlab.datum import gaussian_datum
from sdlab.kernels import (BRANCH_R, BRANCH_DELTA, Frequency, char_roots, eval_E0, eval_E1,
                           eval_solution, kernel_pair, kernel_value, ode_residual,
                           solution_multipliers)

radii = st.floats(1e-3, 30.0)
times = st.floats(0.0, 200.0)


def test_r_zero_limits():
    assert eval_E0(3.0, 0.0) == 1.0
    assert eval_E1(3.0, 0.0) == 3.0


def test_t_zero_initial_values():
    r = np.geomspace(1e-3, 50, 41)
    e0, e1 = kernel_pair(0.0, r)
    assert np.all(e0 == 1.0)
    assert np.all(e1 == 0.0)


@given(times, radii)
def test_kernels_match_high_precision_roots(t, r):
    e0, e1 = kernel_pair(t, r)
    m0, m1 = mp_kernels(t, r)
    assert abs(float(e0) - m0) <= 1e-11 * max(1.0, abs(m0))
    assert abs(float(e1) - m1) <= 1e-11 * max(1.0, abs(m1), t)


@given(st.floats(-5e-6, 5e-6), st.sampled_from([0.1, 1.0, 10.0, 100.0]))
def test_branch_neighbourhood_matches_reference(dr, t):
    r = BRANCH_R + dr
    e0, e1 = kernel_pair(t, r)
    m0, m1 = mp_kernels(t, r)
    assert abs(float(e0) - m0) <= 1e-12
    assert abs(float(e1) - m1) <= 1e-12


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0, 100.0])
def test_branch_jump_is_bounded_by_local_slope(t):
    # difference across r_b ± eps equals the true one up to rounding
    eps = 1e-8
    for j in (0, 1):
        lo = kernel_pair(t, BRANCH_R - eps)[j]
        hi = kernel_pair(t, BRANCH_R + eps)[j]
        ref = mp_kernels(t, BRANCH_R - eps)[j] - mp_kernels(t, BRANCH_R + eps)[j]
        assert abs((lo - hi) - ref) <= 1e-14


@given(st.floats(1e-4, 1e4))
def test_root_symmetric_functions(r):
    roots = char_roots(r)
    assert abs(roots.lambda1 + roots.lambda2 + r**4) <= 1e-12 * r**4
    assert abs(roots.lambda1 * roots.lambda2 - r**2) <= 1e-12 * r**2


@given(st.floats(1.3, 1e3))
def test_real_branch_roots_are_negative(r):
    roots = char_roots(r)
    assert roots.lambda1.real < 0 and roots.lambda2.real < 0
    assert roots.lambda1.real >= roots.lambda2.real


def test_ode_residual_grid():
    datum = gaussian_datum(1)
    worst = 0.0
    for t in np.geomspace(0.1, 100, 20):
        for r in np.geomspace(1e-2, 10, 20):
            worst = max(worst, ode_residual(float(t), float(r), datum, min(1e-3, t / 4)))
    assert worst <= 1e-6


@given(times, st.floats(1.5, 1e3))
def test_high_frequency_kernels_are_bounded(t, r):
    e0, e1 = kernel_pair(t, r)
    assert 0.0 <= e0 <= 1.0
    assert 0.0 <= e1 <= t + 1e-300


def test_large_tr4_has_no_overflow():
    e0, e1 = kernel_pair(1e6, np.array([1e-2, 0.5, 1.0, 2.0, 100.0, 1e4]))
    assert np.all(np.isfinite(e0)) and np.all(np.isfinite(e1))


def test_solution_multipliers_combine_kernels():
    t, r = 2.5, np.array([0.3, 1.1, 4.0])
    e0, e1 = kernel_pair(t, r)
    m0, m1 = solution_multipliers(t, r)
    assert np.allclose(m0, e0 + r**4 / 2 * e1, rtol=1e-15)
    assert np.array_equal(m1, e1)


def test_eval_solution_and_value_types():
    d = gaussian_datum(2)
    v = eval_solution(1.0, [0.3, 0.4], d)
    m0, m1 = solution_multipliers(1.0, 0.5)
    assert abs(v - (m0 + m1) * math.exp(-0.25)) <= 1e-15
    kv = kernel_value(1.0, Frequency(0.5, 2))
    assert kv.e0 == eval_E0(1.0, 0.5) and kv.e1 == eval_E1(1.0, 0.5)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        Frequency(-1.0)
    with pytest.raises(ValueError):
        eval_E0(-1.0, 1.0)
    with pytest.raises(ValueError):
        ode_residual(1e-4, 1.0, gaussian_datum(1), 1e-3)


def test_branch_band_width():
    assert BRANCH_DELTA == 1e-6
    assert abs(BRANCH_R**3 - 2) < 1e-15
