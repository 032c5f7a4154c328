import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdlab.datum import gaussian_datum, make_threshold_datum
from sdlab.kernels import solution_multipliers
from sdlab.profiles import (ProfileSpec, ProfileSpecError, build_A, build_B, build_C, build_D,
                            c_multipliers, catalan_h_coeffs, catalan_numbers, highfreq_coeffs,
                            highfreq_family, highfreq_term, kernel_truncation, lowfreq_coeffs,
                            lowfreq_family, lowfreq_term, phi, phi_taylor, residual_multipliers,
                            residual_stack, solution_minus_C, solution_stack)


def central_fd(f, x0, k, h="1e-10", dps=50):
    """k-th derivative / k! by the central finite-difference stencil, in high precision."""
    with mp.workdps(dps):
        h = mp.mpf(h)
        total = mp.mpf(0)
        for i in range(k + 1):
            total += (-1) ** i * mp.binomial(k, i) * f(x0 + (k / mp.mpf(2) - i) * h)
        return float(total / h**k / mp.factorial(k))


def mp_L(j, t, r):
    def f(a):
        theta = t * r - t * r**4 * a / (4 + 2 * mp.sqrt(4 - a * a))
        if j == 0:
            return mp.cos(theta)
        return mp.sin(theta) / (r / 2 * mp.sqrt(4 - a * a))
    return f


def mp_H(j, t, r):
    def f(b):
        root = mp.sqrt(1 - 4 * b)
        g = mp.exp(-(t / r**2) * 2 / (1 + root))
        return g / 2 if j == 0 else g / (r**4 * root)
    return f


def test_catalan_exact():
    assert catalan_numbers(5) == [1, 1, 2, 5, 14, 42]
    coeffs = catalan_h_coeffs(12).coeffs
    assert [int(round(c)) for c in coeffs] == catalan_numbers(12)
    assert np.array_equal(coeffs[:6], [1, 1, 2, 5, 14, 42])


def test_phi_series_against_finite_differences():
    coeffs = phi_taylor(6).coeffs
    f = lambda a: a / (4 + 2 * mp.sqrt(4 - a * a))  # noqa: E731
    for k in range(7):
        assert abs(coeffs[k] - central_fd(f, mp.mpf(0), k)) <= 1e-6 * max(1.0, abs(coeffs[k]))
    assert coeffs[1] == pytest.approx(1 / 8, rel=1e-15)
    assert coeffs[3] == pytest.approx(1 / 128, rel=1e-15)
    assert coeffs[0] == coeffs[2] == coeffs[4] == 0


@given(st.integers(0, 1), st.integers(0, 3), st.floats(1.0, 500.0), st.floats(0.01, 1.0))
def test_lowfreq_jets_against_finite_differences(j, k, t, r):
    got = lowfreq_coeffs(j, 3, t, r)[k]
    ref = central_fd(mp_L(j, mp.mpf(t), mp.mpf(r)), mp.mpf(0), k)
    assert abs(got - ref) <= 1e-6 * max(1.0, abs(ref))


@given(st.integers(0, 1), st.integers(0, 3), st.floats(0.5, 500.0), st.floats(1.5, 20.0))
def test_highfreq_jets_against_finite_differences(j, k, t, r):
    got = highfreq_coeffs(j, 3, t, r)[k]
    ref = central_fd(mp_H(j, mp.mpf(t), mp.mpf(r)), mp.mpf(0), k)
    assert abs(got - ref) <= 1e-6 * max(abs(ref), 1e-300) + 1e-300


def test_closed_form_families_at_zero():
    t, r = 3.0, 0.4
    assert np.isclose(lowfreq_family(0, t, r, 0.0), lowfreq_coeffs(0, 0, t, r)[0])
    assert np.isclose(lowfreq_family(1, t, r, 0.0), lowfreq_coeffs(1, 0, t, r)[0])
    assert np.isclose(highfreq_family(0, t, 3.0, 0.0), 0.5 * math.exp(-t / 9))
    assert np.isclose(highfreq_family(1, t, 3.0, 0.0), math.exp(-t / 9) / 81)
    assert phi(0.0) == 0.0


def test_leading_terms_are_diffusion_waves():
    t, r = 7.0, np.array([0.0, 0.2, 0.9])
    assert np.allclose(lowfreq_term(0, 0, t, r), np.exp(-t * r**4 / 2) * np.cos(t * r))
    assert np.allclose(lowfreq_term(1, 0, t, r), np.exp(-t * r**4 / 2) * t * np.sinc(t * r / np.pi))
    assert np.allclose(highfreq_term(0, 0, t, np.array([2.0, 5.0])), 0.5 * np.exp(-t / np.array([4.0, 25.0])))


def test_c0_identity():
    t = np.array([[0.5], [4.0], [64.0], [1024.0]])
    r = np.geomspace(0.05, 50, 40)[None, :]
    c0, c1 = c_multipliers(0, t, r)
    ref = np.exp(-t / r**2)
    mask = ref > 0
    assert np.max(np.abs(c0 - ref)[mask] / ref[mask]) <= 1e-14
    assert np.all(c1 == 0)


@pytest.mark.parametrize("k", range(0, 6))
def test_D_is_difference_of_C(k):
    d = gaussian_datum(1)
    t = 9.0
    xi = np.array([[1.5], [2.5], [6.0]])
    dk = build_D(k, d).evaluate(t, xi)
    ck = build_C(k, d).evaluate(t, xi)
    prev = build_C(k - 1, d).evaluate(t, xi) if k else 0.0
    # the difference of the sums cancels to about eps·|C^k|
    assert np.all(np.abs(dk - (ck - prev)) <= 1e-12 * np.abs(dk) + 4e-16 * np.abs(ck))


@given(st.integers(0, 4), st.floats(1.0, 200.0), st.floats(1.5, 6.0))
def test_residual_multipliers_match_high_precision_difference(k, t, r):
    # oracle: û multipliers in 60 digits minus the (well-conditioned) C^k sums
    c0, c1 = c_multipliers(k, t, r)
    d0, d1 = residual_multipliers(k, t, r)
    e0m, e1m = _mp_multipliers(t, r)
    ref0 = e0m - mp.mpf(float(c0))
    ref1 = e1m - mp.mpf(float(c1))
    scale0 = abs(float(c0)) * 1e-15
    scale1 = abs(float(c1)) * 1e-15
    assert abs(float(d0) - float(ref0)) <= 1e-6 * abs(float(ref0)) + 4 * scale0 + 1e-300
    assert abs(float(d1) - float(ref1)) <= 1e-6 * abs(float(ref1)) + 4 * scale1 + 1e-300


def _mp_multipliers(t, r):
    with mp.workdps(60):
        t = mp.mpf(t)
        r = mp.mpf(r)
        disc = mp.sqrt(mp.mpc(r**8 - 4 * r**2))
        l1 = (-r**4 + disc) / 2
        l2 = (-r**4 - disc) / 2
        e0 = (mp.exp(l1 * t) + mp.exp(l2 * t)) / 2
        e1 = (mp.exp(l1 * t) - mp.exp(l2 * t)) / (l1 - l2)
        return mp.re(e0 + r**4 / 2 * e1), mp.re(e1)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_far_shell_residual_matches_next_closed_form_terms(k):
    # deep in the shell the residual is the next 𝓗 terms to high relative accuracy
    t, r = 4096.0, np.array([16.0, 32.0, 64.0])
    d0, d1 = residual_multipliers(k, t, r)
    k0, k1 = k // 2, (k - 1) // 2
    nxt0 = highfreq_term(0, k0 + 1, t, r) + 0.5 * r**4 * highfreq_term(1, k0 + 1, t, r)
    nxt1 = highfreq_term(1, k1 + 1, t, r)
    after0 = highfreq_term(0, k0 + 2, t, r) + 0.5 * r**4 * highfreq_term(1, k0 + 2, t, r)
    after1 = highfreq_term(1, k1 + 2, t, r)
    assert np.all(np.abs(d0 - nxt0) <= 3 * np.abs(after0) + 1e-300)
    assert np.all(np.abs(d1 - nxt1) <= 3 * np.abs(after1) + 1e-300)


def test_kernel_truncation_definition():
    t, r = 50.0, np.array([0.05, 0.3, 0.8])
    e0, e1 = solution_multipliers(t, r)
    from sdlab.kernels import kernel_pair
    E0, E1 = kernel_pair(t, r)
    for j, E in ((0, E0), (1, E1)):
        partial = sum(lowfreq_term(j, p, t, r) for p in range(3))
        assert np.allclose(kernel_truncation(j, 2, t, r), E - partial, atol=1e-14)


def test_moment_profiles_use_taylor_terms():
    d = gaussian_datum(2, sigma0=1.0, sigma1=2.0, amplitude1=3.0)
    t, xi = 10.0, np.array([0.3, 0.1])
    r = float(np.hypot(*xi))
    b10 = build_B(1, 0, d).evaluate(t, xi)
    assert np.isclose(b10, 3.0 * lowfreq_term(1, 0, t, r))
    b12 = build_B(1, 2, d).evaluate(t, xi)
    assert np.isclose(b12, 3.0 * (-2.0) * r**2 * lowfreq_term(1, 0, t, r))
    assert build_B(1, 1, d).terms == ()
    a = build_A(1, 2, d).evaluate(t, xi)
    assert np.isclose(a, b10 + b12)
    with pytest.raises(ProfileSpecError):
        build_A(1, 3, d)


def test_residual_stack_composition():
    d = make_threshold_datum(3, 0.0, 0.2)
    t, xi = 40.0, np.array([[0.2, 0.1, 0.0], [2.0, 1.0, 0.5]])
    spec = ProfileSpec(low=((1, 0),), high=1)
    got = residual_stack(d, spec).evaluate(t, xi)
    ref = (solution_stack(d).evaluate(t, xi) - build_C(1, d).evaluate(t, xi)
           - build_A(1, 0, d).evaluate(t, xi))
    assert np.allclose(got, ref, rtol=1e-10, atol=1e-14)
    assert spec.describe() == "u - A_1^0 - C^1"
    assert ProfileSpec().describe() == "u"
    assert np.allclose(solution_minus_C(0, d).evaluate(t, xi),
                       solution_stack(d).evaluate(t, xi) - build_C(0, d).evaluate(t, xi),
                       rtol=1e-10, atol=1e-14)


def test_orders_out_of_range():
    with pytest.raises(ValueError):
        phi_taylor(9)
    with pytest.raises(ValueError):
        lowfreq_term(0, 5, 1.0, 0.5)
    with pytest.raises(ValueError):
        c_multipliers(9, 1.0, 2.0)
    with pytest.raises(ValueError):
        lowfreq_coeffs(2, 1, 1.0, 1.0)
