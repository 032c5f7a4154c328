import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from sdlab.datum import (DatumComponent, DatumError, GaussBump, Gaussian, InitialDatum, PowerTail,
                         SobolevDivergenceError, datum_from_records, degree_indices, fourier_eval,
                         gaussian_datum, make_envelope, make_threshold_datum, side_eval,
                         sobolev_norm_sq, taylor_terms)


def fd_second(f, h=1e-4):
    return (f(h) - 2 * f(0.0) + f(-h)) / h**2


@given(st.sampled_from(["gaussian", "powertail", "gaussbump"]), st.floats(0.3, 4.0))
def test_envelope_taylor_pairs(kind, p):
    env = make_envelope(kind, p)
    g0, g2 = env.taylor
    assert env(0.0) == pytest.approx(g0, rel=1e-15)
    # g2 is the r² coefficient: env(r) = g0 + g2 r² + O(r⁴)
    assert fd_second(lambda r: float(env(abs(r)))) / 2 == pytest.approx(g2, rel=1e-5, abs=1e-7)


def test_envelope_decay():
    assert Gaussian(1.0).decay == math.inf
    assert GaussBump(1.0).decay == math.inf
    assert PowerTail(3.5).decay == 3.5
    r = 1e4
    assert PowerTail(3.5)(r) == pytest.approx(r**-3.5, rel=1e-6)
    with pytest.raises(DatumError):
        make_envelope("cauchy", 1.0)
    with pytest.raises((DatumError, ValueError)):
        Gaussian(-1.0)


@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_taylor_terms_match_finite_differences_2d(s0, amp):
    comp = DatumComponent(Gaussian(s0), (0, 0), amp)
    table = taylor_terms((comp,), 2, 2)
    assert table.coefficient((0, 0)) == pytest.approx(amp)
    h = 1e-4
    f = lambda x, y: fourier_eval(comp, np.array([x, y])).real  # noqa: E731
    dxx = (f(h, 0) - 2 * f(0, 0) + f(-h, 0)) / h**2 / 2
    assert table.coefficient((2, 0)) == pytest.approx(dxx, rel=1e-5)
    assert table.coefficient((1, 1)) == 0


def test_physical_moments_against_physical_space_integrals():
    # û(ξ) = e^{-σξ²} is the transform of (4πσ)^{-1/2} e^{-x²/(4σ)}
    sigma = 0.7
    u = lambda x: math.exp(-x * x / (4 * sigma)) / math.sqrt(4 * math.pi * sigma)  # noqa: E731
    table = taylor_terms((DatumComponent(Gaussian(sigma), (0,), 1.0),), 2, 1)
    for k in (0, 2):
        ref = integrate.quad(lambda x: x**k * u(x), -np.inf, np.inf)[0]
        assert table.physical_moment((k,)) == pytest.approx(ref, rel=1e-10)


def test_first_moment_component_and_degree_indices():
    comp = DatumComponent(Gaussian(1.0), (1, 0), 0.5)
    table = taylor_terms((comp,), 2, 2)
    assert table.physical_moment((1, 0)) == pytest.approx(0.5j)
    assert degree_indices(2, 2) == [(2, 0), (1, 1), (0, 2)]
    assert len(degree_indices(3, 2)) == 6
    with pytest.raises(ValueError):
        taylor_terms((comp,), 3, 2)


def test_side_eval_sums_components():
    comps = (DatumComponent(Gaussian(1.0), (0,), 2.0), DatumComponent(PowerTail(3.0), (1,), -1.0))
    xi = np.array([0.5])
    ref = 2 * math.exp(-0.25) - 0.5 * (1.25) ** -1.5
    assert side_eval(comps, xi) == pytest.approx(ref)


def test_tail_validation():
    with pytest.raises(DatumError):
        InitialDatum(3, (), (DatumComponent(PowerTail(1.5), (0, 0, 0), 1.0),), 0.0)
    with pytest.raises(DatumError):
        InitialDatum(3, (DatumComponent(PowerTail(2.4), (0, 0, 0), 1.0),), (), 0.0)
    with pytest.raises(DatumError):
        DatumComponent(Gaussian(1.0), (3,), 1.0)
    with pytest.raises(DatumError):
        InitialDatum(1, (), (DatumComponent(Gaussian(1.0), (0, 1), 1.0),))


@given(st.integers(1, 30), st.floats(0.0, 4.0), st.floats(0.01, 0.5))
def test_threshold_datum_sits_inside_the_space(n, l, eps):
    d = make_threshold_datum(n, l, eps)
    s = l + n / 2 + eps
    assert d.u1[0].envelope.decay == pytest.approx(s)
    assert d.u0[0].envelope.decay == pytest.approx(s + 1)
    assert d.sobolev_l == l


def test_flattened_threshold_cancels_r2_term():
    d = make_threshold_datum(19, 0.0, 0.02, flatten=True)
    table = taylor_terms(d.u1, 2, 19)
    assert table.coefficient((0,) * 19) == pytest.approx(0.5)
    assert not table.nonzero(2)


def test_sobolev_norm_finite_and_divergent():
    n = 3
    comps = (DatumComponent(PowerTail(2.0), (0, 0, 0), 1.0),)
    # ∫(1+|ξ|^{2p})(1+r²)^{-2} dξ finite iff 4 - 2p > 3
    val = sobolev_norm_sq(comps, 0.25, n)
    ref = 4 * math.pi * integrate.quad(lambda r: (1 + r**0.5) * (1 + r * r) ** -2 * r * r, 0, np.inf,
                                       epsabs=0, epsrel=1e-12, limit=500)[0]
    assert val == pytest.approx(ref, rel=1e-7)
    with pytest.raises(SobolevDivergenceError):
        sobolev_norm_sq(comps, 0.5, n)


def test_records_roundtrip_and_digest():
    d = gaussian_datum(2, 1.0, 2.0, 1.0, 3.0)
    again = datum_from_records(2, d.records(), d.sobolev_l, d.weight_gamma)
    assert again == d and again.digest() == d.digest()
    other = gaussian_datum(2, 1.0, 2.0, 1.0, 3.0000001)
    assert other.digest() != d.digest()
    with pytest.raises(DatumError):
        datum_from_records(2, [{"side": "u2"}])
