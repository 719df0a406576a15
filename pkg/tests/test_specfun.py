import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special as sp

from rissec import specfun as sf
from rissec.meijerg import (ConvergenceError, MeijerG, MeijerGSpec, MeijerGSpecError,
                            large_argument_leading, meijer_g)
from specgen import random_specs

mp.mp.dps = 30
Z = np.array([0.1, 0.37, 1.0, 2.5, 6.0, 10.0])


def mp_meijer(spec, z):
    return float(mp.meijerg([list(spec.a[:spec.n]), list(spec.a[spec.n:])],
                            [list(spec.b[:spec.m]), list(spec.b[spec.m:])], z))


# --------------------------------------------------------------------------- scalar kernels


@pytest.mark.parametrize("x", [0.3, 1.0, 2.5, 17.2, -0.4, -3.7])
def test_ln_gamma_real_matches_math(x):
    lg, sg = sf.ln_gamma_real(x)
    assert lg == pytest.approx(math.lgamma(x), rel=1e-14, abs=1e-14)
    assert sg == math.copysign(1.0, math.gamma(x))


def test_ln_gamma_real_pole():
    lg, sg = sf.ln_gamma_real(np.array([-2.0, 0.0]))
    assert np.all(np.isinf(lg)) and np.all(sg == 0)


@pytest.mark.parametrize("z", [0.5 + 2j, -3.3 + 0.1j, 10 - 7j, 0.01j + 1])
def test_ln_gamma_complex_against_mpmath(z):
    ref = complex(mp.loggamma(mp.mpc(z)))
    assert abs(sf.ln_gamma_complex(z) - ref) < 1e-12 * max(1, abs(ref))


def test_ln_gamma_complex_pole_raises():
    with pytest.raises(ValueError):
        sf.ln_gamma_complex(-3)


@pytest.mark.parametrize("s,x", [(0.5, 0.2), (2.3, 4.0), (7.0, 1.5), (30.0, 35.0)])
def test_lower_incomplete_gamma(s, x):
    ref = float(mp.gammainc(s, 0, x))
    assert sf.lower_incomplete_gamma(s, x) == pytest.approx(ref, rel=1e-12)


def test_lower_incomplete_gamma_domain():
    with pytest.raises(ValueError):
        sf.lower_incomplete_gamma(0.0, 1.0)
    with pytest.raises(ValueError):
        sf.lower_incomplete_gamma(1.0, -1.0)


@pytest.mark.parametrize("order", [0, 1])
def test_bessel_i(order):
    x = np.array([0.0, 0.5, 3.0, 40.0])
    ref = [float(mp.besseli(order, v)) for v in x]
    np.testing.assert_allclose(sf.bessel_i(order, x), ref, rtol=1e-13)


def test_bessel_i_guards():
    with pytest.raises(ValueError):
        sf.bessel_i(2, 1.0)
    with pytest.raises(OverflowError):
        sf.bessel_i(0, 800.0)


def test_bessel_k():
    assert sf.bessel_k(0.6, 2.0) == pytest.approx(float(mp.besselk(0.6, 2.0)), rel=1e-13)
    with pytest.raises(ValueError):
        sf.bessel_k(0.6, 0.0)


# --------------------------------------------------------------------------- spec validation


@pytest.mark.parametrize("args", [
    (3, 0, (), (0.0, 1.0)),  # m > q
    (0, 2, (0.0,), (0.0,)),  # n > p
    (0, 0, (0.0,), (0.0,)),  # m + n = 0
    (1, 0, (), (np.nan,)),
])
def test_spec_invariants(args):
    with pytest.raises(MeijerGSpecError):
        MeijerGSpec(*args)


def test_cross_group_collision_detected():
    # a_1 - b_1 = 1 puts a numerator pole of each family on top of the other
    with pytest.raises(MeijerGSpecError, match="pole collision"):
        MeijerGSpec(1, 1, (1.0,), (0.0,))
    # a_1 - b_1 = 0 is fine
    MeijerGSpec(1, 1, (0.0,), (0.0,))


def test_reflection_identity():
    spec = MeijerGSpec(2, 1, (0.3, 1.2), (0.1, -0.4, 0.25))
    ref = spec.reflected()
    assert (ref.m, ref.n, ref.p, ref.q) == (1, 2, 3, 2)
    for z in (0.3, 2.0, 7.0):
        assert meijer_g(spec, z).value == pytest.approx(meijer_g(ref, 1 / z).value, rel=1e-10)


# --------------------------------------------------------------------------- closed-form identities


@pytest.mark.parametrize("method", ["slater", "mellin_barnes", None])
def test_exponential_identity(method):
    v = MeijerG(MeijerGSpec(1, 0, (), (0.0,))).evaluate(Z, method)[0]
    np.testing.assert_allclose(v, np.exp(-Z), rtol=1e-10)


@pytest.mark.parametrize("method", ["slater", "mellin_barnes", None])
def test_cauchy_kernel_identity(method):
    z = Z[Z != 1.0] if method == "slater" else Z
    v = MeijerG(MeijerGSpec(1, 1, (0.0,), (0.0,))).evaluate(z, method)[0]
    np.testing.assert_allclose(v, 1 / (1 + z), rtol=1e-10)


def test_series_route_excludes_unit_circle_when_p_equals_q():
    with pytest.raises(ConvergenceError):
        meijer_g(MeijerGSpec(1, 1, (0.0,), (0.0,)), 1.0, method="slater")


@pytest.mark.parametrize("nu", [0.3, 0.75])
@pytest.mark.parametrize("method", ["slater", "mellin_barnes", None])
def test_bessel_k_identity(nu, method):
    v = MeijerG(MeijerGSpec(2, 0, (), (nu / 2, -nu / 2))).evaluate(Z, method)[0]
    np.testing.assert_allclose(v, 2 * sp.kv(nu, 2 * np.sqrt(Z)), rtol=1e-10)


def test_integer_order_bessel_needs_perturbation():
    # b = (0, 0) is a double pole; G = 2 K_0(2 sqrt z)
    spec = MeijerGSpec(2, 0, (), (0.0, 0.0))
    for z in (0.2, 1.0, 5.0):
        rep = meijer_g(spec, z, method="slater")
        assert rep.perturbation_applied
        assert rep.value == pytest.approx(2 * sp.k0(2 * np.sqrt(z)), rel=1e-8)


def test_epsilon_halving_is_stable():
    spec = MeijerGSpec(3, 0, (), (0.0, 1.0, 0.5))
    z = 2.2
    ref = mp_meijer(spec, z)
    v1 = meijer_g(spec, z, method="slater", epsilon=1e-5).value
    v2 = meijer_g(spec, z, method="slater", epsilon=5e-6).value
    assert v1 == pytest.approx(v2, rel=1e-8)
    assert v1 == pytest.approx(ref, rel=1e-8)


# --------------------------------------------------------------------------- against an independent oracle


MP_CASES = [
    MeijerGSpec(1, 2, (0.2, -0.3), (0.4, 0.1)),
    MeijerGSpec(3, 1, (0.5, 1.0), (0.2, 1.1, 1.7, 0.0)),
    MeijerGSpec(2, 2, (0.1, 0.9, 0.3), (0.6, 0.25, -0.4)),
    MeijerGSpec(3, 1, (1.0, 2.21), (1.21, 2.296, 1.0, 0.0)),
]


@pytest.mark.parametrize("spec", MP_CASES, ids=str)
@pytest.mark.parametrize("z", [0.15, 0.8, 3.0, 9.0])
def test_against_mpmath(spec, z):
    ref = mp_meijer(spec, z)
    rep = meijer_g(spec, z)
    assert rep.value == pytest.approx(ref, rel=1e-9)
    assert rep.abs_err_estimate <= 1e-6 * abs(rep.value)


def test_random_specs_both_routes_agree():
    worst = 0.0
    for spec, z in random_specs(101, 120):
        v1 = meijer_g(spec, z, method="slater").value
        v2 = meijer_g(spec, z, method="mellin_barnes").value
        worst = max(worst, abs(v1 - v2) / abs(v2))
    assert worst < 1e-8


def test_heavy_cancellation_case_against_mpmath():
    # two nearly coincident poles and a large argument: the plain sum loses ~10 digits
    spec = MeijerGSpec(2, 1, (-0.91,), (1.439, 1.365))
    z = 7.682652455162182
    assert meijer_g(spec, z, method="slater").value == pytest.approx(mp_meijer(spec, z), rel=1e-12)


# --------------------------------------------------------------------------- failure signalling


def test_route_that_cannot_resolve_raises():
    # e^{-40} sits far below the cancellation floor of the contour integral
    with pytest.raises(ConvergenceError):
        meijer_g(MeijerGSpec(1, 0, (), (0.0,)), 40.0, method="mellin_barnes")


def test_contour_route_needs_positive_delta():
    spec = MeijerGSpec(1, 0, (0.5,), (0.0,))
    assert spec.delta <= 0
    with pytest.raises(ConvergenceError):
        meijer_g(spec, 0.3, method="mellin_barnes")
    # the series still works: G^{1,0}_{1,1}(z|0.5;0) = (1-z)^{-1/2}/sqrt(pi) for z<1
    assert meijer_g(spec, 0.3).value == pytest.approx(float(mp.meijerg([[], [0.5]], [[0], []], 0.3)), rel=1e-12)


def test_bad_argument():
    g = MeijerG(MeijerGSpec(1, 0, (), (0.0,)))
    for bad in (0.0, -1.0, np.inf, np.nan):
        with pytest.raises(ValueError):
            g.evaluate(bad)
    with pytest.raises(ValueError):
        g.evaluate(1.0, method="series")


def test_vectorized_matches_scalar():
    spec = MP_CASES[1]
    z = np.array([0.2, 1.5, 4.0])
    g = MeijerG(spec)
    np.testing.assert_allclose(g(z), [g(float(v)) for v in z], rtol=1e-13)


def test_large_argument_leading_term():
    spec = MeijerGSpec(1, 1, (0.0,), (0.0,))
    for z in (1e4, 1e6):
        assert large_argument_leading(spec, z) == pytest.approx(1 / (1 + z), rel=2 / z)


# --------------------------------------------------------------------------- properties


@settings(max_examples=60, deadline=None)
@given(b=st.floats(-0.9, 2.0), z=st.floats(0.05, 12.0))
def test_single_pole_family_is_power_times_exponential(b, z):
    v = meijer_g(MeijerGSpec(1, 0, (), (b,)), z).value
    assert v == pytest.approx(z**b * np.exp(-z), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-0.4, 0.4), z=st.floats(0.1, 8.0))
def test_argument_power_shifts_all_parameters(c, z):
    spec = MeijerGSpec(2, 1, (0.3,), (0.6, -0.2))
    shifted = MeijerGSpec(2, 1, (0.3 + c,), (0.6 + c, -0.2 + c))
    assert z**c * meijer_g(spec, z).value == pytest.approx(meijer_g(shifted, z).value, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(z=st.floats(0.1, 10.0))
def test_order_reduction(z):
    # a parameter repeated in a_{n+1..p} and b_{1..m} cancels
    full = MeijerGSpec(2, 1, (0.2, 0.7), (0.7, 0.1, -0.3))
    reduced = MeijerGSpec(1, 1, (0.2,), (0.1, -0.3))
    assert meijer_g(full, z).value == pytest.approx(meijer_g(reduced, z).value, rel=1e-9)
