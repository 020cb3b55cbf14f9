import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcwlattice import constants, special
from pcwlattice.errors import DomainError, UnknownSpeciesError
from pcwlattice.species import AtomSpecies, available_species, species_lookup

mpmath.mp.dps = 30

XS = np.concatenate([np.geomspace(1e-6, 1.0, 60), np.linspace(1.0, 50.0, 120)])


def _ref(kind, x):
    if kind == "J0":
        return float(mpmath.besselj(0, x))
    if kind == "Y0":
        return float(mpmath.bessely(0, x))
    return float(mpmath.besselk(0, x))


# ---------------------------------------------------------------- species and units


def test_rb_d2_registry(rb):
    assert rb.Gamma_a / (2 * math.pi) == pytest.approx(6.07e6, rel=2e-3)
    assert rb.lambda_a == pytest.approx(780.24e-9, rel=1e-5)
    assert rb.mass == pytest.approx(1.4432e-25, rel=1e-4)
    assert rb.k_a * rb.lambda_a == pytest.approx(2 * math.pi, rel=1e-15)
    assert rb.omega_a == pytest.approx(2 * math.pi * constants.C / rb.lambda_a, rel=1e-15)


def test_unknown_species_lists_known_names():
    with pytest.raises(UnknownSpeciesError) as info:
        species_lookup("Xx-D9")
    for name in available_species():
        assert name in str(info.value)


@pytest.mark.parametrize("kw", [{"Gamma_a": 0.0}, {"mass": -1.0}, {"eta": 0.0}, {"eta": 1.5}, {"lambda_a": 0.0}])
def test_species_rejects_bad_fields(kw):
    base = dict(name="x", lambda_a=780e-9, Gamma_a=1e7, mass=1e-25, eta=0.5)
    base.update(kw)
    with pytest.raises(DomainError):
        AtomSpecies(**base)


def test_with_eta_keeps_transition(rb):
    other = rb.with_eta(1.0)
    assert other.eta == 1.0 and other.omega_a == rb.omega_a


@given(st.floats(min_value=1e-3, max_value=1e16, allow_nan=False))
def test_unit_round_trip(nu):
    back = constants.to_hz(constants.to_angular(nu))
    assert back == pytest.approx(nu, rel=4e-16)
    assert constants.energy_to_hz(constants.hz_to_energy(nu)) == pytest.approx(nu, rel=4e-16)


# ---------------------------------------------------------------- special functions


@pytest.mark.parametrize("kind", ["J0", "Y0", "K0"])
def test_bessel_against_mpmath(kind, backend):
    got = special.cyl_bessel(kind, XS, backend=backend)
    ref = np.array([_ref(kind, x) for x in XS])
    if kind == "K0":
        err = np.abs(got - ref) / np.abs(ref)
    else:
        # near the oscillating zeros relative error is ill-posed; normalise by the modulus
        mod = np.array([float(mpmath.hypot(mpmath.besselj(0, x), mpmath.bessely(0, x))) for x in XS])
        err = np.abs(got - ref) / mod
    assert err.max() < 1e-10


def test_hankel_is_j_plus_i_y(backend):
    h = special.hankel1_0(XS, backend=backend)
    np.testing.assert_array_equal(h.real, special.j0(XS, backend=backend))
    np.testing.assert_array_equal(h.imag, special.y0(XS, backend=backend))


def test_bessel_values():
    assert special.j0(0.0) == 1.0
    assert special.k0(0.01) == pytest.approx(4.7212, abs=5e-5)
    series = -math.log(0.005) - constants.EULER_GAMMA
    assert special.k0(0.01) == pytest.approx(series, rel=3e-4)


@pytest.mark.parametrize("fn", [special.y0, special.k0, special.hankel1_0])
@pytest.mark.parametrize("x", [0.0, -1.0])
def test_singular_functions_reject_nonpositive(fn, x):
    with pytest.raises(DomainError):
        fn(x)


def test_scalar_in_scalar_out():
    assert isinstance(special.k0(1.0), float)
    assert special.k0(np.array([1.0, 2.0])).shape == (2,)


def test_backends_agree():
    x = np.geomspace(1e-5, 60.0, 2001)
    for fn in (special.j0, special.y0, special.k0):
        np.testing.assert_allclose(fn(x, backend="numba"), fn(x, backend="numpy"), rtol=1e-13, atol=1e-15)


def test_env_flag_selects_numpy(monkeypatch):
    from pcwlattice import _accel
    monkeypatch.setattr(_accel, "USE_NUMBA", False)
    assert _accel.resolve_backend() == "numpy"
    assert _accel.resolve_backend("numba") in ("numba", "numpy")
    with pytest.raises(ValueError):
        _accel.resolve_backend("fortran")


def test_wronskian():
    x = np.linspace(0.1, 30.0, 300)
    h = 1e-3 * np.maximum(x, 1.0)
    # sixth-order central difference
    def deriv(f):
        c = [(-1, 3), (9, 2), (-45, 1)]
        return sum(a * (f(x + k * h) - f(x - k * h)) for a, k in c) / (-60.0 * h)
    w = special.j0(x) * deriv(special.y0) - deriv(special.j0) * special.y0(x)
    np.testing.assert_allclose(w, 2.0 / (np.pi * x), rtol=1e-8)


@settings(max_examples=60)
@given(st.floats(min_value=1e-6, max_value=50.0), st.floats(min_value=1e-6, max_value=50.0))
def test_k0_decreasing_positive(a, b):
    lo, hi = sorted((a, b))
    if lo == hi:
        return
    assert special.k0(lo) > special.k0(hi) > 0.0


@given(st.floats(min_value=0.0, max_value=1e4))
def test_j0_bounded(x):
    assert abs(special.j0(x)) <= 1.0


def test_asymptote_regimes():
    regime, ratio = special.kernel_asymptote_check(1e-4)
    assert regime == "logarithmic" and abs(ratio - 1) < 1e-4
    regime, ratio = special.kernel_asymptote_check(20.0)
    assert regime == "exponential" and abs(ratio - 1) < 0.02
    assert special.kernel_asymptote_check(1.0) == ("crossover", None)
    with pytest.raises(DomainError):
        special.kernel_asymptote_check(0.0)


def test_unknown_kind():
    with pytest.raises(ValueError):
        special.cyl_bessel("I0", 1.0)
