import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcwlattice import potentials as pt
from pcwlattice import trapscan as ts
from pcwlattice.constants import H
from pcwlattice.errors import DomainError, NotAMinimumError

NM = 1e-9


def bowl(mass, omegas, centre=(0.0, 0.0, 0.0)):
    w = np.asarray(omegas)
    c = np.asarray(centre)
    def v(x, y, z):
        return 0.5 * mass * (w[0] ** 2 * (x - c[0]) ** 2 + w[1] ** 2 * (y - c[1]) ** 2 + w[2] ** 2 * (z - c[2]) ** 2)
    return v


def sin_lattice(depth, d):
    def v(x, y, z):
        return depth * (np.sin(np.pi * x / d) ** 2 + np.sin(np.pi * y / d) ** 2 + np.sin(np.pi * z / d) ** 2)
    return v


def band_oracle_tunnelling(s, n_pw=32):
    """Quarter of the lowest-band width of s sin^2(pi x/d), plane-wave basis, units of E_R."""
    ell = np.arange(-n_pw // 2, n_pw // 2)
    def lowest(q):
        h = np.diag((q + 2.0 * ell) ** 2 + s / 2.0)
        h += np.diag(np.full(n_pw - 1, -s / 4.0), 1) + np.diag(np.full(n_pw - 1, -s / 4.0), -1)
        return np.linalg.eigvalsh(h)[0]
    return (lowest(1.0) - lowest(0.0)) / 4.0


# ---------------------------------------------------------------- grid and minima


def test_single_point_grid_matches_scene(rb):
    scene = pt.TrapScene(rb, (pt.CPTerm(pt.CPModel("analytic_plane", n=3.25)),))
    f = ts.evaluate_grid(scene, [1e-8], [2e-8], [6e-8])
    assert f.values.shape == (1, 1, 1)
    assert f.values[0, 0, 0] == scene(1e-8, 2e-8, 6e-8)


def test_grid_values_exact_and_order_independent(rb):
    p = pt.SIBeamParams.from_wavelengths(rb, 2 * math.pi * 5e10, 760 * NM)
    scene = pt.TrapScene(rb, (pt.CPTerm(pt.CPModel("analytic_plane", n=3.25)), pt.SITerm(p, 65 * NM)))
    x = np.linspace(-1e-7, 1e-7, 16)
    z = np.linspace(3e-8, 2e-7, 16)
    f = ts.evaluate_grid(scene, x, x, z)
    rng = np.random.default_rng(3)
    for i, j, k in rng.integers(0, 16, (10, 3)):
        assert f.values[i, j, k] == scene(x[i], x[j], z[k])
    again = ts.evaluate_grid(scene, x, x, z)
    np.testing.assert_array_equal(f.values, again.values)


def test_grid_rejects_unsorted_axis(rb):
    with pytest.raises(DomainError):
        ts.evaluate_grid(lambda x, y, z: x, [0.0, 1.0], [1.0, 0.0], [0.0, 1.0])


def test_si_nodes_are_minima(rb, backend):
    p = pt.SIBeamParams.from_wavelengths(rb, 2 * math.pi * 5e10, 760 * NM)
    scene = pt.TrapScene(rb, (pt.SITerm(p, 65 * NM),))
    mass = rb.mass
    # add a weak in-plane bowl so the minima are strict in all three directions
    full = lambda x, y, z: scene(x, y, z) + bowl(mass, (1e5, 1e5, 0.0))(x, y, z)
    z = np.linspace(0.0, 900 * NM, 181)
    f = ts.evaluate_grid(full, np.linspace(-1e-8, 1e-8, 3), np.linspace(-1e-8, 1e-8, 3), z)
    found = sorted(m.position[2] for m in ts.find_minima(f, backend=backend))
    expect = [65 * NM + m * math.pi / p.k_SI for m in range(3)]
    np.testing.assert_allclose(found, expect, atol=0.5e-9)


def test_cosine_lattice_minima(backend):
    d = 100 * NM
    v = sin_lattice(1e-28, d)
    g = np.linspace(-1.5 * d, 1.5 * d, 31)
    f = ts.evaluate_grid(v, g, g, np.linspace(-0.5 * d, 0.5 * d, 11))
    found = {tuple(np.round(np.array(m.position[:2]) / d, 6)) for m in ts.find_minima(f, backend=backend)}
    assert found == {(i, j) for i in (-1.0, 0.0, 1.0) for j in (-1.0, 0.0, 1.0)}


@settings(max_examples=25, deadline=None)
@given(st.tuples(*[st.floats(-0.8, 0.8)] * 3), st.tuples(*[st.floats(0.5, 3.0)] * 3))
def test_random_bowl_recovered(centre, stiff):
    v = bowl(1.0, stiff, centre)
    g = np.linspace(-1.0, 1.0, 21)
    f = ts.evaluate_grid(v, g, g, g)
    mins = ts.find_minima(f)
    assert len(mins) == 1
    np.testing.assert_allclose(mins[0].position, centre, atol=0.05)


def test_backends_identical_masks():
    rng = np.random.default_rng(11)
    v = rng.normal(size=(17, 13, 9))
    np.testing.assert_array_equal(ts.strict_local_minima(v, "numba"), ts.strict_local_minima(v, "numpy"))
    v[:] = 0.0
    assert not ts.strict_local_minima(v).any()  # plateaus are not strict minima


def test_minima_converge_under_refinement():
    v = lambda x, y, z: np.cos(3 * x + 1.9) + (y - 0.13) ** 2 + np.cosh(z - 0.21)
    positions = []
    for n in (11, 21, 41, 81):
        g = np.linspace(-1.0, 1.0, n)
        positions.append(np.array(ts.find_minima(ts.evaluate_grid(v, g, g, g))[0].position))
    steps = [np.abs(b - a).max() for a, b in zip(positions, positions[1:])]
    assert steps[-1] < steps[0]
    exact = np.array([(math.pi - 1.9) / 3, 0.13, 0.21])
    np.testing.assert_allclose(positions[-1], exact, atol=1e-3)


# ---------------------------------------------------------------- characterisation


def test_harmonic_frequencies_exact(rb):
    w = 2 * math.pi * 1e5
    site = ts.characterize(bowl(rb.mass, (w, w, w)), (0.0, 0.0, 0.0), mass=rb.mass, spacing=5e-9)
    np.testing.assert_allclose(site.frequencies, [w] * 3, rtol=1e-6)


def test_anisotropic_frequencies_and_axes(rb):
    w = 2 * math.pi * np.array([1e5, 2e5, 3e5])
    site = ts.characterize(bowl(rb.mass, w, (1e-8, 0, 0)), (1e-8, 0.0, 0.0), mass=rb.mass, spacing=5e-9)
    np.testing.assert_allclose(site.frequencies, w, rtol=1e-6)
    assert np.all(np.linalg.eigvalsh(site.hessian) > 0)


def test_saddle_rejected(rb):
    v = lambda x, y, z: x**2 - y**2 + z**2
    with pytest.raises(NotAMinimumError):
        ts.characterize(v, (0.0, 0.0, 0.0), mass=1.0, spacing=0.1)


@pytest.mark.parametrize("s", [5.0, 15.0, 50.0])
def test_sinusoidal_frequency_and_depth(rb, s):
    d = 50 * NM
    depth = s * ts.recoil_energy(rb, d)
    site = ts.characterize(sin_lattice(depth, d), (0.0, 0.0, 0.0), mass=rb.mass, spacing=d / 20, scan_range=d)
    nu = np.array(site.frequencies) / (2 * math.pi)
    np.testing.assert_allclose(nu, ts.sinusoidal_trap_frequency(s, rb, d), rtol=1e-5)
    np.testing.assert_allclose(site.depth_per_axis, depth, rtol=1e-6)
    row = site.report_row(rb, d)
    assert row["s"] == pytest.approx(s, rel=1e-6)
    assert set(row) >= {"x_nm", "Vd_z_over_h_Hz", "nu_x_Hz"}


def test_depth_stops_at_undefined_region(rb):
    p = pt.SIBeamParams.from_wavelengths(rb, 2 * math.pi * 1e11, 760 * NM)
    scene = pt.TrapScene(rb, (pt.CPTerm(pt.CPModel("analytic_plane", n=3.25)), pt.SITerm(p, 65 * NM)))
    full = lambda x, y, z: scene(x, y, z) + bowl(rb.mass, (1e6, 1e6, 0.0))(x, y, z)
    z = np.linspace(30 * NM, 150 * NM, 241)
    f = ts.evaluate_grid(full, [-1e-9, 0.0, 1e-9], [-1e-9, 0.0, 1e-9], z)
    m = ts.find_minima(f)[0]
    site = ts.characterize(full, m.position, mass=rb.mass, spacing=0.5e-9)
    assert site.depth_per_axis[2] > 0 and np.isfinite(site.depth_per_axis[2])


# ---------------------------------------------------------------- Hubbard scales


def test_recoil_energies(rb):
    assert ts.recoil_energy(rb, 50 * NM) / H == pytest.approx(230e3, rel=0.01)
    assert ts.recoil_energy(rb, 385 * NM) / H == pytest.approx(3.9e3, rel=0.01)
    with pytest.raises(DomainError):
        ts.recoil_energy(rb, 0.0)


def test_depth_in_recoils(rb):
    assert ts.depth_in_recoils(3.5e6 * H, rb, 50 * NM) == pytest.approx(15.2, abs=0.1)
    assert ts.depth_in_recoils(0.0, rb, 50 * NM) == 0.0


def test_trap_frequency_working_point(rb):
    assert ts.sinusoidal_trap_frequency(15, rb, 50 * NM) == pytest.approx(1.7e6, rel=0.1)


def test_tunnelling_formula_and_ratio(rb):
    e_r = ts.recoil_energy(rb, 50 * NM)
    expect = 4 / math.sqrt(math.pi) * e_r * 15**0.75 * math.exp(-2 * math.sqrt(15))
    assert ts.tunneling_estimate(15, rb, 50 * NM) == pytest.approx(expect, rel=1e-14)
    ratio = ts.tunneling_estimate(15, rb, 50 * NM) / ts.tunneling_estimate(15, rb, 385 * NM)
    assert ratio == pytest.approx(59.3, rel=0.01)
    curve = ts.tunneling_curve(rb, [50 * NM, 385 * NM])
    assert curve[0] / curve[1] == pytest.approx(ratio)


def test_tunnelling_warns_when_shallow(rb):
    with pytest.warns(ts.OutOfValidityWarning):
        ts.tunneling_estimate(0.5, rb, 50 * NM)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ts.tunneling_estimate(2.0, rb, 50 * NM)


@pytest.mark.parametrize("s", [8.0, 12.0, 20.0, 30.0])
def test_tunnelling_against_band_oracle(rb, s):
    approx = ts.tunneling_estimate(s, rb, 100 * NM) / ts.recoil_energy(rb, 100 * NM)
    assert approx == pytest.approx(band_oracle_tunnelling(s), rel=0.25)


def test_hubbard_scales_bundle(rb):
    hs = ts.hubbard_scales(rb, 50 * NM, 3.5e6 * H)
    assert hs.s == pytest.approx(15.2, abs=0.1)
    assert hs.nu_t == pytest.approx(ts.sinusoidal_trap_frequency(hs.s, rb, 50 * NM))
