import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from hybridcavity import (Gaussian, Lorentzian, ParameterError, SingularityError, TimeGrid,
                          find_localized_modes, response_function, sample_spectrum, self_energy,
                          solve_u, u_from_spectrum)
from hybridcavity.propagator_freq import frequency_shift, spectral_weight
from hybridcavity.spectral import HoleEdgeWarning
from scenarios import (COUPLING, FWHM, KAPPA, OMEGA_R, WC, environment, hole_burned, no_spins,
                       qgaussian)

# frozen after first computation
MODE_FREQUENCIES = (16833.375508424633, 16970.161444201538)
MODE_RESIDUE = 0.1426813651906919
CENTRE_HOLE_RESIDUE = 0.022675858665629274
QUARTER_HOLE_RESIDUE = 0.010475065801260513
RESPONSE_PEAK = 61.523035249


def cauchy_shift(model, x, reach=20000.0):
    """``Delta(x)`` by QUADPACK's Cauchy-weight rule."""
    f = lambda y: model.profile_density(y) / (2 * np.pi)
    inner, _ = integrate.quad(f, x - 500, x + 500, weight="cauchy", wvar=x, limit=400)
    lo, _ = integrate.quad(lambda y: f(y) / (y - x), -reach, x - 500, limit=400)
    hi, _ = integrate.quad(lambda y: f(y) / (y - x), x + 500, reach, limit=400)
    return -(inner + lo + hi)


class TestSelfEnergy:
    def test_lorentzian_closed_form(self):
        lam = 17.0
        m = Lorentzian(WC, COUPLING, lam)
        x = np.linspace(-300, 300, 121)
        shift, half = self_energy(m, WC + x)
        np.testing.assert_allclose(shift, COUPLING ** 2 * x / (x ** 2 + lam ** 2), atol=1e-9)
        np.testing.assert_allclose(half, COUPLING ** 2 * lam / (x ** 2 + lam ** 2), rtol=1e-12)

    @pytest.mark.parametrize("model", [qgaussian(), Gaussian(WC, COUPLING, FWHM)],
                             ids=["qgaussian", "gaussian"])
    def test_against_cauchy_quadrature(self, model):
        for x in (-150.0, -31.0, 4.0, 58.0, 300.0):
            assert frequency_shift(model, x)[0] == pytest.approx(cauchy_shift(model, x),
                                                                 abs=1e-7 * COUPLING)

    def test_symmetric_line_centre(self):
        assert abs(frequency_shift(qgaussian(), 0.0)[0]) < 1e-12 * COUPLING
        assert abs(frequency_shift(hole_burned(), 0.0)[0]) < 1e-9 * OMEGA_R

    @given(st.floats(0.5, 2000.0))
    @settings(max_examples=50, deadline=None)
    def test_odd_for_symmetric_lines(self, x):
        for m in (qgaussian(), hole_burned()):
            d = frequency_shift(m, np.array([-x, x]))
            if np.all(np.isfinite(d)):
                assert d[0] == pytest.approx(-d[1], abs=1e-9 * m.scale)

    def test_far_field(self):
        # Delta -> Omega^2 / x far from the line
        m = qgaussian()
        x = 1e5
        assert frequency_shift(m, x)[0] == pytest.approx(m.weight() / x, rel=1e-3)

    def test_hole_edge_diverges_with_warning(self):
        m = hole_burned()
        edge = m.holes[1].edges[0]
        with pytest.warns(HoleEdgeWarning):
            d = frequency_shift(m, edge)
        assert np.isinf(d[0])

    def test_grid_path_matches_pointwise(self):
        m = hole_burned()
        s = sample_spectrum(m, environment(), span=400.0, points=801)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            shift, _ = self_energy(m, s.omega)
        ok = np.isfinite(shift)
        np.testing.assert_allclose(s.shift[ok], shift[ok], atol=1e-9 * OMEGA_R)


class TestResponse:
    def test_bare_cavity(self):
        env = environment()
        w = WC + np.linspace(-50, 50, 11)
        np.testing.assert_allclose(response_function(no_spins(), env, w),
                                   1j / (w - WC + 1j * KAPPA), rtol=1e-14)

    def test_polariton_peaks(self):
        m, env = qgaussian(), environment()
        s = sample_spectrum(m, env, span=200.0, points=4001)
        d = s.omega - WC
        mag = np.abs(s.response)

        def refine(mask):
            x0 = d[mask][np.argmax(mag[mask])]
            res = optimize.minimize_scalar(
                lambda x: -abs(response_function(m, env, WC + x)[0]),
                bounds=(x0 - 0.5, x0 + 0.5), method="bounded", options={"xatol": 1e-6})
            return res.x

        lo, hi = refine(d < 0), refine(d > 0)
        assert lo == pytest.approx(-RESPONSE_PEAK, abs=1e-5)
        assert hi == pytest.approx(RESPONSE_PEAK, abs=1e-5)
        # near the vacuum Rabi splitting 2 Omega
        assert (hi - lo) == pytest.approx(2 * COUPLING, rel=0.15)

    def test_exact_pole_raises(self):
        with pytest.raises(SingularityError):
            response_function(no_spins(), environment(kappa=0.0), np.array([WC]))

    def test_passive(self):
        # Re U >= 0 is the positivity of the spectral density
        s = sample_spectrum(hole_burned(), environment(), span=300.0, points=3001)
        assert np.all(s.response.real >= -1e-12)


class TestLocalizedModes:
    def test_plain_line_has_none(self):
        assert find_localized_modes(qgaussian(), environment()) == []

    def test_two_holes_two_modes(self):
        m, env = hole_burned(), environment(kappa=0.0)
        modes = find_localized_modes(m, env)
        assert len(modes) == 2
        for mode, ref, hole in zip(modes, MODE_FREQUENCIES, sorted(m.holes, key=lambda h: h.offset)):
            assert mode.frequency == pytest.approx(ref, rel=1e-10)
            a, b = hole.edges
            assert a < mode.frequency - WC < b
            assert mode.residue == pytest.approx(MODE_RESIDUE, rel=1e-6)
            assert 0 < mode.residue < 1 and mode.slope < 0 and not mode.at_edge
            x = mode.frequency - WC
            assert abs(x - frequency_shift(m, x)[0]) < 1e-9 * OMEGA_R
            _, half = self_energy(m, mode.frequency)
            assert half[0] == 0.0

    def test_centre_hole_small_residue(self):
        modes = find_localized_modes(hole_burned(offsets=(0.0,)), environment())
        assert len(modes) == 1
        assert modes[0].frequency == pytest.approx(WC, abs=1e-9 * OMEGA_R)
        assert modes[0].residue == pytest.approx(CENTRE_HOLE_RESIDUE, rel=1e-6)

    def test_quarter_holes(self):
        modes = find_localized_modes(hole_burned(offsets=(-OMEGA_R / 4, OMEGA_R / 4)),
                                     environment())
        assert len(modes) == 2
        assert modes[0].residue == pytest.approx(QUARTER_HOLE_RESIDUE, rel=1e-6)
        assert modes[0].residue < MODE_RESIDUE

    def test_narrow_holes_pin_the_modes(self):
        w = 0.005 * OMEGA_R
        modes = find_localized_modes(hole_burned(half_width=w), environment())
        for mode, sign in zip(modes, (-1, 1)):
            assert abs(mode.frequency - WC - sign * OMEGA_R / 2) < 0.01 * OMEGA_R / 2

    def test_notch_off_condition_has_none(self):
        assert find_localized_modes(hole_burned(profile="notch"), environment()) == []

    def test_sum_rule(self):
        env = environment(kappa=0.0)
        for m in (qgaussian(), hole_burned(), hole_burned(offsets=(0.0,))):
            assert spectral_weight(m, env) == pytest.approx(1.0, abs=1e-3)


class TestInversion:
    def test_free_cavity(self):
        g = TimeGrid.from_horizon(1e-3, 1.0)
        u = u_from_spectrum(no_spins(), environment(), g)
        np.testing.assert_allclose(u, np.exp(-KAPPA * g.times), atol=1e-10)

    @pytest.mark.parametrize("model", [qgaussian(), hole_burned()], ids=["qgaussian", "holes"])
    def test_matches_time_domain(self, model):
        env = environment()
        g = TimeGrid.from_horizon(5e-4, 2.0)
        ut, _ = solve_u(model, env, g)
        assert np.max(np.abs(u_from_spectrum(model, env, g) - ut)) < 1e-6

    def test_branch_cut_agrees_with_fourier(self):
        m, env = qgaussian(), environment()
        g = TimeGrid.from_horizon(1e-3, 1.0)
        a = u_from_spectrum(m, env, g, method="fourier")
        b = u_from_spectrum(m, env, g, method="branch_cut")
        assert np.max(np.abs(a - b)) < 1e-6

    def test_lossless_holes_keep_a_beat(self):
        m, env = hole_burned(), environment(kappa=0.0)
        g = TimeGrid.from_horizon(5e-4, 3.0)
        u = u_from_spectrum(m, env, g)
        ut, _ = solve_u(m, env, g)
        assert np.max(np.abs(u - ut)) < 1e-6
        modes = find_localized_modes(m, env)
        bound = sum(md.residue * np.exp(-1j * (md.frequency - WC) * g.times) for md in modes)
        late = g.times >= 2.0
        assert np.max(np.abs(u - bound)[late]) < 0.02
        # projection on each mode recovers its residue
        for md in modes:
            proj = np.mean(u[late] * np.exp(1j * (md.frequency - WC) * g.times[late]))
            assert abs(proj) == pytest.approx(md.residue, abs=0.01)

    def test_fourier_needs_loss(self):
        with pytest.raises(ParameterError):
            u_from_spectrum(qgaussian(), environment(kappa=0.0), TimeGrid(1e-3, 10),
                            method="fourier")
        with pytest.raises(ParameterError):
            u_from_spectrum(qgaussian(), environment(), TimeGrid(1e-3, 10), method="laplace")
