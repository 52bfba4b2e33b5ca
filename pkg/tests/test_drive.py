import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridcavity import (DriveSpec, ParameterError, TimeGrid, calibrate_amplitude,
                          evaluate_drive, propagate)
from scenarios import OMEGA_R, T_SPIN, WC, environment, qgaussian


class TestEnvelopes:
    def test_rectangular(self):
        d = DriveSpec("rectangular", 3.0, t_on=0.2, t_off=0.5)
        t = np.array([0.0, 0.19999, 0.2, 0.3, 0.49999, 0.5, 0.9])
        np.testing.assert_array_equal(evaluate_drive(d, t), [0, 0, 3, 3, 3, 0, 0])

    def test_phase_flip(self):
        d = DriveSpec("phase_flip", 2.0, t_on=0.1, t_off=0.8, t_flip=0.4)
        np.testing.assert_array_equal(evaluate_drive(d, [0.05, 0.2, 0.4, 0.7, 0.8]),
                                      [0, 2, -2, -2, 0])

    def test_sinusoidal(self):
        d = DriveSpec("sinusoidal", 1.5, t_on=0.1, t_off=1.0, modulation=OMEGA_R)
        t = np.linspace(0.1, 0.99, 200)
        np.testing.assert_allclose(evaluate_drive(d, t), 1.5 * np.sin(OMEGA_R * (t - 0.1)),
                                   atol=1e-14)
        assert abs(evaluate_drive(d, 0.1 + np.pi / OMEGA_R)) < 1e-14

    def test_detuned_carrier(self):
        d = DriveSpec("rectangular", 1.0, carrier=WC + 5.0)
        t = np.linspace(0, 1, 11)
        np.testing.assert_allclose(evaluate_drive(d, t, WC), np.exp(-5j * t), atol=1e-12)
        with pytest.raises(ParameterError):
            evaluate_drive(d, t)

    def test_none(self):
        assert DriveSpec().pieces() == []
        assert evaluate_drive(DriveSpec(), 0.3) == 0

    @given(st.floats(0, 5), st.floats(-3, 3), st.floats(0, 1))
    def test_pieces_reconstruct_sinusoid(self, wm, ph, t):
        d = DriveSpec("sinusoidal", 1.0, t_on=0.0, t_off=2.0, modulation=wm, phase=ph)
        assert evaluate_drive(d, t) == pytest.approx(np.sin(wm * t + ph), abs=1e-12)


@pytest.mark.parametrize("kwargs", [
    dict(kind="square"),
    dict(kind="rectangular", amplitude=-1.0),
    dict(kind="rectangular", t_on=0.5, t_off=0.2),
    dict(kind="rectangular", t_on=-0.1),
    dict(kind="phase_flip", t_off=1.0),
    dict(kind="phase_flip", t_off=1.0, t_flip=1.5),
])
def test_validation(kwargs):
    with pytest.raises(ParameterError):
        DriveSpec(**kwargs)


@pytest.fixture(scope="module")
def pair():
    env = environment(spin_t=T_SPIN, env_t=T_SPIN)
    g = TimeGrid(1e-3, 600)
    d = DriveSpec("phase_flip", 1.0, t_on=0.05, t_off=0.4, t_flip=0.2)
    return g, d, propagate(qgaussian(), env, d, g), propagate(qgaussian(), env, d.scaled(7.5), g)


class TestResponse:
    def test_linear_in_amplitude(self, pair):
        _, _, p1, p2 = pair
        np.testing.assert_allclose(p2.y, 7.5 * p1.y, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(p2.u, p1.u, rtol=0, atol=0)

    def test_noise_independent_of_drive(self, pair):
        _, _, p1, p2 = pair
        np.testing.assert_array_equal(p1.v.mesh, p2.v.mesh)

    def test_calibration(self, pair):
        _, _, p1, _ = pair
        eta = calibrate_amplitude(p1.y, 1e6)
        assert np.max(np.abs(eta * p1.y)) ** 2 == pytest.approx(1e6, rel=1e-12)
        eta = calibrate_amplitude(p1.y, 4.0, at=100)
        assert abs(eta * p1.y[100]) ** 2 == pytest.approx(4.0, rel=1e-12)

    def test_calibration_needs_a_field(self):
        with pytest.raises(ParameterError):
            calibrate_amplitude(np.zeros(5), 1.0)
