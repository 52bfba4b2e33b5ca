import numpy as np
import pytest
from scipy import integrate, linalg

from hybridcavity import (DriveSpec, HorizonError, Lorentzian, ParameterError, SamplingError,
                          TimeGrid, propagate, solve_u, solve_v, solve_y)
from hybridcavity.propagator_time import HermiteSeries
from scenarios import COUPLING, KAPPA, T_SPIN, WC, environment, hole_burned, no_spins, qgaussian


def lorentzian_oracle(coupling, lam, kappa, t):
    """u for ``u'' + (kappa + lam) u' + (coupling^2 + lam kappa) u = 0``."""
    a = np.array([[0.0, 1.0], [-(coupling ** 2 + lam * kappa), -(kappa + lam)]])
    x0 = np.array([1.0, -kappa])
    return np.array([(linalg.expm(a * s) @ x0) for s in t])


class TestTimeGrid:
    def test_validation(self):
        with pytest.raises(ParameterError):
            TimeGrid(0.0, 10)
        with pytest.raises(ParameterError):
            TimeGrid(1e-3, 1)
        with pytest.raises(ParameterError):
            TimeGrid(1e-3, 10, v_stride=0)
        with pytest.raises(ParameterError):
            TimeGrid.from_horizon(3e-4, 1.0)

    def test_index_lookup(self):
        g = TimeGrid.from_horizon(5e-4, 2.0)
        assert g.steps == 4000
        assert list(g.index_of([0.0, 0.5, 2.0])) == [0, 1000, 4000]
        with pytest.raises(ParameterError):
            g.index_of(0.00025)
        with pytest.raises(HorizonError):
            g.index_of(2.5)


class TestSolveU:
    def test_free_cavity(self):
        g = TimeGrid.from_horizon(5e-4, 2.0)
        u, udot = solve_u(no_spins(), environment(), g)
        exact = np.exp(-KAPPA * g.times)
        assert np.max(np.abs(u / exact - 1)) < 1e-8
        np.testing.assert_allclose(udot, -KAPPA * exact, rtol=1e-8)

    @pytest.mark.parametrize("kappa", [0.0, KAPPA])
    def test_lorentzian_closed_form(self, kappa):
        lam = 12.0
        g = TimeGrid.from_horizon(5e-4, 1.0)
        u, udot = solve_u(Lorentzian(WC, COUPLING, lam), environment(kappa=kappa), g)
        ref = lorentzian_oracle(COUPLING, lam, kappa, g.times)
        assert np.max(np.abs(u - ref[:, 0])) < 1e-6
        assert np.max(np.abs(udot - ref[:, 1])) < 1e-6 * COUPLING

    def test_boundary_values_and_contractivity(self, paper_props):
        _, env, _, p = paper_props
        assert p.u[0] == 1.0 and p.udot[0] == -env.kappa
        assert np.max(np.abs(p.u)) <= 1 + 1e-6

    def test_derivative_consistent_with_series(self, paper_props):
        *_, p = paper_props
        h = p.grid.dt
        fd = (p.u[2:] - p.u[:-2]) / (2 * h)
        assert np.max(np.abs(fd - p.udot[1:-1])) < 5e-3 * np.max(np.abs(p.udot))

    def test_grid_refinement(self):
        m, env = qgaussian(), environment()
        u1, _ = solve_u(m, env, TimeGrid.from_horizon(1e-3, 1.0))
        u2, _ = solve_u(m, env, TimeGrid.from_horizon(5e-4, 1.0))
        assert np.max(np.abs(u1 - u2[::2])) < (1e-3) ** 2

    def test_stationarity(self):
        m, env = hole_burned(), environment()
        u1, _ = solve_u(m, env, TimeGrid(5e-4, 1000))
        u2, _ = solve_u(m, env, TimeGrid(5e-4, 2000))
        assert np.max(np.abs(u1 - u2[:1001])) < 1e-12

    def test_rejects_huge_damping(self):
        with pytest.raises(ParameterError):
            solve_u(no_spins(), environment(kappa=1e3), TimeGrid.from_horizon(1e-3, 1.0))


class TestHermite:
    def test_reproduces_cubic(self):
        h = 0.1
        t = h * np.arange(11)
        f = lambda s: 1 + 2 * s - s ** 2 + 0.5 * s ** 3
        df = lambda s: 2 - 2 * s + 1.5 * s ** 2
        herm = HermiteSeries(h, f(t).astype(complex), df(t).astype(complex))
        s = np.linspace(0, 1, 37)
        np.testing.assert_allclose(herm(s), f(s), atol=1e-12)
        psi, _ = herm.cumulative_transform(0.0)
        np.testing.assert_allclose(psi, [integrate.quad(f, 0, x)[0] for x in t], atol=1e-12)

    def test_out_of_range(self):
        herm = HermiteSeries(0.1, np.ones(5, complex), np.zeros(5, complex))
        with pytest.raises(HorizonError):
            herm(0.5)


@pytest.fixture(scope="module")
def paper_u():
    g = TimeGrid.from_horizon(5e-4, 1.0)
    u, udot = solve_u(qgaussian(), environment(), g)
    return g, u, udot


class TestSolveY:
    def test_zero_drive(self, paper_u):
        g, u, udot = paper_u
        assert np.all(solve_y(u, udot, DriveSpec(), g) == 0)

    def test_initial_value_and_linearity(self, paper_u):
        g, u, udot = paper_u
        d = DriveSpec("phase_flip", 2.0, t_on=0.1, t_off=0.7, t_flip=0.35)
        y = solve_y(u, udot, d, g, WC)
        assert y[0] == 0
        y3 = solve_y(u, udot, d.scaled(3.0), g, WC)
        np.testing.assert_allclose(y3, 3 * y, rtol=1e-13, atol=1e-15)

    def test_impulse_response(self, paper_u):
        g, u, udot = paper_u
        area, k = 0.7, 200
        tp, h = g.times[k], g.dt
        d = DriveSpec("rectangular", area / h, t_on=tp, t_off=tp + h)
        y = solve_y(u, udot, d, g, WC)
        # a pulse one step wide acts at its midpoint
        ref = -1j * area * 0.5 * (u[1:-k] + u[:-k - 1])
        err = np.max(np.abs(y[k + 1:] - ref))
        assert err < 5 * area * h ** 2 * np.max(np.abs(np.gradient(udot, h)))

    def test_turn_off_residual_is_tail_integral(self, paper_u):
        g, u, udot = paper_u
        d = DriveSpec("rectangular", 1.0, t_off=0.5)
        y = solve_y(u, udot, d, g, WC)
        k = g.index_of(0.5)
        n = g.steps - k
        psi, _ = HermiteSeries(g.dt, u, udot).cumulative_transform(0.0)
        lhs = y[k:] - (y[k] - y[: n + 1])
        rhs = -1j * (psi[k:] - psi[k])
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_detuned_drive_against_quadrature(self, paper_u):
        g, u, udot = paper_u
        nu = 40.0
        d = DriveSpec("sinusoidal", 1.5, carrier=WC + nu, t_on=0.05, t_off=0.6,
                      modulation=90.0, phase=0.3)
        y = solve_y(u, udot, d, g, WC)
        herm = HermiteSeries(g.dt, u, udot)
        for t in (0.3, 0.6, 0.9):
            def f(s, part):
                if not 0.05 <= s < 0.6:
                    return 0.0
                val = herm(t - s) * 1.5 * np.sin(90.0 * (s - 0.05) + 0.3) * np.exp(-1j * nu * s)
                return part(-1j * val)
            hi = min(t, 0.6)
            ref = sum(c * integrate.quad(f, 0.05, hi, args=(p,), limit=400, epsabs=1e-12)[0]
                      for c, p in ((1, np.real), (1j, np.imag)))
            assert y[g.index_of(t)] == pytest.approx(ref, abs=1e-8)

    def test_derivative(self, paper_u):
        g, u, udot = paper_u
        d = DriveSpec("rectangular", 1.0, t_on=0.2, t_off=0.6)
        y, ydot = solve_y(u, udot, d, g, WC, with_derivative=True)
        fd = (y[2:] - y[:-2]) / (2 * g.dt)
        t = g.times[1:-1]
        away = (np.abs(t - 0.2) > 3 * g.dt) & (np.abs(t - 0.6) > 3 * g.dt)
        assert np.max(np.abs(fd - ydot[1:-1])[away]) < 1e-3 * np.max(np.abs(ydot))
        # the jump at switch-on is the drive itself
        k = g.index_of(0.2)
        assert ydot[k] == pytest.approx(-1j * 1.0, abs=1e-12)

    def test_nyquist_limit(self, paper_u):
        g, u, udot = paper_u
        d = DriveSpec("rectangular", 1.0, carrier=WC + 1.01 * np.pi / g.dt)
        with pytest.raises(SamplingError):
            solve_y(u, udot, d, g, WC)


class TestSolveV:
    def test_zero_temperature(self):
        g = TimeGrid(1e-3, 400)
        p = propagate(qgaussian(), environment(), DriveSpec(), g)
        assert np.all(p.v.mesh == 0) and np.all(p.v.diag == 0)

    def test_structure(self, paper_props):
        *_, p = paper_props
        v = p.v
        np.testing.assert_allclose(v.mesh, v.mesh.conj().T, atol=1e-15)
        assert np.all(v.diag >= -1e-10)
        assert np.all(v.mesh[0] == 0) and np.all(v.mesh[:, 0] == 0) and v.diag[0] == 0
        np.testing.assert_allclose(np.real(np.diag(v.mesh)), v.diag[v.mesh_index], atol=1e-12)

    def test_diagonal_rate(self, paper_props):
        *_, p = paper_props
        fd = (p.v.diag[2:] - p.v.diag[:-2]) / (2 * p.grid.dt)
        assert np.max(np.abs(fd - p.v.diag_rate[1:-1])) < 1e-3 * np.max(np.abs(p.v.diag_rate))

    def test_spectral_matches_time_domain(self, short_props):
        # the direct double sum is second order, so the gap must shrink four-fold
        m, env, _, p = short_props
        ref = solve_v(p.u, p.udot, m, env, p.grid, method="time")
        coarse = np.max(np.abs(ref.mesh - p.v.mesh))
        assert coarse < 2e-3 * np.max(p.v.diag)
        g = TimeGrid(p.grid.dt / 2, 2 * p.grid.steps, v_stride=1)
        u, udot = solve_u(m, env, g)
        fine = [solve_v(u, udot, m, env, g, method=k).mesh for k in ("spectral", "time")]
        ratio = coarse / np.max(np.abs(fine[0] - fine[1]))
        assert 3.5 < ratio < 4.5
        np.testing.assert_allclose(fine[0][::2, ::2], p.v.mesh, atol=1e-8)

    def test_off_mesh_evaluation(self, paper_props):
        *_, p = paper_props
        rows, cols = np.array([4, 17, 1001]), np.array([0, 8, 999, 3000])
        block = p.v.at(rows, cols)
        np.testing.assert_allclose(block.conj().T, p.v.at(cols, rows), atol=1e-15)
        np.testing.assert_allclose(p.v.at([8], [8])[0, 0].real, p.v.diag[8], atol=1e-12)

    def test_white_noise_only(self):
        # no spins: v(t, t) = n_e (1 - e^{-2 kappa t})
        env = environment(spin_t=0.0, env_t=0.5)
        g = TimeGrid.from_horizon(1e-3, 1.0)
        p = propagate(no_spins(), env, DriveSpec(), g)
        ref = env.env_occupation * (1 - np.exp(-2 * KAPPA * g.times))
        np.testing.assert_allclose(p.v.diag, ref, atol=1e-10)

    def test_independent_of_drive(self):
        env = environment(spin_t=T_SPIN, env_t=T_SPIN)
        g = TimeGrid(1e-3, 300)
        p0 = propagate(qgaussian(), env, DriveSpec(), g)
        p1 = propagate(qgaussian(), env, DriveSpec("rectangular", 10.0, t_off=0.1), g)
        assert np.array_equal(p0.v.diag, p1.v.diag)

    def test_noise_switch(self):
        env = environment(spin_t=T_SPIN, env_t=T_SPIN)
        p = propagate(qgaussian(), env, DriveSpec(), TimeGrid(1e-3, 200), noise=False)
        assert np.all(p.v.diag == 0)
