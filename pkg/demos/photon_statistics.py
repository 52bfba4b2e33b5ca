"""Two-time coherence of the cavity field.

Because the model is linear, the cavity field stays Gaussian for a Gaussian
initial state. First- and second-order coherence then follow from the mean
field and the two-time noise correlation. This script compares three
starting points:

* a weakly driven vacuum at 25 mK, where thermal spins seed a tiny noise floor,
* an undriven thermal cavity, which is bunched with g2(t, t) = 2,
* a coherent cavity at zero temperature, which stays Poissonian with g2 = 1.

Run with ``python demos/photon_statistics.py``.
"""
import numpy as np

import hybridcavity as hc

TWO_PI = 2 * np.pi
wc = TWO_PI * 2690.0
model = hc.QGaussian(center=wc, coupling=TWO_PI * 8.6, fwhm=18.8 * np.pi, q=1.39)
warm = hc.EnvironmentSpec(kappa=TWO_PI * 0.4, cavity_frequency=wc,
                          spin_temperature=0.025, env_temperature=0.025)
cold = hc.EnvironmentSpec(kappa=TWO_PI * 0.4, cavity_frequency=wc)
grid = hc.TimeGrid.from_horizon(dt=5e-4, horizon=1.0)
t = np.arange(0.1, 0.5, 0.1)
tau = np.array([0.0, 0.05, 0.1, 0.2, 0.4])


def show(title, matrix):
    print(title)
    print("   t \\ tau " + "".join(f"{x * 1e3:9.0f}ns" for x in tau))
    for ti, row in zip(t, np.ma.filled(matrix, np.nan)):
        print(f"  {ti * 1e3:6.0f}ns " + "".join(f"{v:11.4f}" for v in row))


# Weak drive: the noise floor is comparable to the coherent field, so
# g2 departs from one.
drive = hc.DriveSpec("rectangular", amplitude=0.02, t_off=0.3)
props = hc.propagate(model, warm, drive, grid)
grid_vac = hc.correlation_grid(props, hc.InitialCavityState.vacuum(), t, tau)
show("weakly driven vacuum, |g1|", np.abs(grid_vac.g1))
show("weakly driven vacuum, g2", grid_vac.g2)

dark = hc.propagate(model, cold, hc.DriveSpec(), grid)
g2 = hc.second_order_correlation(dark, hc.InitialCavityState.thermal(2.0), t, tau)
show("thermal start (2 photons), g2", g2)

g2 = hc.second_order_correlation(dark, hc.InitialCavityState.coherent(1.5), t, tau)
show("coherent start, g2", g2)
