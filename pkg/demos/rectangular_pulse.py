"""A spin ensemble inside a microwave cavity, driven by a rectangular pulse.

The ensemble is a q-Gaussian line of NV-like spins (8.6 MHz collective
coupling, 9.4 MHz FWHM, q = 1.39) resonant with a 2.69 GHz cavity. We drive
the cavity for 1 us, switch the drive off, and watch the stored photons leak
out. Along the way we look at three things:

* the oscillations of the intensity while the drive is on,
* the faster ring-down after switch-off,
* how small the thermal noise is next to the coherent field.

Run with ``python demos/rectangular_pulse.py``.
"""
import numpy as np
from scipy.signal import find_peaks

import hybridcavity as hc

TWO_PI = 2 * np.pi
wc = TWO_PI * 2690.0                      # rad/us
model = hc.QGaussian(center=wc, coupling=TWO_PI * 8.6, fwhm=18.8 * np.pi, q=1.39)
env = hc.EnvironmentSpec(kappa=TWO_PI * 0.4, cavity_frequency=wc,
                         spin_temperature=0.025, env_temperature=0.025)
grid = hc.TimeGrid.from_horizon(dt=5e-4, horizon=2.0)

# Everything is linear in the drive, so solve once at unit amplitude and
# rescale to a peak of one million photons.
pulse = hc.DriveSpec("rectangular", amplitude=1.0, t_on=0.0, t_off=1.0)
unit = hc.propagate(model, env, pulse, grid, noise=False)
pulse = pulse.scaled(hc.calibrate_amplitude(unit.y, target_photons=1e6))
print(f"drive amplitude for 1e6 photons: {pulse.amplitude:.4g} rad/us")

props = hc.propagate(model, env, pulse, grid)
n = hc.intensity(props, hc.InitialCavityState.vacuum())
t = grid.times

# The two polaritons sit at about +-61.5 rad/us from the cavity. While the
# pulse is on, the steady field beats against each of them. After switch-off
# only the polaritons remain, and they beat against each other at twice that
# rate, so the period halves.
s = hc.sample_spectrum(model, env, span=200.0, points=4001)
right = s.omega > wc
polariton = s.omega[right][np.argmax(np.abs(s.response[right]))] - wc
for label, lo, hi in (("pulse on ", 0.0, 0.5), ("pulse off", 1.0, 1.5)):
    span = (t >= lo) & (t <= hi)
    peaks, _ = find_peaks(n.total[span])
    period = np.mean(np.diff(t[span][peaks])) * 1e3
    print(f"{label}: intensity period {period:.1f} ns")
print(f"2 pi / polariton detuning = {2e3 * np.pi / polariton:.1f} ns, "
      f"2 pi / splitting = {1e3 * np.pi / polariton:.1f} ns")

# Photon number around switch-off.
for ti in (0.9, 1.0, 1.02, 1.05, 1.2, 1.5):
    k = grid.index_of(ti)
    print(f"  t = {ti:4.2f} us   n = {n.total[k]:11.1f}")

# Thermal and quantum noise stay many orders of magnitude below |y|^2.
ratio = props.v.diag.max() / n.semiclassical.max()
print(f"max noise photons {props.v.diag.max():.2e}, ratio to the coherent peak {ratio:.1e}")

# The exact master equation has time-dependent coefficients. Negative gamma(t)
# means photons flow back from the spins into the cavity.
coeffs = hc.coefficients(props, cavity_frequency=wc)
report = hc.classify_regime(coeffs)
print(f"gamma(t) changes sign {report.sign_changes} times "
      f"({report.early_sign_changes} in the first 0.5 us): "
      f"{'Markovian' if report.markovian else 'non-Markovian'}")
