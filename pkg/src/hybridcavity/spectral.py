"""Spin-ensemble spectral densities, thermal occupations and memory kernels.

Frequencies are angular (rad/us), times are in us. Spectral shapes are written
in terms of the detuning ``x = omega - center`` from the spin transition.
Kernels are returned in the frame rotating at the cavity frequency, with the
spectral variable ``delta = omega - omega_c``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy import constants, integrate, special

from .errors import ParameterError, TruncationError

#: hbar / k_B in kelvin * seconds
HBAR_OVER_KB = constants.hbar / constants.k

#: minimum captured fraction of spectral weight on any frequency window
WEIGHT_TOLERANCE = 1e-6

#: frequency windows extend this many coupling scales either side of the line
WINDOW_SCALES = 40.0


def _next_pow2(n):
    return 1 << max(int(n) - 1, 1).bit_length()


# --------------------------------------------------------------------------
# thermal occupation
# --------------------------------------------------------------------------

def bose_occupation(omega, temperature):
    """Bose-Einstein occupation ``1 / (exp(hbar omega / k_B T) - 1)``.

    Parameters
    ----------
    omega : float or array_like
        Absolute angular frequency in rad/us, must be positive.
    temperature : float
        Temperature in kelvin.

    Returns
    -------
    float or ndarray
        Mean occupation, identically zero when ``temperature == 0``.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ParameterError("Bose occupation is undefined for omega <= 0")
    if temperature < 0:
        raise ParameterError("temperature must be non-negative")
    if temperature == 0:
        out = np.zeros_like(omega)
    else:
        x = HBAR_OVER_KB * omega * 1e6 / temperature
        with np.errstate(over="ignore"):
            out = 1.0 / np.expm1(x)
    return out if out.ndim else float(out)


def _occupation_or_zero(omega, temperature):
    # thermal weight on a shifted frequency grid; non-positive absolute
    # frequencies carry no thermal weight
    omega = np.asarray(omega, dtype=float)
    out = np.zeros_like(omega)
    if temperature > 0:
        pos = omega > 0
        out[pos] = bose_occupation(omega[pos], temperature)
    return out


# --------------------------------------------------------------------------
# environment
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EnvironmentSpec:
    """Cavity and bath parameters.

    Attributes
    ----------
    kappa : float
        Cavity field decay rate in 1/us; the Markovian leakage density is
        ``J_e = 2 kappa``.
    cavity_frequency : float
        Absolute cavity angular frequency in rad/us.
    spin_temperature, env_temperature : float
        Bath temperatures in kelvin.
    """

    kappa: float
    cavity_frequency: float
    spin_temperature: float = 0.0
    env_temperature: float = 0.0

    def __post_init__(self):
        if self.kappa < 0:
            raise ParameterError("kappa must be non-negative")
        if self.cavity_frequency <= 0:
            raise ParameterError("cavity frequency must be positive")
        if self.spin_temperature < 0 or self.env_temperature < 0:
            raise ParameterError("temperatures must be non-negative")

    @property
    def env_occupation(self):
        """Occupation of the leakage bath, taken at the cavity frequency."""
        return bose_occupation(self.cavity_frequency, self.env_temperature)

    def spin_occupation(self, delta):
        """Spin-bath occupation at rotating-frame detuning ``delta``."""
        return _occupation_or_zero(self.cavity_frequency + np.asarray(delta, float),
                                   self.spin_temperature)


# --------------------------------------------------------------------------
# spectral models
# --------------------------------------------------------------------------

class SpectralModel:
    """Base class for spin-ensemble spectral densities.

    Subclasses define ``center`` (absolute line centre), ``coupling`` (the
    collective coupling Omega) and the detuning profile ``profile_density``.
    """

    center: float
    coupling: float

    # -- shape ----------------------------------------------------------
    def profile_density(self, x):
        """Spectral density ``J_s`` at detuning ``x`` from the line centre."""
        raise NotImplementedError

    def density(self, omega):
        """Spectral density ``J_s(omega)`` at absolute angular frequency."""
        return self.profile_density(np.asarray(omega, float) - self.center)

    @property
    def scale(self):
        """Characteristic frequency scale used for windows and grids."""
        raise NotImplementedError

    @property
    def window_halfwidth(self):
        return WINDOW_SCALES * self.scale

    holes = ()

    @property
    def is_symmetric(self):
        return True

    # -- analytic pieces (None when unavailable) ------------------------
    def spin_kernel(self, t):
        """``int dx/2pi J(x) exp(-i x t)`` in closed form, or None."""
        return None

    def hilbert(self, x):
        """Closed-form ``PV int dx'/2pi J(x') / (x - x')``, or None."""
        return None

    def asymptotic_coefficients(self):
        """Coefficients ``(c1, c2)`` of ``Sigma(z) ~ c1/z + c2/z**2``.

        ``z`` is measured from the line centre.
        """
        return self.weight(), self.first_moment()

    # -- integrals -------------------------------------------------------
    def weight(self):
        """Integrated weight ``int J dx / 2pi``."""
        return self.coupling ** 2

    def first_moment(self):
        """``int x J(x) dx / 2pi`` about the line centre."""
        return 0.0

    def weight_within(self, a, b):
        """Weight ``int_a^b J(x) dx/2pi`` between detunings ``a`` and ``b``."""
        val, _ = integrate.quad(self.profile_density, a, b, limit=400,
                                points=[0.0] if a < 0 < b else None)
        return val / (2 * np.pi)

    def check_window(self, a, b, what="frequency window"):
        """Raise `TruncationError` when ``[a, b]`` misses too much weight."""
        total = self.weight()
        if total <= 0:
            return
        missing = 1.0 - self.weight_within(a, b) / total
        if missing > WEIGHT_TOLERANCE:
            raise TruncationError(
                f"{what} [{a:.4g}, {b:.4g}] rad/us misses a fraction "
                f"{missing:.3g} of the spectral weight")


def _check_line(model):
    if model.coupling < 0:
        raise ParameterError("coupling must be non-negative")
    if model.center <= 0:
        raise ParameterError("line centre must be a positive frequency")


@dataclass(frozen=True)
class Gaussian(SpectralModel):
    """Gaussian line ``J = 2 pi Omega^2 N(x; 0, sigma)`` of given FWHM."""

    center: float
    coupling: float
    fwhm: float

    def __post_init__(self):
        _check_line(self)
        if self.fwhm <= 0:
            raise ParameterError("fwhm must be positive")

    @property
    def sigma(self):
        return self.fwhm / (2 * math.sqrt(2 * math.log(2)))

    @property
    def scale(self):
        return max(2 * self.coupling, self.fwhm)

    def profile_density(self, x):
        s = self.sigma
        x = np.asarray(x, float)
        return self.coupling ** 2 * math.sqrt(2 * np.pi) / s * np.exp(-0.5 * (x / s) ** 2)

    def spin_kernel(self, t):
        t = np.asarray(t, float)
        return (self.coupling ** 2 * np.exp(-0.5 * (self.sigma * t) ** 2)).astype(complex)

    def hilbert(self, x):
        s = self.sigma
        x = np.asarray(x, float)
        return self.coupling ** 2 * math.sqrt(2) / s * special.dawsn(x / (s * math.sqrt(2)))


@dataclass(frozen=True)
class Lorentzian(SpectralModel):
    """Lorentzian line with half-width at half maximum ``halfwidth``."""

    center: float
    coupling: float
    halfwidth: float

    def __post_init__(self):
        _check_line(self)
        if self.halfwidth <= 0:
            raise ParameterError("halfwidth must be positive")

    @property
    def scale(self):
        return max(2 * self.coupling, 2 * self.halfwidth)

    def profile_density(self, x):
        lam = self.halfwidth
        x = np.asarray(x, float)
        return 2 * self.coupling ** 2 * lam / (x ** 2 + lam ** 2)

    def spin_kernel(self, t):
        t = np.asarray(t, float)
        return (self.coupling ** 2 * np.exp(-self.halfwidth * np.abs(t))).astype(complex)

    def hilbert(self, x):
        x = np.asarray(x, float)
        return self.coupling ** 2 * x / (x ** 2 + self.halfwidth ** 2)

    def asymptotic_coefficients(self):
        w = self.coupling ** 2
        return w, -1j * self.halfwidth * w

    def weight_within(self, a, b):
        lam = self.halfwidth
        return self.coupling ** 2 / np.pi * (np.arctan(b / lam) - np.arctan(a / lam))


@dataclass(frozen=True)
class QGaussian(SpectralModel):
    """q-Gaussian line ``J = 2 pi Omega^2 C [1 + (q-1) x^2 / D^2]^(1/(1-q))``.

    The width ``D`` follows from the FWHM through
    ``fwhm = 2 D sqrt((2^q - 2) / (2q - 2))``; ``C`` normalizes the integrated
    weight to ``Omega^2``.
    """

    center: float
    coupling: float
    fwhm: float
    q: float = 1.39

    def __post_init__(self):
        _check_line(self)
        if self.fwhm <= 0:
            raise ParameterError("fwhm must be positive")
        if not 1.0 < self.q < 3.0:
            raise ParameterError(
                f"q-Gaussian requires 1 < q < 3 (got q={self.q}); use the "
                "Gaussian kind for q -> 1")

    @property
    def width(self):
        q = self.q
        return self.fwhm / (2 * math.sqrt((2 ** q - 2) / (2 * q - 2)))

    @property
    def scale(self):
        return max(2 * self.coupling, self.fwhm)

    def _shape(self, x):
        q, d = self.q, self.width
        return (1 + (q - 1) * (np.asarray(x, float) / d) ** 2) ** (1 / (1 - q))

    @cached_property
    def normalization(self):
        """Constant ``C`` with ``int C * shape(x) dx = 1``."""
        val, _ = integrate.quad(self._shape, -np.inf, np.inf, epsabs=0, epsrel=1e-13,
                                limit=400)
        return 1.0 / val

    @property
    def peak_density(self):
        return 2 * np.pi * self.coupling ** 2 * self.normalization

    def profile_density(self, x):
        return self.peak_density * self._shape(x)

    def weight_within(self, a, b):
        # tail weight has a closed form through the regularized incomplete beta
        q, d = self.q, self.width
        n = 1 / (q - 1)
        c = np.sqrt(q - 1) / d

        def cdf(x):
            if np.isinf(x):
                return 1.0 if x > 0 else 0.0
            z = 1 / (1 + (c * x) ** 2)
            tail = 0.5 * special.betainc(n - 0.5, 0.5, z)
            return 1 - tail if x >= 0 else tail

        return self.coupling ** 2 * (cdf(b) - cdf(a))


@dataclass(frozen=True)
class HoleSpec:
    """Spectral hole burned into a line.

    Attributes
    ----------
    offset : float
        Hole centre relative to the line centre, rad/us.
    half_width : float
        Half-width of the hole window, rad/us.
    profile : {"rectangular", "notch"}
        ``rectangular`` zeroes the density on the whole window; ``notch``
        multiplies it by ``sin^2(pi (x - offset) / (2 half_width))``, which is
        continuous with zero slope at the window edges and vanishes only at
        the centre.
    """

    offset: float
    half_width: float
    profile: str = "rectangular"

    def __post_init__(self):
        if self.half_width <= 0:
            raise ParameterError("hole half-width must be positive")
        if self.profile not in ("rectangular", "notch"):
            raise ParameterError(f"unknown hole profile {self.profile!r}")

    @property
    def edges(self):
        return self.offset - self.half_width, self.offset + self.half_width

    def removed_fraction(self, x):
        """Fraction of the base density removed at ``x``, analytically
        continued outside the window."""
        x = np.asarray(x, float)
        if self.profile == "rectangular":
            return np.ones_like(x)
        return np.cos(np.pi * (x - self.offset) / (2 * self.half_width)) ** 2

    def inside(self, x):
        a, b = self.edges
        x = np.asarray(x, float)
        return (x > a) & (x < b)


@lru_cache(maxsize=64)
def _legendre(n):
    return np.polynomial.legendre.leggauss(n)


def _gl_nodes(n, a, b):
    xg, wg = _legendre(n)
    return 0.5 * (b - a) * xg + 0.5 * (a + b), 0.5 * (b - a) * wg


@dataclass(frozen=True)
class HoleBurned(SpectralModel):
    """Base line with spectral holes. The base normalization is kept, so the
    integrated weight is reduced by the burned fraction."""

    base: SpectralModel
    holes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        holes = tuple(self.holes)
        object.__setattr__(self, "holes", holes)
        spans = sorted(h.edges for h in holes)
        for (a0, b0), (a1, b1) in zip(spans, spans[1:]):
            if a1 < b0:
                raise ParameterError("hole windows overlap")

    @property
    def center(self):
        return self.base.center

    @property
    def coupling(self):
        return self.base.coupling

    @property
    def scale(self):
        return self.base.scale

    @property
    def is_symmetric(self):
        keys = sorted((round(h.offset, 12), h.half_width, h.profile) for h in self.holes)
        mirror = sorted((round(-h.offset, 12), h.half_width, h.profile) for h in self.holes)
        return self.base.is_symmetric and keys == mirror

    def profile_density(self, x):
        x = np.asarray(x, float)
        out = np.array(self.base.profile_density(x), dtype=float, copy=True)
        for h in self.holes:
            mask = h.inside(x)
            out[mask] *= 1.0 - h.removed_fraction(x[mask])
        return out if out.ndim else float(out)

    def removed_density(self, hole, x):
        """Density removed by ``hole``, continued analytically off-window."""
        return self.base.profile_density(x) * hole.removed_fraction(x)

    def hole_nodes(self, hole, n):
        """Gauss-Legendre nodes and weights over a hole window."""
        return _gl_nodes(n, *hole.edges)

    def removed_weight(self, hole):
        xs, ws = self.hole_nodes(hole, 64)
        return float(np.sum(ws * self.removed_density(hole, xs))) / (2 * np.pi)

    def weight(self):
        return self.base.weight() - sum(self.removed_weight(h) for h in self.holes)

    def first_moment(self):
        m = self.base.first_moment()
        for h in self.holes:
            xs, ws = self.hole_nodes(h, 64)
            m -= float(np.sum(ws * xs * self.removed_density(h, xs))) / (2 * np.pi)
        return m

    def asymptotic_coefficients(self):
        c1, c2 = self.base.asymptotic_coefficients()
        removed = sum(self.removed_weight(h) for h in self.holes)
        return c1 - removed, c2 + (self.first_moment() - self.base.first_moment())

    def weight_within(self, a, b):
        w = self.base.weight_within(a, b)
        for h in self.holes:
            lo, hi = max(a, h.edges[0]), min(b, h.edges[1])
            if hi > lo:
                xs, ws = _gl_nodes(64, lo, hi)
                w -= float(np.sum(ws * self.removed_density(h, xs))) / (2 * np.pi)
        return w

    def check_window(self, a, b, what="frequency window"):
        self.base.check_window(a, b, what)

    def hole_kernel_correction(self, t, weight=None):
        """``int_hole R(x) w(x) exp(-i x t) dx/2pi`` for every hole, summed.

        ``weight`` is an optional callable of the detuning ``x``.
        """
        t = np.asarray(t, float)
        out = np.zeros(t.shape, complex)
        tmax = float(np.max(np.abs(t))) if t.size else 0.0
        for h in self.holes:
            n = 48 + int(math.ceil(h.half_width * tmax))
            xs, ws = self.hole_nodes(h, n)
            r = ws * self.removed_density(h, xs) / (2 * np.pi)
            if weight is not None:
                r = r * weight(xs)
            out += np.exp(-1j * np.multiply.outer(t, xs)) @ r
        return out


def evaluate_density(model, omega):
    """Spectral density ``J_s(omega)`` of ``model`` at absolute frequency."""
    return model.density(omega)


# --------------------------------------------------------------------------
# memory kernels
# --------------------------------------------------------------------------

def _base_of(model):
    return model.base if isinstance(model, HoleBurned) else model


def _fft_transform(weight, h, n, lmin=1 << 18):
    """``sum_k weight(delta_k) exp(-i delta_k t_m) d_delta / 2pi`` for
    ``t_m = m h``, ``m = 0..n``, on a uniform grid spanning ``+-pi/h``.

    The grid size is fixed (``lmin``) for short horizons so kernels do not
    depend on the horizon.
    """
    L = max(lmin, _next_pow2(4 * (n + 1)))
    dw = 2 * np.pi / (L * h)
    delta = np.fft.fftfreq(L, d=1.0 / L) * dw
    spec = weight(delta) * (dw / (2 * np.pi))
    return np.fft.fft(spec)[: n + 1]


def spin_kernel_series(model, env, h, n):
    """Kernel ``g(t_m)``, ``t_m = m h``, in the frame rotating at ``omega_c``.

    Uses the closed form of the base line when available, otherwise a fast
    Fourier transform over ``+-pi/h``; holes are subtracted by Gauss-Legendre
    quadrature over their windows.
    """
    t = h * np.arange(n + 1)
    shift = model.center - env.cavity_frequency
    base = _base_of(model)
    g = base.spin_kernel(t)
    if g is None:
        base.check_window(-np.pi / h - shift, np.pi / h - shift, "kernel window")
        g = _fft_transform(lambda d: base.profile_density(d - shift), h, n)
        g *= np.exp(1j * shift * t)
    if isinstance(model, HoleBurned) and model.holes:
        g = g - model.hole_kernel_correction(t)
    return g * np.exp(-1j * shift * t)


def thermal_kernel_series(model, env, h, n):
    """Thermal kernel of the spin bath, ``int dd/2pi J n(omega_c + d) e^{-i d t}``.

    The white-noise leakage bath contributes ``2 kappa n_e delta(t)``, which is
    handled in closed form by the solvers and not included here.
    """
    t = h * np.arange(n + 1)
    if env.spin_temperature == 0:
        return np.zeros(n + 1, complex)
    shift = model.center - env.cavity_frequency
    base = _base_of(model)
    base.check_window(-np.pi / h - shift, np.pi / h - shift, "thermal kernel window")
    g = _fft_transform(lambda d: base.profile_density(d - shift) * env.spin_occupation(d),
                       h, n)
    if isinstance(model, HoleBurned) and model.holes:
        g = g - model.hole_kernel_correction(
            t, weight=lambda x: env.spin_occupation(x + shift)) * np.exp(-1j * shift * t)
    return g


def memory_kernels(model, env, grid):
    """Memory kernels ``(g, g_thermal)`` sampled on ``grid``.

    Parameters
    ----------
    model : SpectralModel
    env : EnvironmentSpec
    grid : TimeGrid

    Returns
    -------
    g, g_thermal : ndarray of complex
        Rotating-frame kernels at ``grid.times``. The cavity leakage enters
        the propagator equations as a local term and is not part of ``g``;
        its white-noise contribution to the thermal kernel is a delta function
        ``2 kappa n_e delta(t)`` and is likewise kept separate.
    """
    g = spin_kernel_series(model, env, grid.dt, grid.steps)
    gt = thermal_kernel_series(model, env, grid.dt, grid.steps)
    return g, gt


class HoleEdgeWarning(UserWarning):
    """A frequency lies on the discontinuous edge of a rectangular hole."""


def _warn_edge(omega):
    warnings.warn(f"frequency {omega} lies on a rectangular hole edge; the "
                  "principal-value shift diverges there", HoleEdgeWarning, stacklevel=3)
