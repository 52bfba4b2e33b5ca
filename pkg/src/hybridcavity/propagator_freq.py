"""Frequency-domain analysis of the cavity propagator.

The boundary value of the self-energy on the real axis is
``Sigma(omega + i0) = Delta(omega) - i J(omega) / 2`` with the principal-value
shift ``Delta(omega) = PV int dw'/2pi J(w') / (omega - w')``. The response
function is ``U(omega) = i / (omega - omega_c + i kappa - Sigma(omega + i0))``
and its Fourier inversion gives the propagator ``u(t)``. Where the density
vanishes on an interval, roots of ``omega - omega_c - Delta(omega)`` are
localized modes that never decay.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, signal

from .errors import ParameterError, SingularityError
from .spectral import HoleBurned, _gl_nodes, _next_pow2, _warn_edge

#: Gauss-Legendre order per panel of the principal-value quadrature
PANEL_ORDER = 16


# --------------------------------------------------------------------------
# principal-value shift
# --------------------------------------------------------------------------

@lru_cache(maxsize=16)
def _panel_nodes(width, halfwidth):
    """Graded composite Gauss-Legendre rule on ``[-halfwidth, halfwidth]``.

    Panels are ``width / 4`` wide near the centre and grow in proportion to
    the distance from it.
    """
    edges = [0.0]
    while edges[-1] < halfwidth:
        step = max(0.25 * width, edges[-1] / 8)
        edges.append(min(edges[-1] + step, halfwidth))
    edges = np.array(edges)
    edges = np.concatenate([-edges[:0:-1], edges])
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = _gl_nodes(PANEL_ORDER, a, b)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws), edges[0], edges[-1]


def _subtracted_pv(density, x, nodes, weights, a, b, chunk=512):
    """``PV int_a^b density(y) / (x - y) dy / 2pi`` by singularity subtraction.

    ``density`` must be smooth on ``[a, b]``; it is evaluated at ``x`` as well
    (through its analytic continuation when ``x`` lies outside).
    """
    x = np.atleast_1d(np.asarray(x, float))
    out = np.empty(x.shape)
    jn = density(nodes)
    for s in range(0, len(x), chunk):
        xc = x[s:s + chunk]
        jx = density(xc)
        diff = xc[:, None] - nodes[None, :]
        close = np.abs(diff) < 1e-13 * (b - a)
        diff = np.where(close, 1.0, diff)
        quot = np.where(close, 0.0, (jn[None, :] - jx[:, None]) / diff)
        with np.errstate(divide="ignore"):
            log = np.log(np.abs((xc - a) / (xc - b)))
        out[s:s + chunk] = (quot @ weights + jx * log) / (2 * np.pi)
    return out


def _base_shift(base, x):
    val = base.hilbert(x)
    if val is not None:
        return np.atleast_1d(val)
    width = getattr(base, "width", base.scale / 4)
    nodes, weights, a, b = _panel_nodes(width, base.window_halfwidth)
    return _subtracted_pv(base.profile_density, x, nodes, weights, a, b)


def _hole_shift(model, hole, x, order=64):
    """Principal-value shift produced by the density removed by ``hole``."""
    a, b = hole.edges
    nodes, weights = _gl_nodes(order, a, b)
    return _subtracted_pv(lambda y: model.removed_density(hole, y), x, nodes, weights, a, b)


def frequency_shift(model, x):
    """Principal-value shift ``Delta`` at detuning ``x`` from the line centre."""
    x = np.atleast_1d(np.asarray(x, float))
    base = model.base if isinstance(model, HoleBurned) else model
    out = _base_shift(base, x).astype(float)
    for hole in model.holes:
        if hole.profile == "rectangular":
            on_edge = np.isin(x, hole.edges)
            if np.any(on_edge):
                _warn_edge(x[on_edge])
        out = out - _hole_shift(model, hole, x)
    return out


def self_energy(model, omega):
    """Self-energy boundary value at absolute frequency ``omega``.

    Returns
    -------
    shift, half_width : ndarray
        ``Delta(omega)`` and ``J(omega) / 2``. At the edge of a rectangular
        hole the shift diverges logarithmically; such points are flagged with
        a `HoleEdgeWarning` and returned as infinite.
    """
    omega = np.atleast_1d(np.asarray(omega, float))
    x = omega - model.center
    return frequency_shift(model, x), 0.5 * model.profile_density(x)


def _grid_shift(model, x):
    """Shift on a uniform detuning grid ``x``, in any order (fast path)."""
    base = model.base if isinstance(model, HoleBurned) else model
    out = base.hilbert(x)
    if out is None:
        # odd-offset (Maclaurin) discrete Hilbert transform as a linear convolution
        order = np.argsort(x)
        n = len(x)
        m = np.arange(-(n - 1), n)
        kern = np.zeros(len(m))
        odd = (m % 2) != 0
        kern[odd] = 1.0 / (np.pi * m[odd])
        dens = base.profile_density(x[order])
        out = np.empty(n)
        out[order] = signal.fftconvolve(dens, kern, mode="full")[n - 1: 2 * n - 1]
    out = np.array(out, dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for hole in model.holes:
            out -= _hole_shift(model, hole, x)
    return out


def response_function(model, env, omega):
    """Response ``U(omega) = i / (omega - omega_c + i kappa - Sigma(omega + i0))``.

    Raises
    ------
    SingularityError
        At an exact real-axis pole (``kappa = 0`` on a localized mode).
    """
    shift, half = self_energy(model, omega)
    omega = np.atleast_1d(np.asarray(omega, float))
    den = omega - env.cavity_frequency + 1j * env.kappa - shift + 1j * half
    if np.any(den == 0):
        raise SingularityError("response evaluated on a localized-mode pole; use "
                               "find_localized_modes")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.isfinite(den), 1j / den, 0.0)
    return out


@dataclass(frozen=True)
class SelfEnergy:
    """Sampled self-energy and response on a frequency window."""

    omega: np.ndarray
    shift: np.ndarray
    half_width: np.ndarray
    response: np.ndarray
    window: tuple


def sample_spectrum(model, env, span=None, points=2001):
    """Self-energy and response on ``omega_c +- span``.

    ``span`` defaults to three times the model's frequency scale.
    """
    span = 3 * model.scale if span is None else span
    omega = env.cavity_frequency + np.linspace(-span, span, points)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        shift, half = self_energy(model, omega)
        den = omega - env.cavity_frequency + 1j * env.kappa - shift + 1j * half
        with np.errstate(divide="ignore", invalid="ignore"):
            resp = np.where(np.isfinite(den) & (den != 0), 1j / den, 0.0)
    return SelfEnergy(omega, shift, half, resp, (omega[0], omega[-1]))


# --------------------------------------------------------------------------
# localized modes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalizedMode:
    """Dissipationless mode of the cavity-ensemble system.

    Attributes
    ----------
    frequency : float
        Absolute angular frequency ``omega_b``.
    residue : float
        Amplitude ``Z = 1 / (1 - Delta'(omega_b))`` of the mode in ``u(t)``;
        zero when the root sits on a hole edge.
    slope : float
        ``Delta'(omega_b)``.
    at_edge : bool
        True when the root coincides with a discontinuity of the density.
    """

    frequency: float
    residue: float
    slope: float
    at_edge: bool = False


def find_localized_modes(model, env, tol=1e-9):
    """Roots of ``omega - omega_c - Delta(omega)`` where the density vanishes.

    The search treats ``kappa`` as zero. Only spectral holes provide
    intervals with vanishing density, so models without holes have none.
    Inside a rectangular hole ``Delta`` is strictly decreasing and diverges
    to ``+inf`` and ``-inf`` at the two edges, so every such hole holds exactly
    one root. A notch vanishes only at its centre, which is a mode only if the
    condition happens to hold there.
    """
    shift = model.center - env.cavity_frequency
    scale = model.scale

    def f(x):
        return float(x + shift - frequency_shift(model, x)[0])

    modes = []
    for hole in model.holes:
        a, b = hole.edges
        w = hole.half_width
        if hole.profile == "notch":
            x0 = hole.offset
            if abs(f(x0)) < tol * scale:
                modes.append(_mode_at(model, x0, w))
            continue
        eps = w * np.logspace(-12, -1, 12)
        xs = np.unique(np.concatenate([a + eps, np.linspace(a, b, 201)[1:-1], b - eps]))
        fs = np.array([f(x) for x in xs])
        idx = np.nonzero(np.sign(fs[:-1]) * np.sign(fs[1:]) <= 0)[0]
        for i in idx:
            x0 = optimize.brentq(f, xs[i], xs[i + 1], xtol=1e-13 * scale, rtol=1e-15)
            modes.append(_mode_at(model, x0, w))
    modes.sort(key=lambda m: m.frequency)
    return modes


def _mode_at(model, x0, w):
    step = 1e-4 * w
    for hole in model.holes:
        a, b = hole.edges
        if a < x0 < b:
            step = min(step, 0.5 * (x0 - a), 0.5 * (b - x0))
    if step <= 1e-14 * model.scale:
        return LocalizedMode(model.center + x0, 0.0, -np.inf, True)
    d = frequency_shift(model, np.array([x0 - step, x0 + step]))
    slope = (d[1] - d[0]) / (2 * step)
    return LocalizedMode(model.center + x0, 1.0 / (1.0 - slope), slope)


# --------------------------------------------------------------------------
# spectral inversion of u
# --------------------------------------------------------------------------

def _smooth_step(r):
    """Infinitely differentiable step: 1 for ``r <= 0``, 0 for ``r >= 1``."""
    r = np.clip(np.asarray(r, float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(r < 1, np.exp(-1.0 / np.where(r < 1, 1 - r, 1.0)), 0.0)
        b = np.where(r > 0, np.exp(-1.0 / np.where(r > 0, r, 1.0)), 0.0)
    return a / (a + b)


def _hole_windows(model):
    """``(hole, inner, outer)`` margins of the refined zone around each
    rectangular hole, kept disjoint from neighbouring holes."""
    holes = sorted((h for h in model.holes if h.profile == "rectangular"),
                   key=lambda h: h.offset)
    out = []
    for i, hole in enumerate(holes):
        a, b = hole.edges
        room = np.inf
        if i > 0:
            room = min(room, 0.5 * (a - holes[i - 1].edges[1]))
        if i + 1 < len(holes):
            room = min(room, 0.5 * (holes[i + 1].edges[0] - b))
        outer = min(3 * hole.half_width, room)
        out.append((hole, 0.25 * outer, outer))
    return out


def _refined_fraction(windows, x):
    """Share of a spectral integrand assigned to the refined panels."""
    frac = np.zeros_like(np.asarray(x, float))
    for hole, inner, outer in windows:
        r = (np.abs(x - hole.offset) - hole.half_width - inner) / (outer - inner)
        frac += _smooth_step(r)
    return frac


def _graded_nodes(p, q, at_p, at_q, max_panel, levels=14, ratio=0.2, order=12):
    """Gauss-Legendre panels on ``[p, q]``, refined geometrically toward the
    flagged ends."""
    if at_p and at_q:
        mid = 0.5 * (p + q)
        x1, w1 = _graded_nodes(p, mid, True, False, max_panel, levels, ratio, order)
        x2, w2 = _graded_nodes(mid, q, False, True, max_panel, levels, ratio, order)
        return np.concatenate([x1, x2]), np.concatenate([w1, w2])
    length = q - p
    steps = length * ratio ** np.arange(1, levels + 1)
    cuts = [np.linspace(p, q, max(2, int(math.ceil(length / max_panel)) + 1))]
    if at_q:
        cuts.append(q - steps)
    if at_p:
        cuts.append(p + steps)
    cuts = np.unique(np.concatenate(cuts))
    xs, ws = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        x, w = _gl_nodes(order, a, b)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


@dataclass
class _SpectralQuadrature:
    """Quadrature of ``int f(d) exp(-i d t) dd`` over the detuning axis.

    Smooth parts use a uniform grid matched to an FFT whose time step divides
    ``dt``. Around rectangular holes the integrands have logarithmic branch
    points; there a smooth partition of unity hands the integrand to graded
    Gauss-Legendre panels.
    """

    delta: np.ndarray
    dw: float
    sub: int
    steps: int
    uniform_weight: np.ndarray
    nodes: np.ndarray
    node_weights: np.ndarray

    @classmethod
    def build(cls, model, env, dt, steps, min_points=1 << 16):
        shift = model.center - env.cavity_frequency
        reach = abs(shift) + model.window_halfwidth
        sub = max(1, math.ceil(reach * dt / np.pi))
        L = max(min_points, _next_pow2(8 * (steps * sub + 1)))
        dw = 2 * np.pi / (L * dt / sub)
        delta = np.fft.fftfreq(L, d=1.0 / L) * dw
        windows = _hole_windows(model)
        uniform = 1.0 - _refined_fraction(windows, delta - shift)
        max_panel = 8.0 / max(dt * steps, 1.0)
        xs, ws = [np.zeros(0)], [np.zeros(0)]
        for hole, inner, outer in windows:
            a, b = hole.edges
            w = hole.half_width
            # inside the hole the response has a quasi-bound peak of width ~kappa
            inside = min(max_panel, 0.05 * w, 0.25 * env.kappa if env.kappa > 0 else np.inf)
            outside = min(max_panel, 0.25 * w)
            for seg, mp in (((a - outer, a, False, True), outside),
                            ((a, b, True, True), inside),
                            ((b, b + outer, True, False), outside)):
                x, w = _graded_nodes(*seg, mp)
                xs.append(x)
                ws.append(w * _refined_fraction(windows, x))
        return cls(delta, dw, sub, steps, uniform, np.concatenate(xs) + shift,
                   np.concatenate(ws))

    def integrate(self, f_uniform, f_nodes, times):
        """``int f exp(-i d t) dd`` at ``times`` (the grid ``m dt``)."""
        out = (np.fft.fft(f_uniform * self.uniform_weight) * self.dw)[
            : self.steps * self.sub + 1: self.sub]
        if len(self.nodes):
            coef = self.node_weights * f_nodes
            for s in range(0, len(times), 1024):
                ph = np.exp(-1j * np.multiply.outer(times[s:s + 1024], self.nodes))
                out[s:s + 1024] += ph @ coef
        return out


def _spectral_data(model, env, quad):
    """Shift and half-width on the uniform grid and on the refined nodes."""
    shift = model.center - env.cavity_frequency
    xu = quad.delta - shift
    xn = quad.nodes - shift
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        du = _grid_shift(model, xu)
        dn = frequency_shift(model, xn) if len(xn) else np.zeros(0)
    hu = 0.5 * model.profile_density(xu)
    hn = 0.5 * model.profile_density(xn) if len(xn) else np.zeros(0)
    return (du, hu), (dn, hn)


def _edge_check(half, delta, shift):
    far = np.argsort(np.abs(delta - shift))[-8:]
    if np.abs(half[far]).max() > 1e-6 * max(np.max(half), 1e-300):
        warnings.warn("spectral integrand has not decayed at the window edge",
                      RuntimeWarning, stacklevel=3)


def _branch_density(delta, dshift, half, kappa):
    den = 4 * (delta - dshift + 1j * kappa) ** 2 + 4 * half ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = np.where(half > 0, (4 / np.pi) * half / den, 0.0)
    return np.nan_to_num(dens)


def u_from_spectrum(model, env, grid, method=None):
    """Propagator ``u(t)`` from the spectral representation.

    Parameters
    ----------
    model : SpectralModel
    env : EnvironmentSpec
    grid : TimeGrid
    method : {"fourier", "branch_cut"}, optional
        ``fourier`` inverts ``U(omega + i0)`` directly and needs ``kappa > 0``;
        it is the default then. ``branch_cut`` sums the localized modes found
        with ``kappa = 0`` and the continuum weighted by
        ``(2/pi) J / (4 [d - Delta + i kappa]^2 + J^2)``; it is exact for
        ``kappa = 0`` and the default in that case.

    Returns
    -------
    ndarray of complex
        Rotating-frame propagator on ``grid.times``.
    """
    kappa = env.kappa
    if method is None:
        method = "fourier" if kappa > 0 else "branch_cut"
    if method not in ("fourier", "branch_cut"):
        raise ParameterError(f"unknown method {method!r}")
    if method == "fourier" and kappa <= 0:
        raise ParameterError("Fourier inversion needs kappa > 0; use branch_cut")

    quad = _SpectralQuadrature.build(model, env, grid.dt, grid.steps)
    (du, hu), (dn, hn) = _spectral_data(model, env, quad)
    shift = model.center - env.cavity_frequency
    _edge_check(hu, quad.delta, shift)
    t = grid.times

    if method == "branch_cut":
        u = quad.integrate(_branch_density(quad.delta, du, hu, kappa),
                           _branch_density(quad.nodes, dn, hn, kappa), t)
        if kappa == 0:
            for mode in find_localized_modes(model, env):
                u = u + mode.residue * np.exp(-1j * (mode.frequency - env.cavity_frequency) * t)
        return u

    # subtract the large-|d| expansion of U, whose transform is known
    c1, c2 = model.asymptotic_coefficients()
    C1 = c1
    C2 = c2 + c1 * shift + 1j * kappa * c1
    beta = max(model.scale, 2 * kappa)
    b4 = 1j * C2 - 3 * (beta - kappa) * C1

    def residual(delta, dshift, half):
        z = delta + 1j * kappa
        zeta = delta + 1j * beta
        with np.errstate(divide="ignore", invalid="ignore"):
            U = 1j / (z - dshift + 1j * half)
        U = np.where(np.isfinite(U), U, 0.0)
        return U - (1j / z + 1j * C1 / zeta ** 3 + b4 / zeta ** 4)

    u = quad.integrate(residual(quad.delta, du, hu), residual(quad.nodes, dn, hn), t)
    u = u / (2 * np.pi)
    u += np.exp(-kappa * t) + (-0.5 * C1 * t ** 2 + b4 * t ** 3 / 6) * np.exp(-beta * t)
    return u


def spectral_weight(model, env, modes=None):
    """Localized-mode residues plus continuum weight at ``kappa = 0``.

    Completeness of the spectral representation makes this equal to
    ``u(0) = 1``.
    """
    reach = model.window_halfwidth + abs(model.center - env.cavity_frequency)
    quad = _SpectralQuadrature.build(model, env, np.pi / reach, 2)
    (du, hu), (dn, hn) = _spectral_data(model, env, quad)
    total = quad.integrate(_branch_density(quad.delta, du, hu, 0.0),
                           _branch_density(quad.nodes, dn, hn, 0.0), np.zeros(1))[0]
    if modes is None:
        modes = find_localized_modes(model, env)
    return float(total.real) + sum(m.residue for m in modes)
