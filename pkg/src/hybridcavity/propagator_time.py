"""Time-domain Green functions of the cavity field.

The retarded propagator obeys

    du/dt = -kappa u - int_0^t g(t - s) u(s) ds,   u(0) = 1,

in the frame rotating at the cavity frequency. It is solved with an implicit
trapezoidal product rule after removing the local decay through an
integrating factor, and three step sizes are combined by Richardson
extrapolation. The drive response ``y`` and the noise correlation ``v`` are
linear functionals of ``u`` and are evaluated from a piecewise cubic Hermite
representation of ``u``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import HorizonError, ParameterError, SamplingError
from .spectral import HoleBurned, spin_kernel_series, thermal_kernel_series

#: Gauss-Legendre order per grid cell for integrals over u
CELL_ORDER = 6


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_m = m * dt`` for ``m = 0..steps``.

    ``v_stride`` sets the spacing, in steps, of the stored two-time noise mesh.
    """

    dt: float
    steps: int
    v_stride: int = 4

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError("dt must be positive")
        if self.steps < 2:
            raise ParameterError("a grid needs at least two steps")
        if self.v_stride < 1:
            raise ParameterError("v_stride must be >= 1")

    @classmethod
    def from_horizon(cls, dt, horizon, v_stride=4):
        steps = int(round(horizon / dt))
        if abs(steps * dt - horizon) > 1e-9 * horizon:
            raise ParameterError("horizon must be an integer multiple of dt")
        return cls(dt, steps, v_stride)

    @property
    def times(self):
        return self.dt * np.arange(self.steps + 1)

    @property
    def horizon(self):
        return self.dt * self.steps

    @property
    def mesh_indices(self):
        return np.arange(0, self.steps + 1, self.v_stride)

    def index_of(self, t):
        """Grid indices of the times ``t``; they must lie on the grid."""
        t = np.asarray(t, float)
        idx = np.rint(t / self.dt).astype(int)
        if np.any(np.abs(idx * self.dt - t) > 1e-9 * max(self.dt, 1.0)):
            raise ParameterError("requested times are not on the time grid")
        if np.any(idx < 0) or np.any(idx > self.steps):
            raise HorizonError("requested time lies outside the solved horizon")
        return idx


# --------------------------------------------------------------------------
# u
# --------------------------------------------------------------------------

def _trapezoid_ide(k, h, n):
    """Implicit trapezoidal solution of ``w' = -int_0^t k(t-s) w(s) ds``.

    Returns ``w`` and the memory integral ``Q = int_0^t k(t-s) w(s) ds`` at the
    grid points. The scheme is linear, so each step is solved exactly.
    """
    w = np.zeros(n + 1, complex)
    q = np.zeros(n + 1, complex)
    w[0] = 1.0
    c = 1.0 + 0.25 * h * h * k[0]
    for m in range(1, n + 1):
        s = 0.5 * k[m] * w[0]
        if m > 1:
            s += np.dot(k[m - 1:0:-1], w[1:m])
        w[m] = (w[m - 1] - 0.5 * h * q[m - 1] - 0.5 * h * h * s) / c
        q[m] = h * (s + 0.5 * k[0] * w[m])
    return w, q


def _richardson(levels):
    """Romberg table for series whose error expands in even powers of h."""
    table = [np.asarray(x) for x in levels]
    for j in range(1, len(table)):
        f = 4.0 ** j
        for i in range(len(table) - 1, j - 1, -1):
            table[i] = (f * table[i] - table[i - 1]) / (f - 1)
    return table[-1]


def solve_u(model, env, grid, levels=3):
    """Retarded cavity propagator and its time derivative.

    Parameters
    ----------
    model : SpectralModel
    env : EnvironmentSpec
    grid : TimeGrid
    levels : int
        Number of step halvings combined by Richardson extrapolation.

    Returns
    -------
    u, udot : ndarray of complex
        Rotating-frame propagator and its derivative from the right-hand side
        of the equation of motion, on ``grid.times``.
    """
    kappa = env.kappa
    n, h = grid.steps, grid.dt
    if kappa * grid.horizon > 600:
        raise ParameterError("kappa * horizon too large for the integrating factor")
    fine = 2 ** (levels - 1)
    kernel = spin_kernel_series(model, env, h / fine, n * fine)
    t_fine = (h / fine) * np.arange(n * fine + 1)
    kernel = kernel * np.exp(kappa * t_fine)
    ws, qs = [], []
    for lev in range(levels):
        f = 2 ** lev
        stride = fine // f
        w, q = _trapezoid_ide(kernel[::stride], h / f, n * f)
        ws.append(w[::f])
        qs.append(q[::f])
    w = _richardson(ws)
    q = _richardson(qs)
    t = grid.times
    damp = np.exp(-kappa * t)
    u = damp * w
    udot = -kappa * u - damp * q
    u[0], udot[0] = 1.0, -kappa
    return u, udot


# --------------------------------------------------------------------------
# Hermite representation of u
# --------------------------------------------------------------------------

@dataclass
class HermiteSeries:
    """Piecewise cubic Hermite interpolant through ``(u, udot)`` samples."""

    h: float
    u: np.ndarray
    udot: np.ndarray
    order: int = CELL_ORDER
    _cells: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        self.nodes, self.weights = np.polynomial.legendre.leggauss(self.order)
        self.nodes = 0.5 * (self.nodes + 1)
        self.weights = 0.5 * self.weights

    @property
    def n(self):
        return len(self.u) - 1

    def _basis(self, th):
        th2, th3 = th * th, th * th * th
        return (2 * th3 - 3 * th2 + 1, th3 - 2 * th2 + th,
                -2 * th3 + 3 * th2, th3 - th2)

    def _eval(self, k, th):
        h00, h10, h01, h11 = self._basis(th)
        return (h00 * self.u[k] + h10 * self.h * self.udot[k]
                + h01 * self.u[k + 1] + h11 * self.h * self.udot[k + 1])

    def __call__(self, s):
        """Interpolated values at times ``s`` in ``[0, n h]``."""
        s = np.asarray(s, float)
        x = s / self.h
        if np.any(x < -1e-9) or np.any(x > self.n + 1e-9):
            raise HorizonError("interpolation outside the solved horizon")
        k = np.clip(np.floor(x).astype(int), 0, self.n - 1)
        return self._eval(k, np.clip(x - k, 0.0, 1.0))

    @property
    def cells(self):
        """Values at the Gauss-Legendre nodes of every cell, shape (n, order)."""
        if self._cells is None:
            k = np.arange(self.n)[:, None]
            self._cells = self._eval(k, self.nodes[None, :])
        return self._cells

    def cumulative_transform(self, nu):
        """``Psi(t_m) = int_0^{t_m} u(r) exp(i nu r) dr`` for each ``nu``.

        Returns an array of shape ``(len(nu), n + 1)`` (or ``(n + 1,)`` for a
        scalar ``nu``), together with ``exp(i nu t_m)``.
        """
        nu = np.asarray(nu, float)
        scalar = nu.ndim == 0
        nu = np.atleast_1d(nu)
        t = self.h * np.arange(self.n + 1)
        phase = np.exp(1j * np.multiply.outer(nu, t))
        local = np.exp(1j * np.multiply.outer(nu, self.h * self.nodes)) * self.weights
        per_cell = (local @ self.cells.T) * phase[:, :-1] * self.h
        psi = np.zeros((len(nu), self.n + 1), complex)
        np.cumsum(per_cell, axis=1, out=psi[:, 1:])
        if scalar:
            return psi[0], phase[0]
        return psi, phase

    def partial_cells(self, nu, theta):
        """``int_{t_k}^{t_k + theta h} u(r) exp(i nu r) dr`` for every cell."""
        k = np.arange(self.n)[:, None]
        th = theta * self.nodes[None, :]
        vals = self._eval(k, th) * np.exp(1j * nu * self.h * (k + th))
        return (vals @ self.weights) * theta * self.h

    def transform_at_shift(self, nu, shift):
        """``Psi(t_m - shift)`` for all grid indices ``m``; zero when negative."""
        psi, _ = self.cumulative_transform(nu)
        out = np.zeros(self.n + 1, complex)
        x = shift / self.h
        p = math.floor(x + 1e-12)
        frac = x - p
        if frac < 1e-9:
            p, frac = int(round(x)), 0.0
        if frac == 0.0:
            if p <= self.n:
                out[p:] = psi[: self.n + 1 - p] if p >= 0 else psi[-p:]
            return out
        theta = 1.0 - frac
        part = self.partial_cells(nu, theta)
        # t_m - shift = t_k + theta h with k = m - p - 1
        m0 = p + 1
        if m0 <= self.n:
            k = np.arange(m0, self.n + 1) - m0
            out[m0:] = psi[k] + part[k]
        return out


# --------------------------------------------------------------------------
# y
# --------------------------------------------------------------------------

def solve_y(u, udot, drive, grid, cavity_frequency=None, with_derivative=False):
    """Mean field driven by ``drive``, ``y(t) = -i int_0^t u(t-s) f(s) ds``.

    The rotating-frame drive is decomposed into exponential pieces on
    intervals, for which the convolution reduces to transforms of ``u``.

    Parameters
    ----------
    u, udot : ndarray
        Propagator and derivative from `solve_u`.
    drive : DriveSpec
    grid : TimeGrid
    cavity_frequency : float
        Absolute cavity frequency; required unless the drive is ``none``.
    with_derivative : bool
        Also return ``dy/dt``.
    """
    n = grid.steps
    y = np.zeros(n + 1, complex)
    ydot = np.zeros(n + 1, complex)
    pieces = drive.pieces(cavity_frequency) if drive.kind != "none" else []
    nyquist = np.pi / grid.dt
    herm = HermiteSeries(grid.dt, u, udot)
    t = grid.times
    for a, b, c, nu in pieces:
        if abs(nu) > nyquist:
            raise SamplingError(
                f"drive detuning {nu:.4g} rad/us exceeds the grid Nyquist limit "
                f"{nyquist:.4g} rad/us")
        if a >= t[-1]:
            continue
        part = herm.transform_at_shift(nu, a)
        on_a = t >= a - 1e-12
        ua = np.zeros(n + 1, complex)
        ua[on_a] = herm(np.clip(t[on_a] - a, 0, None)) * np.exp(-1j * nu * a)
        if b < t[-1]:
            part = part - herm.transform_at_shift(nu, b)
            on_b = t >= b - 1e-12
            ua[on_b] -= herm(np.clip(t[on_b] - b, 0, None)) * np.exp(-1j * nu * b)
        piece = -1j * c * np.exp(-1j * nu * t) * part
        y += piece
        ydot += -1j * nu * piece - 1j * c * ua
    y[0] = 0.0
    if with_derivative:
        return y, ydot
    return y


# --------------------------------------------------------------------------
# v
# --------------------------------------------------------------------------

def _spin_window(model, env, horizon):
    """Uniform detuning nodes (rotating frame) and weights for the spin part."""
    shift = model.center - env.cavity_frequency
    base = model.base if isinstance(model, HoleBurned) else model
    half = model.window_halfwidth
    base.check_window(-half, half, "noise-correlation window")
    dw = 2 * np.pi / (2 * horizon + 1.0)
    m = int(math.ceil(half / dw))
    x = dw * np.arange(-m, m + 1)
    w = base.profile_density(x) * env.spin_occupation(x + shift) * dw / (2 * np.pi)
    nodes, weights = [x + shift], [w]
    for hole in model.holes:
        ng = 48 + int(math.ceil(hole.half_width * horizon))
        xs, ws = model.hole_nodes(hole, ng)
        r = model.removed_density(hole, xs) * env.spin_occupation(xs + shift)
        nodes.append(xs + shift)
        weights.append(-ws * r / (2 * np.pi))
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass
class NoiseCorrelation:
    """Two-time noise correlation ``v(tau, t)`` of the cavity field.

    Attributes
    ----------
    mesh_index : ndarray of int
        Grid indices of the strided mesh.
    mesh : ndarray
        ``mesh[i, j] = v(t_{mesh_index[i]}, t_{mesh_index[j]})``.
    diag : ndarray
        Full-resolution diagonal ``v(t, t)``.
    diag_rate : ndarray
        ``d/dt v(t, t)`` from the equation of motion.
    """

    mesh_index: np.ndarray
    mesh: np.ndarray
    diag: np.ndarray
    diag_rate: np.ndarray
    evaluator: "NoiseEvaluator" = field(repr=False, default=None)

    def at(self, rows, cols):
        """``v(t_rows[i], t_cols[j])`` for grid-index arrays ``rows, cols``."""
        return self.evaluator.matrix(rows, cols)


class NoiseEvaluator:
    """Spectral evaluation of ``v`` at arbitrary grid-index pairs."""

    def __init__(self, u, udot, model, env, grid, chunk=256):
        self.grid = grid
        self.herm = HermiteSeries(grid.dt, u, udot)
        self.env = env
        self.chunk = chunk
        self.spin = env.spin_temperature > 0 and model.weight() > 0
        if self.spin:
            self.nodes, self.weights = _spin_window(model, env, grid.horizon)
        self.white = 2 * env.kappa * env.env_occupation if env.env_temperature > 0 else 0.0

    def _phi_chunks(self):
        for s in range(0, len(self.nodes), self.chunk):
            d = self.nodes[s:s + self.chunk]
            psi, phase = self.herm.cumulative_transform(d)
            yield self.weights[s:s + self.chunk], psi * np.conj(phase)

    def _white_lag(self, lag):
        # C[j] = int_0^{t_j} u(t_j + lag h + ... ) conj u(...) for cells j
        cells = self.herm.cells
        n = cells.shape[0]
        prod = (cells[lag:] * np.conj(cells[: n - lag])) @ self.herm.weights
        out = np.zeros(n - lag + 1, complex)
        np.cumsum(prod * self.grid.dt, out=out[1:])
        return out

    def white_matrix(self, rows, cols):
        out = np.zeros((len(rows), len(cols)), complex)
        if self.white == 0:
            return out
        r, c = np.meshgrid(rows, cols, indexing="ij")
        lag = r - c
        for d in np.unique(np.abs(lag)):
            cum = self._white_lag(int(d))
            pos = lag == d
            out[pos] = cum[c[pos]]
            neg = lag == -d
            if d and np.any(neg):
                out[neg] = np.conj(cum[r[neg]])
        return self.white * out

    def matrix(self, rows, cols):
        rows = np.asarray(rows, int)
        cols = np.asarray(cols, int)
        out = self.white_matrix(rows, cols)
        if self.spin:
            for w, phi in self._phi_chunks():
                out += (phi[:, rows].T * w) @ np.conj(phi[:, cols])
        return out

    def solve(self, mesh_index):
        n = self.grid.steps
        u = self.herm.u
        diag = np.zeros(n + 1)
        rate = np.zeros(n + 1)
        mesh = self.white_matrix(mesh_index, mesh_index)
        if self.white:
            lag0 = self._white_lag(0).real
            diag += self.white * lag0
            rate += self.white * np.abs(u) ** 2
        if self.spin:
            acc = np.zeros(n + 1, complex)
            for w, phi in self._phi_chunks():
                diag += w @ (np.abs(phi) ** 2)
                acc += w @ phi
                sub = phi[:, mesh_index]
                mesh += (sub.T * w) @ np.conj(sub)
            rate += 2 * np.real(u * np.conj(acc))
        mesh = 0.5 * (mesh + mesh.conj().T)
        diag[0] = 0.0
        mesh[0, :] = 0.0
        mesh[:, 0] = 0.0
        return NoiseCorrelation(mesh_index, mesh, diag, rate, self)


def solve_v(u, udot, model, env, grid, method="spectral"):
    """Noise correlation ``v(tau, t)`` of the cavity field.

    ``method="spectral"`` uses the decomposition over bath frequencies,
    ``v = int dd/2pi J n phi_d(tau) conj(phi_d(t))`` with
    ``phi_d(t) = int_0^t u(t - s) exp(-i d s) ds``, and returns the strided
    mesh plus the full diagonal. ``method="time"`` evaluates the double
    convolution with the thermal kernel directly on the full grid; it costs
    ``O(N^3)`` and is meant for short grids.

    The leakage bath is white, ``2 kappa n_e delta(t - s)``, and is evaluated
    in closed form as ``2 kappa n_e int_0^min(tau, t) u(tau - s) conj(u(t - s)) ds``.
    """
    ev = NoiseEvaluator(u, udot, model, env, grid)
    if method == "spectral":
        return ev.solve(grid.mesh_indices)
    if method == "time":
        return _solve_v_time(ev, model, env, grid)
    raise ParameterError(f"unknown method {method!r}")


def _solve_v_time(ev, model, env, grid):
    n, h = grid.steps, grid.dt
    u = ev.herm.u
    idx = np.arange(n + 1)
    v = ev.white_matrix(idx, idx)
    if env.spin_temperature > 0:
        gt = thermal_kernel_series(model, env, h, n)
        lag = idx[:, None] - idx[None, :]
        G = np.where(lag >= 0, gt[np.abs(lag)], np.conj(gt[np.abs(lag)]))
        W = np.where(lag >= 0, u[np.clip(lag, 0, None)], 0.0) * h
        W[:, 0] *= 0.5
        W[idx, idx] *= 0.5
        W[0, 0] = 0.0
        v = v + W @ G @ W.conj().T
    v = 0.5 * (v + v.conj().T)
    rate = np.full(n + 1, np.nan)
    return NoiseCorrelation(idx, v, np.real(np.diag(v)).copy(), rate, ev)


@dataclass
class Propagators:
    """Solved Green functions on a time grid."""

    grid: TimeGrid
    u: np.ndarray
    udot: np.ndarray
    y: np.ndarray
    ydot: np.ndarray
    v: NoiseCorrelation

    @property
    def times(self):
        return self.grid.times


def propagate(model, env, drive, grid, noise=True):
    """Solve ``u``, ``y`` and ``v`` for one scenario."""
    u, udot = solve_u(model, env, grid)
    y, ydot = solve_y(u, udot, drive, grid, env.cavity_frequency, with_derivative=True)
    if not noise:
        env = replace(env, spin_temperature=0.0, env_temperature=0.0)
    v = solve_v(u, udot, model, env, grid)
    return Propagators(grid, u, udot, y, ydot, v)
