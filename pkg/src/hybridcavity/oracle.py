"""Discrete-mode reference dynamics for testing the continuum solvers.

A finite bath of modes ``delta_k`` with couplings ``V_k`` couples to the cavity
through a single-excitation generator ``M``:

    M[0, 0] = -kappa,   M[0, k] = M[k, 0] = -i V_k,   M[k, k] = -i delta_k.

All Green functions then follow from the eigendecomposition of ``M``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

MAX_MODES = 512


@dataclass(frozen=True)
class DiscreteBath:
    """Finite set of bath modes in the frame rotating at the cavity frequency.

    Attributes
    ----------
    detunings : ndarray
        Mode frequencies ``delta_k`` relative to the cavity, rad/us.
    couplings : ndarray
        Real couplings ``V_k``, rad/us.
    occupations : ndarray
        Thermal occupations ``n_k``.
    """

    detunings: np.ndarray
    couplings: np.ndarray
    occupations: np.ndarray

    @property
    def size(self):
        return len(self.detunings)

    @property
    def weight(self):
        return float(np.sum(self.couplings ** 2))


def discretize(model, env, modes, recurrence_time=1.2, halfwidth=None):
    """Sample ``model`` on a uniform lattice of ``modes`` cells.

    Mode ``k`` sits at the midpoint of its cell and carries the weight
    ``V_k^2 = J(delta_k) d_delta / 2pi``. The lattice spacing is
    ``2 pi / recurrence_time`` unless ``halfwidth`` fixes the span.
    """
    if not 1 <= modes <= MAX_MODES:
        raise ParameterError(f"oracle supports 1..{MAX_MODES} modes")
    if halfwidth is None:
        spacing = 2 * np.pi / recurrence_time
    else:
        spacing = 2 * halfwidth / modes
    x = spacing * (np.arange(modes) - 0.5 * (modes - 1))
    shift = model.center - env.cavity_frequency
    dens = model.profile_density(x)
    V = np.sqrt(dens * spacing / (2 * np.pi))
    occ = env.spin_occupation(x + shift)
    return DiscreteBath(x + shift, V, occ)


def single_mode(detuning, coupling, occupation=0.0):
    return DiscreteBath(np.array([float(detuning)]), np.array([float(coupling)]),
                        np.array([float(occupation)]))


class _Modes:
    """Eigendecomposition of the single-excitation generator."""

    def __init__(self, bath, kappa):
        k = bath.size
        M = np.zeros((k + 1, k + 1), complex)
        M[0, 0] = -kappa
        M[0, 1:] = -1j * bath.couplings
        M[1:, 0] = -1j * bath.couplings
        M[np.arange(1, k + 1), np.arange(1, k + 1)] = -1j * bath.detunings
        self.M = M
        self.lam, self.R = np.linalg.eig(M)
        self.Rinv = np.linalg.inv(self.R)

    def row(self, t):
        """``[exp(M t)]_{0, :}`` for times ``t``, shape (len(t), K + 1)."""
        e = np.exp(np.multiply.outer(t, self.lam))
        return (e * self.R[0]) @ self.Rinv

    def u_coefficients(self):
        return self.R[0] * self.Rinv[:, 0]


def _exp_integral(lam, a, b):
    """``int_a^b exp(lam s) ds`` elementwise, safe near ``lam = 0``."""
    lam = np.asarray(lam, complex)
    small = np.abs(lam * (b - a)) < 1e-8
    safe = np.where(small, 1.0, lam)
    out = (np.exp(lam * b) - np.exp(lam * a)) / safe
    return np.where(small, (b - a) * np.exp(lam * 0.5 * (a + b)), out)


def oracle_propagators(bath, env, drive, grid, with_noise=True):
    """Exact ``u``, ``y`` and ``v`` for a discrete bath.

    Parameters
    ----------
    bath : DiscreteBath
    env : EnvironmentSpec
    drive : DriveSpec
    grid : TimeGrid

    Returns
    -------
    dict
        ``t``, ``u``, ``y`` and, if requested, ``v`` (full two-time matrix on
        the grid) and ``G`` (row ``[exp(M t)]_{0,:}`` for every grid time).
    """
    modes = _Modes(bath, env.kappa)
    t = grid.times
    G = modes.row(t)
    u = G[:, 0]
    c = modes.u_coefficients()
    lam = modes.lam

    y = np.zeros(len(t), complex)
    for a, b, amp, nu in drive.pieces(env.cavity_frequency):
        # y(t) = -i amp sum_j c_j e^{lam_j t} int_a^{min(t,b)} e^{-(lam_j + i nu) s} ds
        for i, ti in enumerate(t):
            if ti <= a:
                continue
            hi = min(ti, b)
            ints = _exp_integral(-(lam + 1j * nu), a, hi)
            y[i] += -1j * amp * np.sum(c * np.exp(lam * ti) * ints)

    out = {"t": t, "u": u, "y": y, "G": G}
    if with_noise:
        occ = bath.occupations
        v = (G[:, 1:] * occ) @ G[:, 1:].conj().T
        if env.env_temperature > 0 and env.kappa > 0:
            v = v + 2 * env.kappa * env.env_occupation * _white_noise(modes, t)
        out["v"] = v
    return out


def _white_noise(modes, t):
    """``int_0^min(a,b) u(a - s) conj(u(b - s)) ds`` for all grid pairs."""
    c = modes.u_coefficients()
    lam = modes.lam
    S = lam[:, None] + np.conj(lam)[None, :]
    A = np.exp(np.multiply.outer(t, lam)) * c
    # for a >= b: A(a) S^-1 A(b)^H - sum_j c_j e^{lam_j (a-b)} sum_l conj(c_l) / S_jl
    full = A @ (1.0 / S) @ A.conj().T
    lag_coef = c * ((1.0 / S) @ np.conj(c))
    n = len(t)
    lag = np.subtract.outer(np.arange(n), np.arange(n))
    tail = (np.exp(np.multiply.outer(t, lam)) @ lag_coef)[np.abs(lag)]
    lower = full - tail
    out = np.where(lag >= 0, lower, np.conj(lower.T))
    return out


# --------------------------------------------------------------------------
# truncated Fock-space reference for quartic moments
# --------------------------------------------------------------------------

def _ladder(n):
    return np.diag(np.sqrt(np.arange(1, n)), 1)


def fock_quartic_moments(bath, drive_amplitude, t_on, t_off, times, pairs, cutoff=6,
                         cavity_cutoff=None):
    """Brute-force two-time moments for a closed cavity plus discrete bath.

    The cavity starts in vacuum, the modes in thermal states with the bath
    occupations, and a resonant rectangular drive acts on ``[t_on, t_off)``.
    Heisenberg operators are built as matrices on a truncated Fock space.

    Returns
    -------
    dict
        ``n[i]`` = <a^dag a>(times[i]) and, for each ``(i, j)`` in ``pairs``,
        ``g1[(i, j)]`` = <a^dag(t_i) a(t_j)> and
        ``quartic[(i, j)]`` = <a^dag(t_i) a^dag(t_j) a(t_j) a(t_i)>.
    """
    from scipy.linalg import expm

    k = bath.size
    nc = cavity_cutoff or cutoff
    dims = [nc] + [cutoff] * k
    if np.prod(dims) > 4096:
        raise ParameterError("Fock space too large for the dense reference")

    def embed(op, slot):
        mats = [np.eye(d) for d in dims]
        mats[slot] = op
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out

    a = embed(_ladder(nc), 0)
    bs = [embed(_ladder(cutoff), i + 1) for i in range(k)]
    H0 = sum(d * b.conj().T @ b for d, b in zip(bath.detunings, bs))
    H0 = H0 + sum(v * (a.conj().T @ b + b.conj().T @ a) for v, b in zip(bath.couplings, bs))
    Hd = drive_amplitude * (a + a.conj().T)

    rho = np.array([[1.0]])
    for i, d in enumerate(dims):
        if i == 0:
            p = np.zeros(d)
            p[0] = 1.0
        else:
            nbar = bath.occupations[i - 1]
            p = (nbar / (1 + nbar)) ** np.arange(d) if nbar > 0 else np.eye(d)[0]
            p = p / p.sum()
        rho = np.kron(rho, np.diag(p))

    def evolution(t):
        # piecewise-constant Hamiltonian
        edges = sorted({0.0, min(max(t_on, 0.0), t), min(t_off, t), t})
        U = np.eye(H0.shape[0], dtype=complex)
        for lo, hi in zip(edges, edges[1:]):
            if hi <= lo:
                continue
            mid = 0.5 * (lo + hi)
            H = H0 + (Hd if t_on <= mid < t_off else 0)
            U = expm(-1j * H * (hi - lo)) @ U
        return U

    heis = []
    for t in times:
        U = evolution(t)
        heis.append(U.conj().T @ a @ U)
    nvals = np.array([np.real(np.trace(rho @ A.conj().T @ A)) for A in heis])
    g1, quartic = {}, {}
    for i, j in pairs:
        Ai, Aj = heis[i], heis[j]
        g1[(i, j)] = np.trace(rho @ Ai.conj().T @ Aj)
        quartic[(i, j)] = np.real(np.trace(rho @ Ai.conj().T @ Aj.conj().T @ Aj @ Ai))
    return {"n": nvals, "g1": g1, "quartic": quartic}
