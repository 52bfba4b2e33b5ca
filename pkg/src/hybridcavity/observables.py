"""Cavity observables built from the propagators.

For a Gaussian initial cavity state with mean ``a0`` and photon number ``N0``
the field stays Gaussian, and all moments follow from

    m(t)      = u(t) a0 + y(t),
    C(t, t')  = <da^dag(t) da(t')> = conj(u(t)) u(t') (N0 - |a0|^2) + v(t', t),

where ``da = a - <a>``. Fourth moments follow from Wick's theorem since the
anomalous correlations ``<da da>`` vanish for this number-conserving model.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

#: products of intensities below this are treated as zero in normalizations
INTENSITY_FLOOR = 1e-300


@dataclass(frozen=True)
class InitialCavityState:
    """Gaussian initial cavity state.

    Parameters
    ----------
    kind : str
        ``vacuum``, ``coherent`` or ``thermal``.
    alpha : complex
        Coherent amplitude.
    occupation : float
        Thermal photon number.
    """

    kind: str = "vacuum"
    alpha: complex = 0.0
    occupation: float = 0.0

    def __post_init__(self):
        if self.kind not in ("vacuum", "coherent", "thermal"):
            raise ParameterError(f"unknown initial state {self.kind!r}")
        if self.occupation < 0:
            raise ParameterError("thermal occupation must be non-negative")

    @classmethod
    def vacuum(cls):
        return cls("vacuum")

    @classmethod
    def coherent(cls, alpha):
        return cls("coherent", alpha=complex(alpha))

    @classmethod
    def thermal(cls, occupation):
        return cls("thermal", occupation=float(occupation))

    @property
    def mean(self):
        return complex(self.alpha) if self.kind == "coherent" else 0j

    @property
    def photons(self):
        if self.kind == "coherent":
            return abs(self.alpha) ** 2
        if self.kind == "thermal":
            return self.occupation
        return 0.0

    @property
    def excess(self):
        """``N0 - |a0|^2``, the initial photon number beyond the coherent part."""
        return self.photons - abs(self.mean) ** 2


def mean_field(props, init):
    """``<a(t)> = u(t) a0 + y(t)`` in the rotating frame."""
    return props.u * init.mean + props.y


@dataclass(frozen=True)
class Intensity:
    total: np.ndarray
    semiclassical: np.ndarray
    fluctuation: np.ndarray


def intensity(props, init):
    """Photon number split into semiclassical and fluctuation parts.

    ``n = |<a>|^2 + |u|^2 (N0 - |a0|^2) + v(t, t)``; the semiclassical part is
    ``|<a>|^2`` and the remainder is the quantum fluctuation.
    """
    m = mean_field(props, init)
    n_sc = np.abs(m) ** 2
    fluct = np.abs(props.u) ** 2 * init.excess + props.v.diag
    return Intensity(n_sc + fluct, n_sc, fluct)


@dataclass
class CorrelationGrid:
    """Two-time observables on ``t`` by ``tau`` samples.

    Attributes
    ----------
    t, tau : ndarray
        First-time and delay samples, us.
    first_order : ndarray
        ``<a^dag(t) a(t + tau)>``.
    g1 : numpy.ma.MaskedArray
        Normalized first-order coherence; masked where an intensity vanishes.
    quantum : ndarray
        ``<a^dag(t) a(t + tau)> - <a^dag(t)><a(t + tau)>``.
    g2 : numpy.ma.MaskedArray or None
        Normalized second-order coherence.
    """

    t: np.ndarray
    tau: np.ndarray
    first_order: np.ndarray
    g1: np.ma.MaskedArray
    quantum: np.ndarray
    g2: np.ma.MaskedArray | None = None

    def long_form(self, name):
        """Rows ``(t, tau, re, im)`` for the named matrix; masked rows give ``nan``."""
        data = getattr(self, name)
        filled = np.ma.filled(np.ma.asarray(data).astype(complex), np.nan + 0j)
        tt, dd = np.meshgrid(self.t, self.tau, indexing="ij")
        return np.column_stack([tt.ravel(), dd.ravel(), filled.real.ravel(),
                                filled.imag.ravel()])


def _indices(props, t, tau):
    grid = props.grid
    ti = np.atleast_1d(grid.index_of(t))
    di = np.atleast_1d(grid.index_of(tau))
    later = ti[:, None] + di[None, :]
    if later.max() > grid.steps:
        from .errors import HorizonError
        raise HorizonError("t + tau exceeds the solved horizon")
    return ti, di, later


def _moments(props, init, t, tau):
    """Means, intensities and the connected correlation ``C(t, t + tau)``."""
    ti, di, later = _indices(props, t, tau)
    rows, inv = np.unique(later, return_inverse=True)
    v = props.v.at(rows, ti)
    v_later = v[inv.reshape(later.shape), np.arange(len(ti))[:, None]]
    u = props.u
    conn = np.conj(u[ti])[:, None] * u[later] * init.excess + v_later
    m = mean_field(props, init)
    n = intensity(props, init).total
    return ti, di, later, m, n, conn


def _normalized(num, den):
    ok = den > INTENSITY_FLOOR
    out = np.where(ok, num / np.where(ok, den, 1.0), 0.0)
    return np.ma.masked_array(out, mask=~ok)


def first_order_correlation(props, init, t, tau):
    """``<a^dag(t) a(t + tau)>`` and its normalized coherence.

    Parameters
    ----------
    props : Propagators
    init : InitialCavityState
    t, tau : array_like
        Grid-aligned first times and delays, us.

    Returns
    -------
    CorrelationGrid
        With ``g2`` left unset.
    """
    ti, di, later, m, n, conn = _moments(props, init, t, tau)
    mm = np.conj(m[ti])[:, None] * m[later]
    g = mm + conn
    g1 = _normalized(g, np.sqrt(np.clip(n[ti][:, None] * n[later], 0, None)))
    # equal times are exactly coherent with themselves
    zero = di == 0
    g1.data[:, zero] = 1.0
    return CorrelationGrid(ti * props.grid.dt, di * props.grid.dt, g, g1, conn)


def quantum_correlation(props, init, t, tau):
    """Fluctuation part of the two-time correlation, ``C(t, t + tau)``."""
    return _moments(props, init, t, tau)[-1]


def second_order_correlation(props, init, t, tau):
    """Normalized ``g2(t, t + tau)`` from the Gaussian moment expansion.

    ``<a^dag(t) a^dag(t') a(t') a(t)> = n n' + |C|^2 + 2 Re[m conj(m') C]``
    with ``C = C(t, t')``. Points where ``n(t) n(t')`` vanishes are masked.
    """
    ti, di, later, m, n, conn = _moments(props, init, t, tau)
    m1 = m[ti][:, None]
    m2 = m[later]
    n1 = n[ti][:, None]
    n2 = n[later]
    num = n1 * n2 + np.abs(conn) ** 2 + 2 * np.real(m1 * np.conj(m2) * conn)
    return _normalized(num, n1 * n2)


def correlation_grid(props, init, t, tau):
    """All two-time observables on one sample set."""
    grid = first_order_correlation(props, init, t, tau)
    grid.g2 = second_order_correlation(props, init, t, tau)
    return grid
