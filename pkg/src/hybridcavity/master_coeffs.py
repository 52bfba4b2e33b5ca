"""Time-dependent coefficients of the exact cavity master equation.

With ``r(t) = udot / u`` the coefficients are

    i dw'(t) + gamma(t) = -r,
    f'(t)               = i ydot - i r y,
    gamma~(t)           = d/dt v(t, t) + 2 gamma(t) v(t, t),

all in the frame rotating at the cavity frequency.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

#: |u| below which a coefficient is flagged as singular
U_FLOOR = 1e-6
#: clamp applied to singular coefficients, 1/us
GAMMA_MAX = 1e6


@dataclass(frozen=True)
class CoefficientSeries:
    """Master-equation coefficients on a time grid.

    Attributes
    ----------
    times : ndarray
    shift : ndarray
        Renormalized cavity frequency relative to the bare cavity,
        ``w'_c(t) - w_c``, rad/us.
    gamma : ndarray
        Dissipation coefficient, 1/us.
    drive : ndarray
        Renormalized drive ``f'(t)``.
    fluctuation : ndarray
        Fluctuation coefficient ``gamma~(t)``, 1/us.
    singular : ndarray of bool
        Instants where ``|u| < U_FLOOR``; values there are clamped.
    cavity_frequency : float
        Bare cavity frequency, used by `absolute_frequency`.
    """

    times: np.ndarray
    shift: np.ndarray
    gamma: np.ndarray
    drive: np.ndarray
    fluctuation: np.ndarray
    singular: np.ndarray
    cavity_frequency: float = 0.0

    @property
    def absolute_frequency(self):
        return self.shift + self.cavity_frequency

    def as_columns(self):
        """Columns for tabular export."""
        return {
            "t": self.times,
            "gamma": self.gamma,
            "shift": self.shift,
            "re_drive": self.drive.real,
            "im_drive": self.drive.imag,
            "fluctuation": self.fluctuation,
            "singular": self.singular.astype(int),
        }


def coefficients(props, grid=None, cavity_frequency=0.0):
    """Coefficients from solved propagators.

    Parameters
    ----------
    props : Propagators
        Must carry the equation-of-motion derivatives ``udot`` and ``ydot``
        and the noise diagonal with its rate.
    grid : TimeGrid, optional
        Defaults to ``props.grid``.
    cavity_frequency : float
        Recorded so the absolute renormalized frequency can be recovered.
    """
    grid = props.grid if grid is None else grid
    u, udot = props.u, props.udot
    if len(u) != grid.steps + 1:
        raise ParameterError("propagators do not match the grid")
    singular = np.abs(u) < U_FLOOR
    safe = np.where(singular, 1.0, u)
    ratio = udot / safe
    gamma = np.clip(-ratio.real, -GAMMA_MAX, GAMMA_MAX)
    shift = np.clip(-ratio.imag, -GAMMA_MAX, GAMMA_MAX)
    drive = 1j * props.ydot - 1j * ratio * props.y
    vd, rate = props.v.diag, props.v.diag_rate
    fluct = np.clip(rate + 2 * gamma * vd, -GAMMA_MAX, GAMMA_MAX)
    bad = np.abs(drive) > GAMMA_MAX
    drive = np.where(bad, GAMMA_MAX * drive / np.where(bad, np.abs(drive), 1.0), drive)
    return CoefficientSeries(grid.times, shift, gamma, drive, fluct, singular,
                             float(cavity_frequency))


def sign_changes(x, until=None, times=None, floor=0.0):
    """Number of sign changes of ``x``, ignoring entries with ``|x| <= floor``."""
    x = np.asarray(x, float)
    if until is not None:
        x = x[np.asarray(times) <= until]
    s = np.sign(x[np.abs(x) > floor])
    return int(np.count_nonzero(s[1:] != s[:-1]))


@dataclass(frozen=True)
class RegimeReport:
    sign_changes: int
    early_sign_changes: int
    asymptote: float
    drift: float
    markovian: bool
    conclusive: bool


def classify_regime(coeffs, window=0.25, early=0.5, min_horizon=1.0, drift_tol=0.01):
    """Markovian versus non-Markovian behaviour of ``gamma(t)``.

    Parameters
    ----------
    coeffs : CoefficientSeries
    window : float
        Trailing fraction of the horizon used for the asymptote.
    early : float
        Span, in us, over which early sign changes are counted.
    min_horizon : float
        Shorter series are reported as inconclusive.
    drift_tol : float
        Maximum relative change of ``gamma`` between the two halves of the
        trailing window for a Markovian verdict.
    """
    t, g = coeffs.times, coeffs.gamma
    horizon = t[-1] - t[0]
    ok = ~coeffs.singular
    total = sign_changes(g[ok])
    first = sign_changes(g[ok], until=early, times=t[ok])
    tail = t >= t[-1] - window * horizon
    tg = g[tail & ok]
    long_enough = horizon >= min_horizon
    if len(tg) < 4:
        # sign changes alone already rule out Markovian decay
        return RegimeReport(total, first, float("nan"), float("nan"), False,
                            bool(long_enough and total > 0))
    asym = float(np.mean(tg))
    half = len(tg) // 2
    drift = abs(np.mean(tg[half:]) - np.mean(tg[:half])) / max(abs(asym), 1e-300)
    conclusive = long_enough
    markov = conclusive and total == 0 and drift < drift_tol
    return RegimeReport(total, first, asym, float(drift), bool(markov), bool(conclusive))


def reconstruct_u(coeffs):
    """Integrate ``du/dt = -(i dw' + gamma) u`` from ``u(0) = 1``.

    The exponent is accumulated with the cumulative Simpson rule, which is
    accurate wherever the coefficients are smooth on the grid scale.
    """
    from scipy.integrate import cumulative_simpson

    t = coeffs.times
    decay = cumulative_simpson(coeffs.gamma, x=t, initial=0.0)
    phase = cumulative_simpson(coeffs.shift, x=t, initial=0.0)
    return np.exp(-decay - 1j * phase)
