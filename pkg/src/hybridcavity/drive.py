"""Driving fields ``f(t) = eta(t) exp(-i omega_p t)`` injected into the cavity."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError

KINDS = ("rectangular", "phase_flip", "sinusoidal", "none")


@dataclass(frozen=True)
class DriveSpec:
    """Parametric drive pulse.

    Attributes
    ----------
    kind : str
        One of ``rectangular``, ``phase_flip``, ``sinusoidal`` or ``none``.
    amplitude : float
        Peak field strength ``eta_0`` in rad/us.
    carrier : float
        Absolute carrier angular frequency ``omega_p``; ``None`` means resonant
        with the cavity.
    t_on, t_off : float
        Switching times in us; the pulse acts on ``[t_on, t_off)``.
    t_flip : float
        Time of the pi phase jump for ``phase_flip``.
    modulation, phase : float
        Envelope ``sin(modulation * (t - t_on) + phase)`` for ``sinusoidal``.
    """

    kind: str = "none"
    amplitude: float = 0.0
    carrier: float | None = None
    t_on: float = 0.0
    t_off: float = math.inf
    t_flip: float | None = None
    modulation: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown drive kind {self.kind!r}")
        if self.amplitude < 0:
            raise ParameterError("drive amplitude must be non-negative")
        if self.t_on < 0 or self.t_off < self.t_on:
            raise ParameterError("need 0 <= t_on <= t_off")
        if self.kind == "phase_flip":
            if self.t_flip is None or not self.t_on <= self.t_flip <= self.t_off:
                raise ParameterError("phase_flip needs t_on <= t_flip <= t_off")

    def scaled(self, factor):
        """Copy with the amplitude multiplied by ``factor``."""
        return replace(self, amplitude=self.amplitude * factor)

    def detuning(self, cavity_frequency):
        if self.carrier is None:
            return 0.0
        return self.carrier - cavity_frequency

    def pieces(self, cavity_frequency=None):
        """Decomposition into ``(a, b, c, nu)``: ``c exp(-i nu t)`` on ``[a, b)``.

        The decomposition is in the frame rotating at ``cavity_frequency``.
        """
        if self.kind == "none" or self.amplitude == 0:
            return []
        if self.carrier is not None and cavity_frequency is None:
            raise ParameterError("cavity frequency needed for a detuned carrier")
        nu = self.detuning(cavity_frequency)
        eta, a, b = self.amplitude, self.t_on, self.t_off
        if self.kind == "rectangular":
            return [(a, b, complex(eta), nu)]
        if self.kind == "phase_flip":
            f = self.t_flip
            return [(a, f, complex(eta), nu), (f, b, complex(-eta), nu)]
        wm, ph = self.modulation, self.phase
        # eta sin(wm (t - a) + ph) = eta/2i [e^{i(...)} - e^{-i(...)}]
        c_plus = eta * np.exp(1j * (ph - wm * a)) / 2j
        c_minus = -eta * np.exp(-1j * (ph - wm * a)) / 2j
        return [(a, b, c_plus, nu - wm), (a, b, c_minus, nu + wm)]


def evaluate_drive(spec, t, cavity_frequency=None):
    """Rotating-frame drive ``eta(t) exp(-i (omega_p - omega_c) t)``."""
    t = np.asarray(t, float)
    out = np.zeros(t.shape, complex)
    for a, b, c, nu in spec.pieces(cavity_frequency):
        on = (t >= a) & (t < b)
        out[on] += c * np.exp(-1j * nu * t[on])
    return out if out.ndim else complex(out)


def calibrate_amplitude(response, target_photons, at=None):
    """Amplitude giving ``|y|^2 = target_photons`` by linearity.

    Parameters
    ----------
    response : ndarray
        Mean field ``y`` computed for unit amplitude.
    target_photons : float
        Desired intensity ``|y|^2``.
    at : int, optional
        Grid index where the target applies; the maximum of ``|y|`` is used
        when omitted.
    """
    mag = np.abs(response)
    ref = mag.max() if at is None else mag[at]
    if ref == 0:
        raise ParameterError("drive produces no field; cannot calibrate")
    return math.sqrt(target_photons) / ref
