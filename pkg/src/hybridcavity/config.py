"""Scenario files: sectioned key-value text with explicit units.

Example::

    [spectrum]
    kind = qgaussian
    center = 2690 MHz
    coupling = 8.6 MHz
    fwhm = 9.4 MHz
    q = 1.39

    [holes]
    offsets = -0.5 rabi, 0.5 rabi
    half_width = 0.02 rabi

    [environment]
    kappa = 0.4 MHz
    cavity_frequency = 2690 MHz
    spin_temperature = 25 mK
    env_temperature = 25 mK

    [drive]
    kind = rectangular
    target_photons = 1e6
    t_off = 600 ns

    [initial]
    kind = vacuum

    [grid]
    dt = 0.5 ns
    horizon = 2 us

    [outputs]
    requested = u, y, intensity

Linear frequencies (Hz, kHz, MHz, GHz) are converted to angular frequencies
in rad/us; ``rad/us`` is taken as is. The unit ``rabi`` expresses a frequency
in multiples of the vacuum Rabi splitting ``2 * coupling``.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .drive import DriveSpec
from .errors import ParameterError
from .observables import InitialCavityState
from .propagator_time import TimeGrid
from .spectral import EnvironmentSpec, Gaussian, HoleBurned, HoleSpec, Lorentzian, QGaussian

OUTPUTS = ("u", "y", "v_diag", "coefficients", "intensity", "g1_grid", "g2_grid",
           "quantum_correlation", "self_energy", "response", "localized_modes")
NEEDS_INITIAL = {"intensity", "g1_grid", "g2_grid", "quantum_correlation"}
NEEDS_SAMPLES = {"g1_grid", "g2_grid", "quantum_correlation"}

_FREQ = {"hz": 1e-6, "khz": 1e-3, "mhz": 1.0, "ghz": 1e3}
_TIME = {"ps": 1e-6, "ns": 1e-3, "us": 1.0, "µs": 1.0, "ms": 1e3, "s": 1e6}
_TEMP = {"uk": 1e-6, "mk": 1e-3, "k": 1.0}
_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


class ConfigError(ParameterError):
    """Invalid scenario file, with the offending line when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line else f"{path}: "
        elif line:
            where = f"line {line}: "
        super().__init__(where + message)


class RawConfig:
    """Parsed sections with the source line of every key."""

    def __init__(self, text, path=None):
        self.path = path
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
        parser.optionxform = str.lower
        try:
            parser.read_string(text, source=str(path or "<config>"))
        except configparser.MissingSectionHeaderError as exc:
            raise ConfigError("expected a [section] header", exc.lineno, path) from None
        except configparser.ParsingError as exc:
            line = exc.errors[0][0] if exc.errors else None
            raise ConfigError("cannot parse line", line, path) from None
        except configparser.Error as exc:
            line = getattr(exc, "lineno", None)
            raise ConfigError(exc.message.splitlines()[0], line, path) from None
        self.data = {s: dict(parser[s]) for s in parser.sections()}
        self.lines = _line_map(text)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", path=path) from None
        return cls(text, path)

    def has(self, section, key=None):
        if key is None:
            return section in self.data
        return key in self.data.get(section, {})

    def get(self, section, key, default=None):
        return self.data.get(section, {}).get(key, default)

    def set(self, section, key, value):
        self.data.setdefault(section, {})[key] = value

    def error(self, section, key, message):
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        return ConfigError(f"[{section}] {key}: {message}" if key else f"[{section}] {message}",
                           line, self.path)


def _line_map(text):
    out, section = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            out.setdefault((section, None), no)
            continue
        m = re.match(r"^([^=:;#\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            out.setdefault((section, m.group(1).strip().lower()), no)
    return out


# --------------------------------------------------------------------------
# quantities
# --------------------------------------------------------------------------

def split_quantity(text):
    m = _NUMBER.match(text)
    if not m:
        raise ParameterError(f"expected a number with a unit, got {text!r}")
    return float(m.group(1)), m.group(2)


def frequency(text, rabi=None, angular_only=False):
    """Angular frequency in rad/us from a string such as ``8.6 MHz``."""
    value, unit = split_quantity(text)
    u = unit.lower().replace(" ", "")
    if u in ("rad/us", "rad/µs"):
        return value
    if u in _FREQ and not angular_only:
        return 2 * math.pi * value * _FREQ[u]
    if u == "rabi":
        if rabi is None:
            raise ParameterError("unit 'rabi' needs a coupling to be defined")
        return value * rabi
    raise ParameterError(f"unknown or missing frequency unit in {text!r}")


def duration(text):
    value, unit = split_quantity(text)
    u = unit.lower()
    if u not in _TIME:
        raise ParameterError(f"unknown or missing time unit in {text!r}")
    return value * _TIME[u]


def temperature(text):
    value, unit = split_quantity(text)
    u = unit.lower()
    if u not in _TEMP:
        raise ParameterError(f"unknown or missing temperature unit in {text!r}")
    return value * _TEMP[u]


def number(text):
    value, unit = split_quantity(text)
    if unit:
        raise ParameterError(f"expected a plain number, got {text!r}")
    return value


def time_samples(text):
    """``start : stop : step`` with units, inclusive of ``stop``; or a list."""
    if ":" in text:
        parts = [p.strip() for p in text.split(":")]
        if len(parts) != 3:
            raise ParameterError("sample ranges are written start : stop : step")
        start, stop, step = (duration(p) for p in parts)
        if step <= 0 or stop < start:
            raise ParameterError("sample range needs step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(count)
    return np.array([duration(p) for p in text.split(",") if p.strip()])


def _listing(text):
    return [p.strip() for p in text.split(",") if p.strip()]


# --------------------------------------------------------------------------
# scenario
# --------------------------------------------------------------------------

@dataclass
class Scenario:
    model: object
    env: EnvironmentSpec
    drive: DriveSpec
    init: InitialCavityState | None
    grid: TimeGrid
    outputs: tuple
    target_photons: float | None = None
    t_samples: np.ndarray | None = None
    tau_samples: np.ndarray | None = None
    spectrum_span: float | None = None
    spectrum_points: int = 2001
    sweep: tuple | None = None
    resolved: dict = field(default_factory=dict)


class _Reader:
    """Typed access to a `RawConfig` with line-aware errors."""

    def __init__(self, raw):
        self.raw = raw

    def _convert(self, section, key, conv, default, required):
        text = self.raw.get(section, key)
        if text is None:
            if required:
                raise self.raw.error(section, None, f"missing required key '{key}'")
            return default
        try:
            return conv(text)
        except ParameterError as exc:
            raise self.raw.error(section, key, str(exc)) from None

    def freq(self, section, key, default=None, required=False, rabi=None):
        return self._convert(section, key, lambda s: frequency(s, rabi), default, required)

    def time(self, section, key, default=None, required=False):
        return self._convert(section, key, duration, default, required)

    def temp(self, section, key, default=None, required=False):
        return self._convert(section, key, temperature, default, required)

    def num(self, section, key, default=None, required=False):
        return self._convert(section, key, number, default, required)

    def text(self, section, key, default=None, required=False):
        return self._convert(section, key, lambda s: s.strip().lower(), default, required)

    def build(self, section, key, factory):
        """Call ``factory`` and attach parameter errors to ``section``."""
        try:
            return factory()
        except ParameterError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise self.raw.error(section, key, str(exc)) from None


def _model(r):
    kind = r.text("spectrum", "kind", required=True)
    center = r.freq("spectrum", "center", required=True)
    coupling = r.freq("spectrum", "coupling", required=True)
    if kind == "qgaussian":
        fwhm = r.freq("spectrum", "fwhm", required=True)
        q = r.num("spectrum", "q", 1.39)
        base = r.build("spectrum", None, lambda: QGaussian(center, coupling, fwhm, q))
        params = {"fwhm": fwhm, "q": q}
    elif kind == "gaussian":
        fwhm = r.freq("spectrum", "fwhm", required=True)
        base = r.build("spectrum", None, lambda: Gaussian(center, coupling, fwhm))
        params = {"fwhm": fwhm}
    elif kind == "lorentzian":
        hw = r.freq("spectrum", "halfwidth", required=True)
        base = r.build("spectrum", None, lambda: Lorentzian(center, coupling, hw))
        params = {"halfwidth": hw}
    else:
        raise r.raw.error("spectrum", "kind", f"unknown spectrum kind {kind!r}")
    resolved = {"kind": kind, "center": center, "coupling": coupling, **params}
    if not r.raw.has("holes"):
        return base, resolved
    rabi = 2 * coupling
    raw_offsets = r.raw.get("holes", "offsets")
    if raw_offsets is None:
        raise r.raw.error("holes", None, "missing required key 'offsets'")
    try:
        offsets = [frequency(p, rabi) for p in _listing(raw_offsets)]
    except ParameterError as exc:
        raise r.raw.error("holes", "offsets", str(exc)) from None
    width = r.freq("holes", "half_width", 0.02 * rabi, rabi=rabi)
    profile = r.text("holes", "profile", "rectangular")
    model = r.build("holes", None, lambda: HoleBurned(
        base, tuple(HoleSpec(o, width, profile) for o in offsets)))
    resolved["holes"] = {"offsets": offsets, "half_width": width, "profile": profile}
    return model, resolved


def _environment(r):
    kappa = r.freq("environment", "kappa", required=True)
    wc = r.freq("environment", "cavity_frequency", required=True)
    ts = r.temp("environment", "spin_temperature", 0.0)
    te = r.temp("environment", "env_temperature", 0.0)
    env = r.build("environment", None, lambda: EnvironmentSpec(kappa, wc, ts, te))
    return env, {"kappa": kappa, "cavity_frequency": wc, "spin_temperature": ts,
                 "env_temperature": te}


def _drive(r, env, coupling):
    if not r.raw.has("drive"):
        return DriveSpec(), None, {"kind": "none"}
    kind = r.text("drive", "kind", "rectangular")
    amp = r.freq("drive", "amplitude", None)
    target = r.num("drive", "target_photons", None)
    if kind != "none" and (amp is None) == (target is None):
        raise r.raw.error("drive", None, "give exactly one of 'amplitude' or 'target_photons'")
    carrier = r.freq("drive", "carrier", None)
    detuning = r.freq("drive", "detuning", None, rabi=2 * coupling)
    if carrier is not None and detuning is not None:
        raise r.raw.error("drive", "detuning", "give either 'carrier' or 'detuning'")
    if detuning is not None:
        carrier = env.cavity_frequency + detuning
    t_on = r.time("drive", "t_on", 0.0)
    t_off = r.time("drive", "t_off", math.inf)
    t_flip = r.time("drive", "t_flip", None)
    mod = r.freq("drive", "modulation", 2 * coupling, rabi=2 * coupling)
    phase = r.num("drive", "phase", 0.0)
    spec = r.build("drive", None, lambda: DriveSpec(
        kind, 1.0 if target is not None else (amp or 0.0), carrier, t_on, t_off, t_flip,
        mod, phase))
    resolved = {"kind": kind, "amplitude": amp, "target_photons": target, "carrier": carrier,
                "t_on": t_on, "t_off": t_off, "t_flip": t_flip, "modulation": mod,
                "phase": phase}
    return spec, target, resolved


def _initial(r):
    if not r.raw.has("initial"):
        return None, None
    kind = r.text("initial", "kind", "vacuum")
    if kind == "coherent":
        re_ = r.num("initial", "alpha_re", 0.0)
        im_ = r.num("initial", "alpha_im", 0.0)
        init = InitialCavityState.coherent(complex(re_, im_))
    elif kind == "thermal":
        init = r.build("initial", "occupation",
                       lambda: InitialCavityState.thermal(r.num("initial", "occupation", 0.0)))
    elif kind == "vacuum":
        init = InitialCavityState.vacuum()
    else:
        raise r.raw.error("initial", "kind", f"unknown initial state {kind!r}")
    return init, {"kind": init.kind, "alpha_re": init.mean.real, "alpha_im": init.mean.imag,
                  "photons": init.photons}


def _grid(r):
    dt = r.time("grid", "dt", 5e-4)
    horizon = r.time("grid", "horizon", 2.0)
    stride = r.num("grid", "v_stride", 4)
    if stride != int(stride) or stride < 1:
        raise r.raw.error("grid", "v_stride", "must be a positive integer")
    grid = r.build("grid", None, lambda: TimeGrid.from_horizon(dt, horizon, int(stride)))
    return grid, {"dt": dt, "horizon": horizon, "steps": grid.steps, "v_stride": int(stride)}


def _outputs(r):
    text = r.raw.get("outputs", "requested")
    if text is None:
        raise r.raw.error("outputs", None, "no outputs requested")
    outs = [o.lower() for o in _listing(text)]
    if not outs:
        raise r.raw.error("outputs", "requested", "no outputs requested")
    bad = [o for o in outs if o not in OUTPUTS]
    if bad:
        raise r.raw.error("outputs", "requested", f"unknown outputs {', '.join(bad)}")
    return tuple(dict.fromkeys(outs))


def _sweep(r):
    if not r.raw.has("sweep"):
        return None
    target = r.text("sweep", "parameter", required=True)
    if "." not in target:
        raise r.raw.error("sweep", "parameter", "write the parameter as section.key")
    text = r.raw.get("sweep", "values") or ""
    # '|' separates points whose values are themselves lists
    values = [v.strip() for v in text.split("|") if v.strip()] if "|" in text else _listing(text)
    if not values:
        raise r.raw.error("sweep", "values", "no sweep values given")
    section, key = target.split(".", 1)
    return section, key, tuple(values)


def load_scenario(raw, require_outputs=True):
    """Validate a `RawConfig` and build the solver inputs."""
    r = _Reader(raw)
    for section in ("spectrum", "environment"):
        if not raw.has(section):
            raise ConfigError(f"missing section [{section}]", path=raw.path)
    model, res_model = _model(r)
    env, res_env = _environment(r)
    drive, target, res_drive = _drive(r, env, res_model["coupling"])
    init, res_init = _initial(r)
    grid, res_grid = _grid(r)
    outputs = _outputs(r) if require_outputs else ()
    missing_init = sorted(NEEDS_INITIAL.intersection(outputs))
    if missing_init and init is None:
        raise r.raw.error("outputs", "requested",
                          f"{', '.join(missing_init)} need an [initial] section")
    t_s = tau_s = None
    if NEEDS_SAMPLES.intersection(outputs):
        if not raw.has("correlation", "t") or not raw.has("correlation", "tau"):
            raise r.raw.error("outputs", "requested",
                              "two-time outputs need [correlation] t and tau samples")
        t_s = r._convert("correlation", "t", time_samples, None, True)
        tau_s = r._convert("correlation", "tau", time_samples, None, True)
        for key, arr in (("t", t_s), ("tau", tau_s)):
            try:
                grid.index_of(arr)
            except (ParameterError, IndexError) as exc:
                raise r.raw.error("correlation", key, str(exc)) from None
        if t_s.max() + tau_s.max() > grid.horizon + 1e-9:
            raise r.raw.error("correlation", "tau", "t + tau exceeds the grid horizon")
    span = r.freq("spectrum_output", "span", None)
    points = r.num("spectrum_output", "points", 2001)
    resolved = {"units": {"frequency": "rad/us", "time": "us", "temperature": "K"},
                "spectrum": res_model, "environment": res_env, "drive": res_drive,
                "initial": res_init, "grid": res_grid, "outputs": list(outputs)}
    if t_s is not None:
        resolved["correlation"] = {"t": t_s.tolist(), "tau": tau_s.tolist()}
    return Scenario(model, env, drive, init, grid, outputs, target, t_s, tau_s, span,
                    int(points), _sweep(r), resolved)
