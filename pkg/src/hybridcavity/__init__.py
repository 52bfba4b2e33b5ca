"""Exact non-Markovian dynamics of a driven cavity coupled to a broadened spin ensemble."""

__version__ = "0.1.0"

from .drive import DriveSpec, calibrate_amplitude, evaluate_drive
from .errors import (HorizonError, ParameterError, SamplingError, SingularityError,
                     TruncationError)
from .master_coeffs import CoefficientSeries, classify_regime, coefficients, reconstruct_u
from .observables import (CorrelationGrid, InitialCavityState, correlation_grid,
                          first_order_correlation, intensity, mean_field, quantum_correlation,
                          second_order_correlation)
from .propagator_freq import (LocalizedMode, find_localized_modes, response_function,
                              sample_spectrum, self_energy, u_from_spectrum)
from .propagator_time import (Propagators, TimeGrid, propagate, solve_u, solve_v, solve_y)
from .spectral import (EnvironmentSpec, Gaussian, HoleBurned, HoleSpec, Lorentzian, QGaussian,
                       bose_occupation, evaluate_density, memory_kernels)

__all__ = [
    "CoefficientSeries", "CorrelationGrid", "DriveSpec", "EnvironmentSpec", "Gaussian",
    "HoleBurned", "HoleSpec", "HorizonError", "InitialCavityState", "LocalizedMode",
    "Lorentzian", "ParameterError", "Propagators", "QGaussian", "SamplingError",
    "SingularityError", "TimeGrid", "TruncationError", "bose_occupation", "calibrate_amplitude",
    "classify_regime", "coefficients", "correlation_grid", "evaluate_density", "evaluate_drive",
    "find_localized_modes", "first_order_correlation", "intensity", "mean_field",
    "memory_kernels", "propagate", "quantum_correlation", "reconstruct_u", "response_function",
    "sample_spectrum", "second_order_correlation", "self_energy", "solve_u", "solve_v",
    "solve_y", "u_from_spectrum",
]
