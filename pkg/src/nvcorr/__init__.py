"""NV-center correlation spectroscopy with RF control of nuclear spin noise."""

from .core import (DEFAULT_CONSTANTS, EnsembleAngles, Magnetization, NvSample,
                   PhysicalConstants, Protocol, RfDrive, SequenceTiming, larmor_frequency,
                   resonant_tau)
from .errors import (ConditioningError, ConfigError, DomainError, NvCorrError,
                     SingularDenominatorError, UnsupportedModeError)
from .phases import PhaseSet, phases_analytic, phases_quadrature, phases_resonant
from .readout import (ensemble_average_closed, ensemble_average_montecarlo,
                      ensemble_average_quadrature, misalignment_map, sigma_z_exact,
                      sigma_z_small_angle, special_case)

__version__ = "0.1.0"
