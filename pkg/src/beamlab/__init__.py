"""Short-time angular-impulse response of simply supported Rayleigh beams.

Three independent routes to the same response:

* :mod:`beamlab.modal` - the eigenfunction series,
* :mod:`beamlab.asym` - the short-time cubic and its supporting sums,
* :mod:`beamlab.fem` - Hermite finite elements with implicit time marching.

:mod:`beamlab.core` holds the shared beam and time-series types, and
:mod:`beamlab.cli` reproduces the figures and runs the acceptance suite.
"""

__version__ = "0.1.0"

from .core import BeamModel, TimeSeries, nondimensionalize, solve_dimensional_exponents  # noqa: E402
from .modal import ModalSeries, slope_response, displacement_response  # noqa: E402
from .asym import asymptotic_coefficients, evaluate_polynomial, tail_sum, convolve_moment  # noqa: E402
from .fem import assemble, integrate, impulse_initial_state, IntegratorConfig  # noqa: E402

__all__ = [
    "BeamModel", "IntegratorConfig", "ModalSeries", "TimeSeries", "assemble",
    "asymptotic_coefficients", "convolve_moment", "displacement_response",
    "evaluate_polynomial", "impulse_initial_state", "integrate", "nondimensionalize",
    "slope_response", "solve_dimensional_exponents", "tail_sum",
]
