"""Multipath propagation model toolkit for broadband power-line channels."""

__version__ = "0.1.0"

from .attenuation import AttenuationCoefficients, fit_attenuation  # noqa: E402
from .channel import ChannelRecord  # noqa: E402
from .decimation import DecimationConfig, FitReport, MpmParameterSet, decimate, fit_channel  # noqa: E402
from .errors import (  # noqa: E402
    ChecksumError,
    ConvergenceError,
    DataError,
    DegenerateSampleError,
    DomainError,
    GenerationError,
    GridError,
    MpmError,
    NumericalError,
    ParseError,
    SolverError,
)
from .generator import GeneratorConfig, sample_channel, sample_parameter_set  # noqa: E402
from .grid import FrequencyGrid, PathLattice, lattice_for, max_length, num_paths, path_lattice  # noqa: E402
from .synth import ChannelMetrics, average_gain, channel_metrics, delay_spread, evaluate, synthesize  # noqa: E402
from .wls import build_system, nrmse, rmse, solve_gains  # noqa: E402
