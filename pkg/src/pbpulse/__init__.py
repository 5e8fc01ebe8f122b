"""Passband composite pulses from nested broadband and narrowband sequences."""

from .errors import ConsistencyError, ConvergenceError, InvalidInputError
from .profiles import (ProfileMetrics, ProfileScan, analytic_bb, analytic_nb, analytic_pb,
                       fidelity_bands, hwhm_asymptotic, hwhm_exact, scan_analytic,
                       scan_matrix, steepness_asymptotic, steepness_exact)
from .sequences import (Kind, PhaseList, broadband_phases, canonicalize, narrowband_phases,
                        nest_bn, nest_nb, parse_selector, wimperis_pb2)
from .series import SeriesElement, series_propagator
from .solver import ConditionReport, SolverConfig, check_pb_conditions, solve_pb
from .su2 import (Phase, SU2Propagator, compose_sequence, phased, resonant_propagator,
                  transition_probability)
from .timesim import (EvolutionTrace, PulseShape, PulseTrainSpec, evolution_trace_pair,
                      integrate, overlap_scan)

__version__ = "0.1.0"
