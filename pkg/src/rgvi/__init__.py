"""Reduced-gradient methods for composite variational inequalities and composite minimization."""

from .certify import CertificateAccumulator, evaluate_merit, merit
from .composite import Ball, Box, Indicator, L1Norm, ProductSet, Simplex, WholeSpace, ZeroTerm
from .estimators import ExtragradientVI, ProjectedGradientVI, ReducedGradientSolver
from .exceptions import (ConfigError, CutViolationError, InfeasiblePointError, InvalidInputError,
                         StationaryPointReached, StepFailureError, TheoremViolationError)
from .methods import (MethodConfig, RunTrace, run, run_baseline_extragradient,
                      run_baseline_gradient, run_dual, run_primal, run_projecting, run_switching,
                      run_uniform_monotone)
from .metric import Metric, prox_step
from .problems import ProblemInstance, check_instance, list_problems, make_instance
from .steps import StepConfig, essential_step, min_tensor_step, universal_stepsize

__version__ = "0.1.0"
