"""Bounded positive solutions of  -Lap u = p v^alpha,  -Lap v = q u^beta  on |x| > A
with alpha + beta < 1, tending to a prescribed constant c at infinity."""

from .coeff import CoefficientField, eval_coeff, majorant_field, parse_field, radial_majorant
from .errors import (ConfigError, ExprSyntaxError, LefError, LinearSolveFailure,
                     MaxPrincipleViolation, NegativeCoefficient, NoConvergence, NonIntegrable,
                     ThresholdBracketError, VerificationFailure, WindowTooFar)
from .problem import ProblemSpec
from .quad import fubini_identity_check, ip_tail, phi, psi, weighted_log_integral
from .threshold import ThresholdResult, compute_threshold
from .radial import (LogGrid, LogGridSolution, apply_F, k_membership_margin, residual_radial,
                     solve_radial, to_physical)
from .annulus import (AnnulusGrid, build_annulus_grid, monotone_iterate, poisson_solve,
                      radial_supersolution, residual_annulus)
from .asympt import DecayReport, bound_check, decay_fit, limit_check
from .config import RunConfig, load_config, parse_config
from .cli import run_command

__version__ = "0.1.0"
