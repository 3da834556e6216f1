"""Orlicz-Sobolev embedding experiments on irregular domains."""

__version__ = "0.1.0"

from .exceptions import (BracketOverflowError, ConfigurationError, CurveError, DomainError,
                         OrliczLabError, ParameterError, RegionError, ResolutionError)
from .phi import PhiSpec, PsiFunction, eval_phi, eval_psi
from .orlicz import (HedbergSplit, OrliczH, PowerOrlicz, c_n_alpha, conjugate_H, eval_F_inv,
                     eval_H, hedberg_sum_check, john_constants, sharpness_diagnostic)
from .domains import (CoreCurve, CuspPrototype, GridDomain, MushroomSpec, check_cigar,
                      make_ball, make_box, make_cusp, make_exhaustion, make_mushroom_domain)
from .fields import (ScalarField, best_shift_norm, gradient_magnitude, integral_average,
                     lp_norm, luxemburg_norm, modular)
from .potentials import (MaximalFunction, PointwiseConstantEstimator, RieszPotential,
                         maximal_function, pointwise_estimate_experiment, riesz_potential)
from .experiments import (PoincareConstantEstimator, exhaustion_experiment,
                          farfield_bump_counterexample, mushroom_counterexample,
                          poincare_ratio, poincare_sweep, sjohn_exponent_table,
                          test_functions)
from .report import ExperimentReport
