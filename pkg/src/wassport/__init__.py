"""Benchmark-anchored terminal-wealth optimisation inside a Wasserstein ball.

The pipeline: simulate a complete market model (``market``), turn the
terminal sample into coupling uniforms and a pricing weight (``estimate``),
and solve for the optimal terminal-wealth quantile function under a ball,
budget and copula constraint (``optimize``).  ``quantile``, ``risk`` and
``copulas`` hold the underlying calculus; ``analytic`` carries the
closed-form validation route for the constant-coefficient model;
``estimator`` wraps everything in a scikit-learn style transformer and
``cli`` drives experiments from config files.
"""

from .analytic import GbmClosedForm, q_cdf_v, xi_analytic
from .copulas import CopulaSpec, cdf, conditional, inv_conditional
from .errors import (DegenerateQueryError, DegenerateSampleError,
                     GridMismatchError, InfeasibleError, InvariantError,
                     ParameterError, SimulationError,
                     UnsupportedOperationError, WassportError)
from .estimate import (CoupledSample, XiFunction, benchmark_quantile,
                       build_coupled_sample, conditional_kde_cdf, kde_cdf,
                       xi_estimate)
from .estimator import WassersteinPortfolioOptimizer
from .market import (GbmParams, PathSet, SirCevParams, Strategy, simulate_gbm,
                     simulate_sir_cev)
from .optimize import (OptimResult, Problem, ell, glr,
                       optimal_terminal_sample, solve, solve_lambda1)
from .quantile import (QuantileGrid, epsilon_from_tolerances,
                       isotonic_projection, mean_bounds, std_bounds,
                       wasserstein)
from .risk import (DistortionWeight, gamma_alpha_beta, gamma_inverse_s,
                   make_weight, risk_measure)

__version__ = "0.1.0"
