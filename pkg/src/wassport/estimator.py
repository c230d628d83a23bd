"""Scikit-learn style front door for the whole pipeline.

``WassersteinPortfolioOptimizer`` consumes a terminal Monte Carlo sample
(columns: benchmark wealth, stochastic discount factor), estimates the
benchmark quantile function and the pricing weight, solves for the optimal
quantile function, and then acts as a transformer: it maps terminal samples
to the optimal strategy's terminal wealth, state by state, through the
fitted coupling.

    model = WassersteinPortfolioOptimizer(eps=0.1, risk="tvar",
                                          risk_params={"alpha": 0.1},
                                          copula="coin",
                                          copula_params={"u_star": 0.25})
    model.fit(X)                # X: array (n, 2) of (x_T, sdf_T), or PathSet
    x_opt = model.transform(X)  # optimal terminal wealth per scenario

Fitted state lives in trailing-underscore attributes (``g_star_``,
``result_``, ``xi_``, ...); ``get_params``/``set_params``/``clone`` follow
the scikit-learn contract.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array

from . import copulas
from ._kernels import GaussianCdf, GaussianConditionalCdf, silverman_bandwidth
from .copulas import CopulaSpec
from .errors import ParameterError
from .estimate import (CLAMP, benchmark_quantile, build_coupled_sample,
                       xi_estimate)
from .market import PathSet
from .optimize import Problem, glr, optimal_terminal_sample, solve
from .risk import make_weight, risk_measure

__all__ = ["WassersteinPortfolioOptimizer", "as_terminal_sample"]


def as_terminal_sample(X) -> PathSet:
    """Validate input into a PathSet; accepts (n, 2) arrays or a PathSet."""
    if isinstance(X, PathSet):
        return X
    arr = check_array(X, ensure_min_samples=2, ensure_min_features=2)
    if arr.shape[1] != 2:
        raise ParameterError(
            "expected two columns (terminal wealth, terminal SDF), got "
            f"{arr.shape[1]}"
        )
    return PathSet(arr[:, 0], arr[:, 1], np.ones((arr.shape[0], 1)),
                   seed=0, n_steps=0, model="external")


class WassersteinPortfolioOptimizer(BaseEstimator, TransformerMixin):
    """Fit the optimal terminal-wealth map inside an eps-ball of a benchmark.

    Parameters
    ----------
    eps : float
        Radius of the ball around the benchmark quantile function.
    risk : str
        Weight family: "tvar", "ute", "alpha_beta" or "inverse_s".
    risk_params : dict
        Family parameters, e.g. {"alpha": 0.1}.
    copula : str
        "coin", "gumbel", "comonotonic", "independence" or "unspecified".
    copula_params : dict or None
        {"u_star": ...} for coin, {"theta": ...} for gumbel.
    grid_size : int
        Number of cells of the quantile grid.
    budget : float or None
        Cost cap; None uses the sample estimate mean(sdf_T * x_T).
    bandwidth_v : float or None
        Logit-scale bandwidth for the pricing-weight estimate; None uses
        the module default.
    """

    def __init__(self, eps: float = 0.1, risk: str = "tvar",
                 risk_params: Optional[dict] = None, copula: str = "coin",
                 copula_params: Optional[dict] = None, grid_size: int = 1000,
                 budget: Optional[float] = None,
                 bandwidth_v: Optional[float] = None):
        self.eps = eps
        self.risk = risk
        self.risk_params = risk_params
        self.copula = copula
        self.copula_params = copula_params
        self.grid_size = grid_size
        self.budget = budget
        self.bandwidth_v = bandwidth_v

    def _copula_spec(self) -> CopulaSpec:
        return CopulaSpec(self.copula, **(self.copula_params or {}))

    def fit(self, X, y=None):
        paths = as_terminal_sample(X)
        spec = self._copula_spec()
        f = benchmark_quantile(paths, self.grid_size)
        coupled = build_coupled_sample(paths, spec)
        xi = xi_estimate(paths, coupled, self.grid_size, self.bandwidth_v)
        gamma = make_weight(self.risk, self.risk_params or {}, f)
        x0 = (float(np.mean(paths.sdfT * paths.xT)) if self.budget is None
              else float(self.budget))
        problem = Problem(f=f, gamma=gamma, xi=xi, eps=self.eps, x0=x0,
                          copula=spec)
        result = solve(problem)

        self.paths_ = paths
        self.benchmark_quantile_ = f
        self.coupled_ = coupled
        self.xi_ = xi
        self.gamma_ = gamma
        self.problem_ = problem
        self.result_ = result
        self.g_star_ = result.g_star
        self.lambda1_ = result.lambda1
        self.lambda2_ = result.lambda2
        self.benchmark_risk_ = risk_measure(f, gamma)
        self._cdf_x = GaussianCdf(paths.xT, coupled.bandwidths["h_delta"])
        self._cdf_s = GaussianCdf(paths.sdfT, coupled.bandwidths["h_sdf"])
        self._cond = GaussianConditionalCdf(
            paths.xT, paths.sdfT,
            coupled.bandwidths["h_x"], coupled.bandwidths["h_sdf"])
        return self

    def _check_fitted(self):
        if not hasattr(self, "result_"):
            raise NotFittedError("call fit before transform/predict")

    def coupling_uniform(self, X=None) -> np.ndarray:
        """V for new scenarios under the fitted kernel estimates."""
        self._check_fitted()
        if X is None:
            return self.coupled_.v
        paths = as_terminal_sample(X)
        spec = self._copula_spec()
        if spec.kind == "unspecified":
            v = 1.0 - self._cdf_s(paths.sdfT)
        else:
            u_d = np.clip(self._cdf_x(paths.xT), CLAMP, 1.0 - CLAMP)
            u_t = np.clip(self._cond(paths.sdfT, paths.xT), CLAMP, 1.0 - CLAMP)
            v = copulas.inv_conditional(spec, 1.0 - u_t, u_d)
        return np.clip(v, CLAMP, 1.0 - CLAMP)

    def transform(self, X=None) -> np.ndarray:
        """Optimal terminal wealth g*(V) for the given scenarios."""
        self._check_fitted()
        if X is None:
            return optimal_terminal_sample(self.result_, self.coupled_)
        return self.g_star_.interp(self.coupling_uniform(X))

    def predict(self, X=None) -> np.ndarray:
        return self.transform(X)

    def gain_loss_ratio(self, x0_opt: Optional[float] = None,
                        x0_bench: Optional[float] = None) -> float:
        """GLR of the fitted optimal sample against the training benchmark."""
        self._check_fitted()
        x0 = self.problem_.x0
        return glr(self.transform(), self.paths_.xT,
                   x0 if x0_opt is None else x0_opt,
                   x0 if x0_bench is None else x0_bench)
