"""Constrained quantile-function solver and derived performance metrics.

The problem: among non-decreasing grid functions g, minimise the distortion
functional R(g) = -integral g gamma subject to

    wasserstein(g, f) <= eps        (always binds at the optimum)
    integral g xi     <= x0         (binds iff its multiplier is positive),

where f is the benchmark quantile function and xi the pricing weight.  The
optimiser has the closed structure

    g* = isotonic_projection( f + (gamma - lambda2 xi) / (2 lambda1) ),

so the solver is two nested scalar searches, exploiting monotonicity:

* inner: the ball distance of the projection is non-increasing in lambda1,
  so lambda1 is found by log-bisection until the distance matches eps to
  relative tolerance 1e-6;
* outer: the cost of the inner solution is non-increasing in lambda2.  If
  the cost at lambda2 = 0 already satisfies the budget, that is the answer;
  otherwise lambda2 is bisected until the budget binds to relative
  tolerance 1e-6.

The optimal terminal-wealth sample is g*(V) with V from the coupled sample,
and the gain-loss ratio compares mean positive and negative excess returns
against the benchmark's expected return.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .copulas import CopulaSpec
from .errors import (DegenerateSampleError, GridMismatchError, InfeasibleError,
                     InvariantError, ParameterError)
from .estimate import CoupledSample, XiFunction
from .fileio import write_csv
from .quantile import QuantileGrid, _pava
from .risk import DistortionWeight, risk_measure

__all__ = ["Problem", "OptimResult", "ell", "solve_lambda1", "solve",
           "optimal_terminal_sample", "glr"]

WASS_RTOL = 1e-6
COST_RTOL = 1e-6
MAX_ITER = 200
L1_LO, L1_HI = 1e-10, 1e10
L2_HI = 1e10


@dataclass(frozen=True)
class Problem:
    """Aligned inputs of one solver instance."""

    f: QuantileGrid
    gamma: DistortionWeight
    xi: XiFunction
    eps: float
    x0: float
    copula: Optional[CopulaSpec] = None

    def __post_init__(self):
        if not self.f.monotone:
            raise ParameterError("benchmark quantile grid must be monotone")
        if not (self.f.m == self.gamma.m == self.xi.m):
            raise GridMismatchError(
                f"grids differ: f={self.f.m}, gamma={self.gamma.m}, "
                f"xi={self.xi.m}"
            )
        if not (np.isfinite(self.eps) and self.eps > 0.0):
            raise ParameterError("eps must be strictly positive")
        if not self.x0 > 0.0:
            raise ParameterError("budget must be positive")
        if self.copula is not None and self.copula.kind == "comonotonic":
            mass = self.xi.total_mass()
            if mass <= 0.0 or np.max(np.abs(
                    self.gamma.values - self.xi.values / mass)) <= 1e-8:
                raise ParameterError(
                    "comonotonic coupling with gamma proportional to xi "
                    "makes the objective the negative of the cost"
                )

    @property
    def m(self) -> int:
        return self.f.m

    def cost(self, values: np.ndarray) -> float:
        return float(np.mean(values * self.xi.values))


@dataclass(frozen=True)
class OptimResult:
    g_star: QuantileGrid
    lambda1: float
    lambda2: float
    wasserstein_attained: float
    cost_attained: float
    risk_attained: float
    budget_binding: bool
    iterations: int
    benchmark: QuantileGrid = field(repr=False)

    def summary(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "wasserstein": self.wasserstein_attained,
            "cost": self.cost_attained,
            "risk": self.risk_attained,
            "budget_binding": self.budget_binding,
            "iterations": self.iterations,
        }

    def to_csv(self, path) -> None:
        write_csv(path, ["u", "g_star", "f_inv"],
                  [self.g_star.u, self.g_star.values, self.benchmark.values])


def ell(problem: Problem, lambda1: float, lambda2: float) -> QuantileGrid:
    """f + (gamma - lambda2 xi)/(2 lambda1), pointwise; not monotone."""
    if not lambda1 > 0.0:
        raise ParameterError("lambda1 must be strictly positive")
    if lambda2 < 0.0:
        raise ParameterError("lambda2 must be non-negative")
    vals = problem.f.values + (problem.gamma.values
                               - lambda2 * problem.xi.values) / (2.0 * lambda1)
    return QuantileGrid(vals)


def _projected(problem: Problem, lambda1: float, lambda2: float) -> np.ndarray:
    vals = problem.f.values + (problem.gamma.values
                               - lambda2 * problem.xi.values) / (2.0 * lambda1)
    return _pava(vals)


def _distance(problem: Problem, values: np.ndarray) -> float:
    d = values - problem.f.values
    return float(np.sqrt(np.mean(d * d)))


def solve_lambda1(problem: Problem, lambda2: float):
    """Find lambda1 with wasserstein(proj(ell), f) = eps; returns (l1, g)."""
    eps = problem.eps
    tol = WASS_RTOL * eps

    lo, hi = L1_LO, L1_HI
    d_lo = _distance(problem, _projected(problem, lo, lambda2))
    d_hi = _distance(problem, _projected(problem, hi, lambda2))
    if d_lo < eps - tol or d_hi > eps + tol:
        raise InfeasibleError(
            f"no lambda1 in [{L1_LO:g}, {L1_HI:g}] attains the radius "
            f"{eps:g} (distance range [{d_hi:g}, {d_lo:g}])"
        )
    iters = 0
    g = None
    llo, lhi = np.log(lo), np.log(hi)
    for _ in range(MAX_ITER):
        iters += 1
        mid = np.exp(0.5 * (llo + lhi))
        g = _projected(problem, mid, lambda2)
        d = _distance(problem, g)
        if abs(d - eps) <= tol:
            return mid, g, iters
        if d > eps:
            llo = np.log(mid)
        else:
            lhi = np.log(mid)
    raise InfeasibleError(
        f"lambda1 bisection did not reach |d - eps| <= {tol:g} "
        f"within {MAX_ITER} iterations"
    )


def solve(problem: Problem) -> OptimResult:
    """Nested bisection over (lambda1, lambda2); returns the grid optimum."""
    x0 = problem.x0
    l1, g, iters = solve_lambda1(problem, 0.0)
    cost = problem.cost(g)
    l2 = 0.0

    if cost > x0 * (1.0 + COST_RTOL):
        lo, c_lo = 0.0, cost
        hi = 1.0
        while True:
            l1, g, it = solve_lambda1(problem, hi)
            iters += it
            c_hi = problem.cost(g)
            if c_hi <= x0:
                break
            lo, c_lo = hi, c_hi
            hi *= 10.0
            if hi > L2_HI:
                raise InfeasibleError(
                    f"budget {x0:g} unattainable: cost still {c_hi:g} at "
                    f"lambda2 = {hi / 10.0:g}"
                )
        l2, cost = hi, c_hi
        for _ in range(MAX_ITER):
            if abs(cost - x0) <= COST_RTOL * x0:
                break
            mid = 0.5 * (lo + hi)
            l1, g, it = solve_lambda1(problem, mid)
            iters += it
            cost = problem.cost(g)
            if cost > x0:
                lo = mid
            else:
                hi = mid
            l2 = mid
        if abs(cost - x0) > COST_RTOL * x0:
            raise InfeasibleError(
                f"lambda2 bisection did not bind the budget within "
                f"{MAX_ITER} iterations (cost {cost:g} vs {x0:g})"
            )

    g_star = QuantileGrid(g, monotone=True)
    attained = _distance(problem, g)
    risk = risk_measure(g_star, problem.gamma)
    result = OptimResult(
        g_star=g_star,
        lambda1=float(l1),
        lambda2=float(l2),
        wasserstein_attained=attained,
        cost_attained=cost,
        risk_attained=risk,
        budget_binding=l2 > 0.0,
        iterations=iters,
        benchmark=problem.f,
    )
    _check_result(problem, result)
    return result


def _check_result(problem: Problem, res: OptimResult) -> None:
    eps, x0 = problem.eps, problem.x0
    if abs(res.wasserstein_attained - eps) > WASS_RTOL * eps:
        raise InvariantError("ball constraint not binding at the optimum")
    if res.cost_attained > x0 * (1.0 + COST_RTOL):
        raise InvariantError("budget exceeded at the optimum")
    if res.budget_binding and abs(res.cost_attained - x0) > COST_RTOL * x0:
        raise InvariantError("positive multiplier without a binding budget")
    bench_risk = risk_measure(problem.f, problem.gamma)
    if res.risk_attained > bench_risk + 1e-9:
        raise InvariantError(
            f"optimum {res.risk_attained:.12g} worse than the benchmark "
            f"{bench_risk:.12g}"
        )


def optimal_terminal_sample(result: OptimResult,
                            sample: CoupledSample) -> np.ndarray:
    """Terminal wealth scenarios g*(v_i) by monotone interpolation."""
    return result.g_star.interp(sample.v)


def glr(optimal: np.ndarray, benchmark: np.ndarray,
        x0_opt: float, x0_bench: float) -> float:
    """Gain-loss ratio of returns against the benchmark's expected return.

        GLR = E[(X*/x0_opt - c)_+] / E[(c - X*/x0_opt)_+],
        c = mean(X_bench/x0_bench).
    """
    optimal = np.asarray(optimal, dtype=float)
    benchmark = np.asarray(benchmark, dtype=float)
    if optimal.size == 0 or benchmark.size == 0:
        raise DegenerateSampleError("empty sample")
    if not (x0_opt > 0.0 and x0_bench > 0.0):
        raise ParameterError("initial wealth must be positive")
    cutoff = np.mean(benchmark / x0_bench)
    excess = optimal / x0_opt - cutoff
    losses = np.mean(np.maximum(-excess, 0.0))
    if losses == 0.0:
        raise DegenerateSampleError("no mass below the benchmark mean return")
    return float(np.mean(np.maximum(excess, 0.0)) / losses)
