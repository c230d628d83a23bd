"""Closed-form reference quantities for the constant-coefficient market.

For the constant-coefficient model with a constant-proportion benchmark, the
joint law of (benchmark rank, conditional discount-factor rank) is bivariate
Gaussian in two unit directions:

    benchmark rank      U = Phi(vartheta' W_T / sqrt(T)),
    conditional rank    U~ = Phi(theta' W_T / sqrt(T)),

    vartheta = eta / sqrt(eta' rho eta),
    theta    = (-lam + (lam' rho eta / eta' rho eta) eta) / D,
    D        = sqrt(lam' rho lam - (lam' rho eta)^2 / eta' rho eta),

which are orthonormal under rho (theta' rho theta = vartheta' rho vartheta
= 1, eta' rho theta = 0).  Under the discounted measure both ranks stay
independent with tilted laws Phi(Phi^{-1}(.) + c), c1 = theta' rho lam
sqrt(T) for the conditional rank and c2 = vartheta' rho lam sqrt(T) for the
benchmark rank.  The coupling uniform V then has discounted CDF

    Q(V <= v) = integral_0^1 Phi( Phi^{-1}(C(v|u)) - c1 ) dG(u),
    G(u) = Phi( Phi^{-1}(u) + c2 ),

and the pricing weight is xi(u) = exp(-rT) d/dv Q(V <= v) at v = u.  (The
inner normal is written here through C(v|u) directly; expanding the
survival form 1 - Phi(Phi^{-1}(1 - C) + c1) gives the same function and
keeps Q(V<=0) = 0 and Q(V<=1) = 1.)

The integral is evaluated by adaptive Simpson quadrature after substituting
w = G(u) (which bounds the integrand by 1), split at the images of the
conditional copula's u-discontinuities, with endpoint offsets of 1e-9 and
absolute tolerance 1e-8.  The derivative is taken by grid-matched central
differences with half-cell step, so the midpoint integral of xi telescopes
to exp(-rT) exactly.

Without a copula constraint the coupling is v = 1 - F(sdf), so xi is the
flipped discount-factor quantile, available in closed form for the
lognormal discount factor.

These formulas serve as an independent validation route for the
sample-based pipeline; nothing here touches Monte Carlo draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .copulas import CopulaSpec, conditional
from .errors import ParameterError, UnsupportedOperationError
from .estimate import XiFunction
from .market import GbmParams, Strategy
from .quantile import QuantileGrid

__all__ = ["GbmClosedForm", "q_cdf_v", "xi_analytic"]

_QUAD_TOL = 1e-8
_QUAD_EDGE = 1e-9
_QUAD_DEPTH = 48


@dataclass(frozen=True)
class GbmClosedForm:
    lam: np.ndarray
    eta: np.ndarray
    psi: float
    theta: np.ndarray
    vartheta: np.ndarray
    gamma: float
    big_lambda: float
    rho: np.ndarray

    @classmethod
    def from_params(cls, params: GbmParams, strategy: Strategy) -> "GbmClosedForm":
        if strategy.delta.size != params.n_assets:
            raise ParameterError("strategy dimension does not match asset count")
        rho = params.rho
        lam = params.market_price_of_risk()
        eta = strategy.delta * params.sigma
        ere = float(eta @ rho @ eta)
        if ere <= 0.0:
            raise ParameterError("benchmark carries no risky exposure")
        lrl = float(lam @ rho @ lam)
        lre = float(lam @ rho @ eta)
        d2 = lrl - lre * lre / ere
        if d2 <= 0.0:
            raise ParameterError(
                "market price of risk is collinear with the benchmark exposure"
            )
        psi = float(np.sqrt(ere))
        cf = cls(
            lam=lam,
            eta=eta,
            psi=psi,
            theta=(-lam + (lre / ere) * eta) / np.sqrt(d2),
            vartheta=eta / psi,
            gamma=params.r + float(strategy.delta @ (params.mu - params.r))
            - 0.5 * ere,
            big_lambda=params.r + 0.5 * lrl,
            rho=rho,
        )
        for name, val in (("theta", cf.theta @ rho @ cf.theta),
                          ("vartheta", cf.vartheta @ rho @ cf.vartheta)):
            if abs(val - 1.0) > 1e-10:
                raise ParameterError(f"{name} failed rho-normalisation")
        if abs(cf.eta @ rho @ cf.theta) > 1e-10 * psi:
            raise ParameterError("theta not rho-orthogonal to the exposure")
        return cf

    def tilts(self, T: float):
        """(c1, c2): measure-change shifts of the two rank laws."""
        sq = np.sqrt(T)
        return (float(self.theta @ self.rho @ self.lam) * sq,
                float(self.vartheta @ self.rho @ self.lam) * sq)


def _adaptive_simpson(f, a, b, tol, depth=_QUAD_DEPTH):
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    return _simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth)


def _simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
    right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
    err = left + right - whole
    if depth <= 0 or abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    return (_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + _simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))


def q_cdf_v(cf: GbmClosedForm, copula: CopulaSpec, v: float, T: float) -> float:
    """Discounted CDF Q(V <= v) by adaptive quadrature; v in [0, 1]."""
    if copula.kind == "unspecified":
        raise UnsupportedOperationError(
            "the unspecified coupling has no conditional copula; its xi is "
            "available in closed form via xi_analytic"
        )
    if not (0.0 <= v <= 1.0):
        raise ParameterError("v must lie in [0, 1]")
    if not T > 0.0:
        raise ParameterError("T must be positive")
    c1, c2 = cf.tilts(T)

    def integrand(w: float) -> float:
        u = ndtr(ndtri(w) - c2)
        u = min(max(u, 1e-15), 1.0 - 1e-15)
        c = conditional(copula, v, u)
        return float(ndtr(ndtri(c) - c1))

    cuts = []
    for ub in copula.conditional_u_breakpoints(v):
        if 0.0 < ub < 1.0:
            w = float(ndtr(ndtri(ub) + c2))
            if _QUAD_EDGE < w < 1.0 - _QUAD_EDGE:
                cuts.append(w)
    nodes = [_QUAD_EDGE] + sorted(cuts) + [1.0 - _QUAD_EDGE]
    total = 0.0
    for aa, bb in zip(nodes[:-1], nodes[1:]):
        if bb > aa:
            total += _adaptive_simpson(integrand, aa, bb,
                                       _QUAD_TOL / (len(nodes) - 1))
    return float(min(max(total, 0.0), 1.0))


def xi_analytic(cf: GbmClosedForm, copula: CopulaSpec, grid, T: float,
                r: float) -> XiFunction:
    """xi at grid midpoints: exp(-rT) times the central difference of Q.

    The difference step is half a cell, so consecutive evaluations share the
    cell-edge CDF values and the midpoint integral telescopes to exp(-rT).
    """
    m = grid.m if isinstance(grid, QuantileGrid) else int(grid)
    if m < 2:
        raise ParameterError("partition needs at least 2 cells")
    if copula.kind == "unspecified":
        lrl = float(cf.lam @ cf.rho @ cf.lam)
        u = (np.arange(m) + 0.5) / m
        vals = np.exp(-(r + 0.5 * lrl) * T
                      + np.sqrt(lrl * T) * ndtri(1.0 - u))
        return XiFunction(vals, bandwidth=0.0, source="closed-form")
    edges = np.array([q_cdf_v(cf, copula, k / m, T) for k in range(m + 1)])
    vals = np.maximum(np.diff(edges) * m * np.exp(-r * T), 0.0)
    return XiFunction(vals, bandwidth=0.5 / m, source="quadrature")
