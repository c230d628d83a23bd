"""Market simulation: asset paths, stochastic discount factor, benchmark wealth.

Two complete market models are provided.

Constant-coefficient model (``simulate_gbm``)
    d assets with dS^i = S^i (mu^i dt + sigma^i dW^i), correlation rho and a
    constant short rate r.  For a constant-proportion benchmark the terminal
    law is known in closed form, so terminal values are sampled exactly on
    shared Gaussian draws (no discretisation error):

        X_T   = x0 exp(Gamma T + eta' W_T),   eta^i = delta^i sigma^i,
        Gamma = r + delta'(mu - r) - eta' rho eta / 2,
        sdf_T = exp(-(r + lambda' rho lambda / 2) T - lambda' W_T),

    with market price of risk solving rho lambda = (mu - r)/sigma.

Stochastic-rate CEV model (``simulate_sir_cev``)
    d-1 equities dS^i = S^i (mu^i dt + sigma^i (S^i)^{beta^i} dW^i), a
    maturity-T bond dS^d = S^d (((1 + b B_t) r_t - a B_t) dt - sigma_r B_t dW^d)
    with B_t = (1 - exp(-kappa (T-t)))/kappa, and the rate
    dr = kappa (theta - r) dt + sigma_r dW^d.  The drift tilt uses
    a = kappa theta - kappaQ thetaQ and b = kappa - kappaQ, where the Q-side
    parameters are the risk-neutral ones.  The discount factor follows
    d(sdf) = -sdf (r dt + lambda' dW) with rho lambda given componentwise by
    (mu^i - r)/(sigma^i (S^i)^{beta^i}) for equities and (a - b r)/sigma_r for
    the bond driver.

    Assets and the discount factor advance by a log-Euler step (exact
    exponential on coefficients frozen at the step start), which preserves
    positivity and makes sdf * S^i a martingale step by step; the rate and
    the wealth use the plain Euler step.  A path whose wealth crosses zero is
    resimulated from its own substream with the step halved, a bounded number
    of times.

Randomness is counter-based (Philox).  The main pass draws from the stream
keyed (seed, 0) in a fixed (step, path) layout, so each path consumes a
deterministic counter window; retry passes for path j at attempt k draw from
the stream keyed (seed, j*8+k).  Reruns with identical inputs are
bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError, SimulationError
from .fileio import write_csv

__all__ = [
    "GbmParams",
    "SirCevParams",
    "Strategy",
    "PathSet",
    "simulate_gbm",
    "simulate_sir_cev",
]

_MAX_RETRIES = 3


def _validate_corr(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ParameterError("rho must be a square matrix")
    if not np.allclose(rho, rho.T, atol=1e-12):
        raise ParameterError("rho must be symmetric")
    if not np.allclose(np.diag(rho), 1.0, atol=1e-12):
        raise ParameterError("rho must have a unit diagonal")
    try:
        np.linalg.cholesky(rho)
    except np.linalg.LinAlgError:
        raise ParameterError("rho must be positive definite") from None
    return rho


@dataclass(frozen=True)
class GbmParams:
    mu: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray
    r: float
    s0: np.ndarray
    T: float

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        s0 = np.atleast_1d(np.asarray(self.s0, dtype=float))
        rho = _validate_corr(self.rho)
        d = mu.size
        if sigma.size != d or s0.size != d or rho.shape[0] != d:
            raise ParameterError("mu, sigma, s0, rho dimensions disagree")
        if np.any(sigma <= 0.0):
            raise ParameterError("sigma must be strictly positive")
        if np.any(s0 <= 0.0):
            raise ParameterError("initial prices must be positive")
        if not self.T > 0.0:
            raise ParameterError("T must be positive")
        for name, v in (("mu", mu), ("sigma", sigma), ("s0", s0), ("rho", rho)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def n_assets(self) -> int:
        return self.mu.size

    def market_price_of_risk(self) -> np.ndarray:
        """Solve rho lambda = (mu - r)/sigma."""
        return np.linalg.solve(self.rho, (self.mu - self.r) / self.sigma)


@dataclass(frozen=True)
class SirCevParams:
    """CEV exponents make the equity dynamics level-dependent, so the initial
    equity prices ``s0`` are part of the model, not just a reporting anchor."""

    mu: np.ndarray
    sigma: np.ndarray
    beta: np.ndarray
    rho: np.ndarray
    r0: float
    kappaP: float
    thetaP: float
    sigma_r: float
    kappaQ: float
    thetaQ: float
    s0: np.ndarray
    T: float

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        s0 = np.atleast_1d(np.asarray(self.s0, dtype=float))
        rho = _validate_corr(self.rho)
        k = mu.size
        if sigma.size != k or beta.size != k or s0.size != k:
            raise ParameterError("mu, sigma, beta, s0 dimensions disagree")
        if rho.shape[0] != k + 1:
            raise ParameterError("rho must cover the equities plus the bond driver")
        if np.any(sigma <= 0.0) or self.sigma_r <= 0.0:
            raise ParameterError("volatilities must be strictly positive")
        if np.any(s0 <= 0.0):
            raise ParameterError("initial prices must be positive")
        if not self.T > 0.0:
            raise ParameterError("T must be positive")
        for name, v in (("mu", mu), ("sigma", sigma), ("beta", beta),
                        ("s0", s0), ("rho", rho)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def n_assets(self) -> int:
        """Equities plus the maturity-T bond."""
        return self.mu.size + 1

    @property
    def a(self) -> float:
        return self.kappaP * self.thetaP - self.kappaQ * self.thetaQ

    @property
    def b(self) -> float:
        return self.kappaP - self.kappaQ


@dataclass(frozen=True)
class Strategy:
    """Constant proportions over the risky assets; remainder in the bank."""

    delta: np.ndarray
    x0: float

    def __post_init__(self):
        delta = np.atleast_1d(np.asarray(self.delta, dtype=float))
        if not np.all(np.isfinite(delta)):
            raise ParameterError("delta must be finite")
        if not self.x0 > 0.0:
            raise ParameterError("initial wealth must be positive")
        delta.setflags(write=False)
        object.__setattr__(self, "delta", delta)


@dataclass(frozen=True)
class PathSet:
    """Terminal Monte Carlo sample: benchmark wealth, SDF, asset prices.

    ``sT`` holds terminal asset prices relative to their initial values
    (one column per risky asset), so "sdfT * sT has unit mean" is the
    martingale diagnostic in every model.
    """

    xT: np.ndarray
    sdfT: np.ndarray
    sT: np.ndarray
    seed: int
    n_steps: int
    model: str

    def __post_init__(self):
        xT = np.asarray(self.xT, dtype=float)
        sdfT = np.asarray(self.sdfT, dtype=float)
        sT = np.asarray(self.sT, dtype=float)
        if xT.ndim != 1 or sdfT.shape != xT.shape or sT.shape[0] != xT.size:
            raise ParameterError("path arrays must be aligned")
        if xT.size < 2:
            raise ParameterError("need at least 2 paths")
        if not (np.all(np.isfinite(xT)) and np.all(np.isfinite(sdfT))
                and np.all(np.isfinite(sT))):
            raise ParameterError("path values must be finite")
        if np.any(sdfT <= 0.0):
            raise ParameterError("sdfT must be strictly positive")
        if np.any(xT <= 0.0):
            raise ParameterError("xT must be strictly positive")
        for name, v in (("xT", xT), ("sdfT", sdfT), ("sT", sT)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def n_paths(self) -> int:
        return self.xT.size

    def to_csv(self, path) -> None:
        write_csv(path, ["path_id", "x_T", "sdf_T"],
                  [np.arange(self.n_paths), self.xT, self.sdfT])


def _philox(seed: int, tag: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array(
        [np.uint64(seed), np.uint64(tag)], dtype=np.uint64)))


def simulate_gbm(params: GbmParams, strategy: Strategy, n_paths: int,
                 n_steps: int = 1, seed: int = 0) -> PathSet:
    """Sample terminal wealth/SDF/prices exactly from the closed-form law.

    ``n_steps`` is recorded as metadata only; the constant-proportion
    terminal law needs no time stepping.
    """
    if n_paths < 2:
        raise ParameterError("n_paths must be at least 2")
    d = params.n_assets
    if strategy.delta.size != d:
        raise ParameterError("strategy dimension does not match asset count")
    lam = params.market_price_of_risk()
    eta = strategy.delta * params.sigma
    psi2 = eta @ params.rho @ eta
    gamma = params.r + strategy.delta @ (params.mu - params.r) - 0.5 * psi2
    big_lambda = params.r + 0.5 * (lam @ params.rho @ lam)
    T = params.T

    rng = _philox(seed)
    chol = np.linalg.cholesky(params.rho)
    w = rng.standard_normal((n_paths, d)) @ chol.T * np.sqrt(T)

    xT = strategy.x0 * np.exp(gamma * T + w @ eta)
    sdfT = np.exp(-big_lambda * T - w @ lam)
    sT = np.exp((params.mu - 0.5 * params.sigma ** 2) * T + params.sigma * w)
    return PathSet(xT, sdfT, sT, seed=seed, n_steps=n_steps, model="gbm")


def _sircev_block(params: SirCevParams, strategy: Strategy, n_steps: int,
                  rng: np.random.Generator, n_paths: int):
    """One Euler pass; returns terminal arrays plus a per-path OK mask."""
    k = params.mu.size
    d = k + 1
    T = params.T
    dt = T / n_steps
    sqdt = np.sqrt(dt)
    chol = np.linalg.cholesky(params.rho)
    rho_inv = np.linalg.inv(params.rho)
    a, b = params.a, params.b
    delta = strategy.delta
    cash_w = 1.0 - delta.sum()

    s_eq = np.ones((n_paths, k))          # equity prices relative to S_0
    log_bond = np.zeros(n_paths)          # bond price relative to its S_0
    r = np.full(n_paths, params.r0)
    x = np.full(n_paths, strategy.x0)
    log_sdf = np.zeros(n_paths)
    ok = np.ones(n_paths, dtype=bool)

    for step in range(n_steps):
        t = step * dt
        b_t = (1.0 - np.exp(-params.kappaP * (T - t))) / params.kappaP
        dw = rng.standard_normal((n_paths, d)) @ chol.T * sqdt

        vol_eq = params.sigma * (s_eq * params.s0) ** params.beta
        rhs = np.empty((n_paths, d))
        rhs[:, :k] = (params.mu - r[:, None]) / vol_eq
        rhs[:, k] = (a - b * r) / params.sigma_r
        lam = rhs @ rho_inv.T
        lam_rho_lam = np.einsum("ij,ij->i", lam, rhs)

        dlog_eq = (params.mu - 0.5 * vol_eq ** 2) * dt + vol_eq * dw[:, :k]
        vol_b = params.sigma_r * b_t
        dlog_bond = ((1.0 + b * b_t) * r - a * b_t - 0.5 * vol_b ** 2) * dt \
            - vol_b * dw[:, k]

        growth = 1.0 + cash_w * r * dt
        ret_eq = np.expm1(dlog_eq)
        for i in range(k):
            growth += delta[i] * ret_eq[:, i]
        growth += delta[k] * np.expm1(dlog_bond)
        ok &= growth > 0.0
        x = np.where(ok, x * growth, x)

        log_sdf += -(r + 0.5 * lam_rho_lam) * dt \
            - np.einsum("ij,ij->i", lam, dw)
        s_eq *= np.exp(dlog_eq)
        log_bond += dlog_bond
        r = r + params.kappaP * (params.thetaP - r) * dt \
            + params.sigma_r * dw[:, k]

    sT = np.column_stack([s_eq, np.exp(log_bond)])
    return x, np.exp(log_sdf), sT, ok


def simulate_sir_cev(params: SirCevParams, strategy: Strategy, n_paths: int,
                     n_steps: Optional[int] = None, seed: int = 0) -> PathSet:
    """Euler simulation of the stochastic-rate CEV market.

    Default ``n_steps`` is 260 per year (daily); anything coarser than 52
    steps per year is rejected.  Terminal asset prices in ``sT`` are relative
    to their initial values.
    """
    if n_paths < 2:
        raise ParameterError("n_paths must be at least 2")
    if strategy.delta.size != params.n_assets:
        raise ParameterError("strategy dimension does not match asset count")
    if n_steps is None:
        n_steps = int(np.ceil(260 * params.T))
    if n_steps < 52 * params.T:
        raise ParameterError("n_steps must be weekly or finer (>= 52 T)")

    rng = _philox(seed)
    xT, sdfT, sT, ok = _sircev_block(params, strategy, n_steps, rng, n_paths)

    bad = np.flatnonzero(~ok | (xT <= 0.0))
    for j in bad:
        steps = n_steps
        for attempt in range(1, _MAX_RETRIES + 1):
            steps *= 2
            sub = _philox(seed, int(j) * 8 + attempt)
            x1, sdf1, s1, ok1 = _sircev_block(params, strategy, steps, sub, 1)
            if ok1[0] and x1[0] > 0.0:
                xT[j], sdfT[j], sT[j] = x1[0], sdf1[0], s1[0]
                break
        else:
            raise SimulationError(
                f"path {j}: wealth non-positive after {_MAX_RETRIES} "
                f"step-halving retries"
            )
    return PathSet(xT, sdfT, sT, seed=seed, n_steps=n_steps, model="sir_cev")
