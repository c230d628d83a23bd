"""Bivariate copulas with conditional CDFs and their generalised inverses.

Each copula exposes three maps on the unit square:

    cdf(u, v)                C(u, v)
    conditional(v, u)        C(v | u)  = dC(u, v)/du, the conditional CDF
    inv_conditional(x, u)    the generalised (left-)inverse of v -> C(v | u)

Kinds
-----
``coin(u_star)``
    Independent below the threshold, comonotonic above it:
        C(u,v)   = min(u*,u) min(u*,v)/u* + (min(u,v) - u*)_+
        C(v|u)   = min(v,u*)/u* 1{u<=u*} + 1{u>u*} 1{u<=v}
        Cinv(x|u)= x u* 1{u<=u*} + u 1{u>u*} 1{x>0}
``gumbel(theta)``
    C(u,v) = exp(-((-ln u)^t + (-ln v)^t)^(1/t)), theta >= 1; conditional in
    closed form, inverse by bisection (no closed form exists).
``comonotonic`` / ``independence``
    min(u,v) and u v.
``unspecified``
    A sentinel meaning "no copula constraint"; the three maps are undefined
    and raise.  Downstream code couples directly to the discount factor's
    unconditional rank instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError, UnsupportedOperationError

__all__ = ["CopulaSpec", "cdf", "conditional", "inv_conditional"]

_KINDS = ("coin", "gumbel", "comonotonic", "independence", "unspecified")

_BISECT_TOL = 1e-10
_BISECT_MAXIT = 200


@dataclass(frozen=True)
class CopulaSpec:
    kind: str
    u_star: Optional[float] = None
    theta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown copula kind {self.kind!r}")
        if self.kind == "coin":
            if self.u_star is None or not (0.0 < self.u_star < 1.0):
                raise ParameterError("coin copula needs u_star in (0,1)")
        elif self.kind == "gumbel":
            if self.theta is None or not (self.theta >= 1.0):
                raise ParameterError("gumbel copula needs theta >= 1")
        else:
            if self.u_star is not None or self.theta is not None:
                raise ParameterError(f"{self.kind} copula carries no parameters")

    def describe(self) -> str:
        if self.kind == "coin":
            return f"coin(u_star={self.u_star})"
        if self.kind == "gumbel":
            return f"gumbel(theta={self.theta})"
        return self.kind

    def conditional_u_breakpoints(self, v: float) -> list:
        """u-locations where C(v|u) is discontinuous, for quadrature."""
        if self.kind == "coin":
            pts = [self.u_star]
            if v > self.u_star:
                pts.append(v)
            return pts
        if self.kind == "comonotonic":
            return [v]
        return []


def _require_kind(c: CopulaSpec) -> None:
    if c.kind == "unspecified":
        raise UnsupportedOperationError(
            "the unspecified copula has no cdf/conditional maps"
        )


def _check_unit(name: str, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ParameterError(f"{name} must lie in [0,1]")
    return x


def _check_interior(name: str, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or np.any(x >= 1.0):
        raise ParameterError(f"{name} must lie in (0,1)")
    return x


def _gumbel_cdf(u, v, theta):
    with np.errstate(divide="ignore"):
        lu = -np.log(u)
        lv = -np.log(v)
    s = lu ** theta + lv ** theta
    out = np.exp(-(s ** (1.0 / theta)))
    # boundaries: C(0,v)=0, C(u,0)=0, C(1,v)=v, C(u,1)=u
    out = np.where((u == 0.0) | (v == 0.0), 0.0, out)
    out = np.where(u == 1.0, v, out)
    out = np.where(v == 1.0, np.where(u == 1.0, 1.0, u), out)
    return out


def _gumbel_conditional(v, u, theta):
    # dC/du = C(u,v) * s^(1/theta - 1) * (-ln u)^(theta-1) / u
    with np.errstate(divide="ignore"):
        lu = -np.log(u)
        lv = -np.log(np.clip(v, np.finfo(float).tiny, 1.0))
    s = lu ** theta + lv ** theta
    out = np.exp(-(s ** (1.0 / theta))) * s ** (1.0 / theta - 1.0) \
        * lu ** (theta - 1.0) / u
    return np.where(v <= 0.0, 0.0, np.where(v >= 1.0, 1.0, out))


def cdf(c: CopulaSpec, u, v):
    """Copula CDF C(u, v); accepts scalars or arrays."""
    _require_kind(c)
    u = _check_unit("u", u)
    v = _check_unit("v", v)
    if c.kind == "coin":
        us = c.u_star
        val = (np.minimum(us, u) * np.minimum(us, v) / us
               + np.maximum(np.minimum(u, v) - us, 0.0))
    elif c.kind == "gumbel":
        val = _gumbel_cdf(u, v, c.theta)
    elif c.kind == "comonotonic":
        val = np.minimum(u, v)
    else:
        val = u * v
    return val if np.ndim(val) else float(val)


def conditional(c: CopulaSpec, v, u):
    """Conditional CDF C(v | u), non-decreasing and right-continuous in v."""
    _require_kind(c)
    v = _check_unit("v", v)
    u = _check_interior("u", u)
    if c.kind == "coin":
        us = c.u_star
        val = np.where(u <= us,
                       np.minimum(v, us) / us,
                       (u <= v).astype(float))
    elif c.kind == "gumbel":
        val = _gumbel_conditional(v, u, c.theta)
    elif c.kind == "comonotonic":
        val = (u <= v).astype(float)
    else:
        val = v * np.ones_like(u, dtype=float)
    return val if np.ndim(val) else float(val)


def inv_conditional(c: CopulaSpec, x, u):
    """Left-inverse of the conditional CDF: inf{v : C(v|u) >= x}."""
    _require_kind(c)
    x = _check_unit("x", x)
    u = _check_interior("u", u)
    if c.kind == "coin":
        us = c.u_star
        val = np.where(u <= us, x * us, u * (x > 0.0))
    elif c.kind == "gumbel":
        val = _gumbel_inv_conditional(x, u, c.theta)
    elif c.kind == "comonotonic":
        val = u * (x > 0.0)
    else:
        val = x * np.ones_like(u, dtype=float)
    return val if np.ndim(val) else float(val)


def _gumbel_inv_conditional(x, u, theta):
    """Bisection on v in [0,1]; the target is continuous non-decreasing."""
    x, u = np.broadcast_arrays(np.asarray(x, float), np.asarray(u, float))
    lo = np.zeros(x.shape)
    hi = np.ones(x.shape)
    for _ in range(_BISECT_MAXIT):
        mid = 0.5 * (lo + hi)
        below = _gumbel_conditional(mid, u, theta) < x
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) <= _BISECT_TOL:
            break
    return 0.5 * (lo + hi)
