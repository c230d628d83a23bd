"""Quantile-grid calculus.

A quantile function g on (0,1) is represented by its values at the midpoints
of a uniform partition into m cells,

    u_i = (i - 1/2)/m,      i = 1..m,

so every integral below is the midpoint rule with weight 1/m.  The grid never
touches 0 or 1, which keeps tail-singular weight functions finite.  The same
quadrature rule is used for the risk, Wasserstein and cost integrals so that
the dual optimality conditions of the solver are mutually consistent.

Provided here:

* the L2 (2-)Wasserstein distance between two grid functions,
      d2(g, h) = sqrt( sum_i (g_i - h_i)^2 / m ),
* the isotonic projection (nearest non-decreasing function in L2), computed
  by pool-adjacent-violators in O(m),
* the exact mean / standard-deviation ranges attainable inside an
  eps-Wasserstein ball around a monotone benchmark, together with the affine
  quantile functions attaining them, and the tolerance-driven choice of eps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import GridMismatchError, ParameterError

__all__ = [
    "QuantileGrid",
    "wasserstein",
    "isotonic_projection",
    "MeanBounds",
    "StdBounds",
    "mean_bounds",
    "std_bounds",
    "epsilon_from_tolerances",
]


@dataclass(frozen=True)
class QuantileGrid:
    """A function sampled at the midpoints of a uniform partition of (0,1).

    Parameters
    ----------
    values : array of shape (m,)
        Function values at u_i = (i - 1/2)/m.
    monotone : bool
        Declares the values non-decreasing; verified at construction.
    """

    values: np.ndarray
    monotone: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ParameterError("grid needs at least 2 cells")
        if not np.all(np.isfinite(v)):
            raise ParameterError("grid values must be finite")
        if self.monotone and np.any(np.diff(v) < 0.0):
            raise ParameterError("monotone flag set but values decrease")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def u(self) -> np.ndarray:
        """Midpoints (i - 1/2)/m of the partition."""
        m = self.values.size
        return (np.arange(m) + 0.5) / m

    def integral(self) -> float:
        """Midpoint-rule integral over (0,1), i.e. the mean of the law."""
        return float(np.mean(self.values))

    def std(self) -> float:
        """Midpoint-rule standard deviation of the law."""
        return float(np.std(self.values))

    def interp(self, u: np.ndarray) -> np.ndarray:
        """Evaluate at arbitrary u in (0,1) by linear interpolation.

        Constant extension beyond the first/last midpoint; monotone inputs
        give monotone output.
        """
        return np.interp(np.asarray(u, dtype=float), self.u, self.values)

    def same_partition(self, other: "QuantileGrid") -> None:
        if self.m != other.m:
            raise GridMismatchError(
                f"grids differ: m={self.m} vs m={other.m}"
            )


def wasserstein(g: QuantileGrid, h: QuantileGrid) -> float:
    """L2 distance between two quantile functions on a shared grid."""
    g.same_partition(h)
    d = g.values - h.values
    return float(np.sqrt(np.mean(d * d)))


@njit(cache=True)
def _pava(y):
    """Pool-adjacent-violators, uniform weights, non-decreasing output."""
    n = y.size
    mean = np.empty(n)
    count = np.empty(n, dtype=np.int64)
    k = -1
    for i in range(n):
        k += 1
        mean[k] = y[i]
        count[k] = 1
        while k > 0 and mean[k - 1] > mean[k]:
            tot = count[k - 1] + count[k]
            mean[k - 1] = (mean[k - 1] * count[k - 1] + mean[k] * count[k]) / tot
            count[k - 1] = tot
            k -= 1
    out = np.empty(n)
    pos = 0
    for b in range(k + 1):
        for _ in range(count[b]):
            out[pos] = mean[b]
            pos += 1
    return out


def isotonic_projection(h: QuantileGrid) -> QuantileGrid:
    """L2-nearest non-decreasing grid function (unique minimiser)."""
    return QuantileGrid(_pava(np.ascontiguousarray(h.values)), monotone=True)


@dataclass(frozen=True)
class MeanBounds:
    lower: float
    upper: float
    g_lower: QuantileGrid = field(repr=False)
    g_upper: QuantileGrid = field(repr=False)


@dataclass(frozen=True)
class StdBounds:
    lower: float
    upper: float
    g_lower: QuantileGrid = field(repr=False)
    g_upper: QuantileGrid = field(repr=False)


def _check_eps(eps: float) -> None:
    if not (np.isfinite(eps) and eps > 0.0):
        raise ParameterError(f"eps must be positive, got {eps}")


def mean_bounds(f: QuantileGrid, eps: float) -> MeanBounds:
    """Range of means over the eps-ball around f, with attaining functions.

    The extremes are m -+ eps, attained by the constant shifts f -+ eps.
    """
    _check_eps(eps)
    if not f.monotone:
        raise ParameterError("benchmark grid must be monotone")
    m = f.integral()
    return MeanBounds(
        lower=m - eps,
        upper=m + eps,
        g_lower=QuantileGrid(f.values - eps, monotone=True),
        g_upper=QuantileGrid(f.values + eps, monotone=True),
    )


def std_bounds(f: QuantileGrid, eps: float, m_target: float) -> StdBounds:
    """Range of standard deviations over the eps-ball at a fixed mean.

    With dm = mean(f) - m_target and w = sqrt(eps^2 - dm^2), the range is

        [ max(s - w, 0),  s + w ],

    attained by the affine maps (1 -+ w/s) (f - mean(f)) + m_target; when
    s < w the lower extreme is the constant function m_target.
    """
    _check_eps(eps)
    if not f.monotone:
        raise ParameterError("benchmark grid must be monotone")
    mean = f.integral()
    s = f.std()
    dm = mean - m_target
    if abs(dm) > eps:
        raise ParameterError(
            f"target mean {m_target} outside the attainable band "
            f"[{mean - eps}, {mean + eps}]"
        )
    w = float(np.sqrt(max(eps * eps - dm * dm, 0.0)))
    centred = f.values - mean
    g_up = QuantileGrid((1.0 + w / s) * centred + m_target, monotone=True)
    if s >= w:
        g_lo = QuantileGrid((1.0 - w / s) * centred + m_target, monotone=True)
        lo = s - w
    else:
        g_lo = QuantileGrid(np.full(f.m, m_target), monotone=True)
        lo = 0.0
    return StdBounds(lower=lo, upper=s + w, g_lower=g_lo, g_upper=g_up)


def epsilon_from_tolerances(f: QuantileGrid, m_lower: float, s_upper: float) -> float:
    """Largest ball radius honouring a mean floor and a std-dev ceiling.

    eps = min(mean(f) - m_lower, s_upper - std(f)); both gaps must be
    strictly positive.
    """
    if not f.monotone:
        raise ParameterError("benchmark grid must be monotone")
    gap_m = f.integral() - m_lower
    gap_s = s_upper - f.std()
    if gap_m <= 0.0:
        raise ParameterError("mean tolerance must lie strictly below the mean")
    if gap_s <= 0.0:
        raise ParameterError("std tolerance must lie strictly above the std")
    return float(min(gap_m, gap_s))
