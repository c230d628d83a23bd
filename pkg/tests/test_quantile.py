import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wassport.errors import GridMismatchError, ParameterError
from wassport.quantile import (QuantileGrid, epsilon_from_tolerances,
                               isotonic_projection, mean_bounds, std_bounds,
                               wasserstein)


def monotone_projection_oracle(y):
    """Exact isotonic projection by enumerating adjacent tie patterns.

    Every non-decreasing minimiser is constant on consecutive blocks with
    blockwise means as values; enumerate all 2^(m-1) block boundaries, keep
    the candidates whose block means are non-decreasing, return the best.
    """
    y = np.asarray(y, dtype=float)
    m = y.size
    best, best_val = None, np.inf
    for cuts in itertools.product([0, 1], repeat=m - 1):
        bounds = [0] + [i + 1 for i, c in enumerate(cuts) if c] + [m]
        means = [y[a:b].mean() for a, b in zip(bounds[:-1], bounds[1:])]
        if any(b < a for a, b in zip(means[:-1], means[1:])):
            continue
        cand = np.concatenate([np.full(b - a, mu) for a, b, mu in
                               zip(bounds[:-1], bounds[1:], means)])
        val = np.sum((cand - y) ** 2)
        if val < best_val - 1e-15:
            best, best_val = cand, val
    return best


class TestGrid:
    def test_midpoints(self):
        g = QuantileGrid(np.array([1.0, 2.0, 3.0, 4.0]))
        assert np.allclose(g.u, [0.125, 0.375, 0.625, 0.875])

    def test_rejects_single_cell(self):
        with pytest.raises(ParameterError):
            QuantileGrid(np.array([1.0]))

    def test_rejects_false_monotone_flag(self):
        with pytest.raises(ParameterError):
            QuantileGrid(np.array([2.0, 1.0]), monotone=True)

    def test_values_read_only(self):
        g = QuantileGrid(np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            g.values[0] = 5.0


class TestWasserstein:
    def test_zero_on_equal(self):
        g = QuantileGrid(np.array([1.0, 2.0, 3.0]))
        assert wasserstein(g, g) == 0.0

    def test_constant_shift(self):
        g = QuantileGrid(np.linspace(0, 1, 8))
        h = QuantileGrid(g.values + 0.37)
        assert wasserstein(g, h) == pytest.approx(0.37, abs=1e-15)

    def test_single_cell_difference(self):
        g = QuantileGrid(np.array([1.0, 2.0, 3.0, 4.0]))
        h = QuantileGrid(np.array([1.0, 2.0, 3.0, 5.0]))
        assert wasserstein(g, h) == pytest.approx(0.5)

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatchError):
            wasserstein(QuantileGrid(np.zeros(3)), QuantileGrid(np.zeros(4)))


class TestIsotonicProjection:
    def test_monotone_unchanged(self):
        g = QuantileGrid(np.array([1.0, 1.0, 2.0, 5.0]))
        assert np.array_equal(isotonic_projection(g).values, g.values)

    def test_two_point_pool(self):
        g = QuantileGrid(np.array([2.0, 1.0]))
        assert np.allclose(isotonic_projection(g).values, [1.5, 1.5])

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(300):
            m = rng.integers(2, 7)
            y = rng.integers(-2, 3, size=m).astype(float)
            y += rng.normal(0, 0.3, size=m)
            ours = isotonic_projection(QuantileGrid(y)).values
            oracle = monotone_projection_oracle(y)
            assert np.sqrt(np.mean((ours - oracle) ** 2)) <= 1e-9

    def test_sets_monotone_flag(self):
        out = isotonic_projection(QuantileGrid(np.array([3.0, 1.0, 2.0])))
        assert out.monotone


@st.composite
def grids(draw, m=st.integers(2, 12)):
    size = draw(m)
    vals = draw(st.lists(st.floats(-50, 50), min_size=size, max_size=size))
    return QuantileGrid(np.asarray(vals))


class TestProjectionProperties:
    @given(grids())
    @settings(max_examples=100, deadline=None)
    def test_idempotent(self, g):
        once = isotonic_projection(g)
        twice = isotonic_projection(once)
        assert np.allclose(once.values, twice.values, atol=1e-12)

    @given(st.data())
    @settings(max_examples=100, deadline=None)
    def test_contraction(self, data):
        g = data.draw(grids())
        h = data.draw(grids(m=st.just(g.m)))
        assert (wasserstein(isotonic_projection(g), isotonic_projection(h))
                <= wasserstein(g, h) + 1e-12)

    @given(grids())
    @settings(max_examples=100, deadline=None)
    def test_mean_preserved(self, g):
        assert isotonic_projection(g).integral() == pytest.approx(
            g.integral(), abs=1e-9)


def _random_monotone(rng, m):
    return QuantileGrid(np.cumsum(rng.uniform(0.0, 1.0, size=m))
                        + rng.uniform(-2, 2), monotone=True)


class TestBallBounds:
    def test_mean_band(self):
        f = QuantileGrid(np.full(10, 1.0), monotone=True)
        mb = mean_bounds(f, 0.1)
        assert (mb.lower, mb.upper) == (pytest.approx(0.9), pytest.approx(1.1))

    def test_mean_band_shrinks_to_point(self):
        f = _random_monotone(np.random.default_rng(0), 50)
        mb = mean_bounds(f, 1e-12)
        assert mb.lower == pytest.approx(f.integral(), abs=1e-10)
        assert mb.upper == pytest.approx(f.integral(), abs=1e-10)

    def test_mean_attainers_on_the_sphere(self):
        f = _random_monotone(np.random.default_rng(1), 64)
        mb = mean_bounds(f, 0.25)
        assert wasserstein(mb.g_lower, f) == pytest.approx(0.25, abs=1e-12)
        assert wasserstein(mb.g_upper, f) == pytest.approx(0.25, abs=1e-12)

    def test_std_band_at_centred_mean(self):
        rng = np.random.default_rng(2)
        f = QuantileGrid(np.cumsum(rng.uniform(0, 1, 100)), monotone=True)
        s = f.std()
        sb = std_bounds(f, 0.1, f.integral())
        assert sb.lower == pytest.approx(s - 0.1, abs=1e-12)
        assert sb.upper == pytest.approx(s + 0.1, abs=1e-12)

    def test_flat_lower_attainer_when_ball_swallows_std(self):
        f = QuantileGrid(np.array([0.99, 1.0, 1.01, 1.02]), monotone=True)
        sb = std_bounds(f, 0.5, 1.0)
        assert sb.lower == 0.0
        assert np.allclose(sb.g_lower.values, 1.0)
        assert sb.g_lower.std() == 0.0

    def test_upper_attainer_hits_bound(self):
        f = _random_monotone(np.random.default_rng(3), 80)
        m_target = f.integral() - 0.02
        sb = std_bounds(f, 0.09, m_target)
        assert sb.g_upper.std() == pytest.approx(sb.upper, abs=1e-10)
        assert sb.g_upper.integral() == pytest.approx(m_target, abs=1e-10)

    def test_target_mean_outside_band(self):
        f = _random_monotone(np.random.default_rng(4), 16)
        with pytest.raises(ParameterError):
            std_bounds(f, 0.05, f.integral() + 0.06)


class TestEpsilonFromTolerances:
    def test_symmetric_one_percent(self):
        f = _random_monotone(np.random.default_rng(5), 32)
        eps = epsilon_from_tolerances(f, f.integral() - 0.01, f.std() + 0.01)
        assert eps == pytest.approx(0.01, abs=1e-15)

    def test_min_of_gaps(self):
        f = _random_monotone(np.random.default_rng(6), 32)
        eps = epsilon_from_tolerances(f, f.integral() - 0.05, f.std() + 0.2)
        assert eps == pytest.approx(0.05, abs=1e-15)

    def test_resulting_ball_respects_both_tolerances(self):
        f = _random_monotone(np.random.default_rng(7), 32)
        m_lower = f.integral() - 0.03
        s_upper = f.std() + 0.08
        eps = epsilon_from_tolerances(f, m_lower, s_upper)
        assert mean_bounds(f, eps).lower >= m_lower - 1e-12
        assert std_bounds(f, eps, f.integral()).upper <= s_upper + 1e-12

    def test_degenerate_tolerances_rejected(self):
        f = _random_monotone(np.random.default_rng(8), 16)
        with pytest.raises(ParameterError):
            epsilon_from_tolerances(f, f.integral() - 0.01, f.std())
        with pytest.raises(ParameterError):
            epsilon_from_tolerances(f, f.integral(), f.std() + 0.01)
