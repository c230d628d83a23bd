import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wassport.copulas import CopulaSpec, cdf, conditional, inv_conditional
from wassport.errors import ParameterError, UnsupportedOperationError

COIN = CopulaSpec("coin", u_star=0.25)
GUMBEL = CopulaSpec("gumbel", theta=2.0)
COMO = CopulaSpec("comonotonic")
INDEP = CopulaSpec("independence")
ALL_SPECIFIED = [COIN, GUMBEL, COMO, INDEP]


class TestSpec:
    def test_coin_needs_interior_threshold(self):
        for bad in (0.0, 1.0, -0.2):
            with pytest.raises(ParameterError):
                CopulaSpec("coin", u_star=bad)

    def test_gumbel_needs_theta_at_least_one(self):
        with pytest.raises(ParameterError):
            CopulaSpec("gumbel", theta=0.9)

    def test_parameterless_kinds_reject_parameters(self):
        with pytest.raises(ParameterError):
            CopulaSpec("independence", u_star=0.3)

    def test_unknown_kind(self):
        with pytest.raises(ParameterError):
            CopulaSpec("clayton")

    def test_unspecified_has_no_maps(self):
        spec = CopulaSpec("unspecified")
        for fn in (lambda: cdf(spec, 0.5, 0.5),
                   lambda: conditional(spec, 0.5, 0.5),
                   lambda: inv_conditional(spec, 0.5, 0.5)):
            with pytest.raises(UnsupportedOperationError):
                fn()


class TestCdf:
    def test_coin_at_threshold_corner(self):
        assert cdf(COIN, 0.25, 0.25) == pytest.approx(0.25)

    def test_uniform_marginals(self):
        for spec in ALL_SPECIFIED:
            for u in (0.0, 0.3, 1.0):
                assert cdf(spec, u, 1.0) == pytest.approx(u, abs=1e-12)
                assert cdf(spec, u, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_gumbel_theta_one_is_independence(self):
        spec = CopulaSpec("gumbel", theta=1.0)
        uu, vv = np.meshgrid(np.linspace(0.05, 0.95, 10),
                             np.linspace(0.05, 0.95, 10))
        assert np.allclose(cdf(spec, uu, vv), uu * vv, atol=1e-12)

    def test_rejects_outside_unit_square(self):
        with pytest.raises(ParameterError):
            cdf(COIN, 1.2, 0.5)


class TestConditional:
    def test_coin_below_threshold(self):
        v = np.linspace(0, 1, 21)
        got = conditional(COIN, v, np.full_like(v, 0.1))
        assert np.allclose(got, np.minimum(v, 0.25) / 0.25)

    def test_independence_identity(self):
        v = np.linspace(0, 1, 11)
        assert np.allclose(conditional(INDEP, v, np.full_like(v, 0.7)), v)

    def test_gumbel_matches_partial_derivative(self):
        h = 1e-5
        for v in np.linspace(0.1, 0.9, 9):
            for u in np.linspace(0.1, 0.9, 9):
                fd = (cdf(GUMBEL, u + h, v) - cdf(GUMBEL, u - h, v)) / (2 * h)
                assert conditional(GUMBEL, v, u) == pytest.approx(fd, abs=1e-6)

    def test_nondecreasing_in_v(self):
        v = np.linspace(0, 1, 301)
        for spec in ALL_SPECIFIED:
            for u in (0.1, 0.25, 0.5, 0.9):
                vals = conditional(spec, v, np.full_like(v, u))
                assert np.all(np.diff(vals) >= -1e-12)


class TestInverseConditional:
    def test_coin_comonotonic_branch(self):
        assert inv_conditional(COIN, 0.7, 0.5) == pytest.approx(0.5)

    def test_coin_zero_maps_to_zero_above_threshold(self):
        assert inv_conditional(COIN, 0.0, 0.5) == 0.0

    def test_comonotonic_returns_condition(self):
        for x in (0.01, 0.5, 1.0):
            assert inv_conditional(COMO, x, 0.37) == pytest.approx(0.37)

    def test_gumbel_round_trip(self):
        v, u = np.meshgrid(np.linspace(0.05, 0.95, 20),
                           np.linspace(0.05, 0.95, 20))
        x = conditional(GUMBEL, v, u)
        back = inv_conditional(GUMBEL, x, u)
        assert np.max(np.abs(back - v)) <= 1e-8

    def test_left_inverse_on_dense_grid(self):
        xs = np.linspace(0.01, 0.99, 25)
        us = np.linspace(0.05, 0.95, 19)
        vs = np.linspace(0, 1, 801)
        for spec in ALL_SPECIFIED:
            for u in us:
                cond = conditional(spec, vs, np.full_like(vs, u))
                for x in xs:
                    v_star = inv_conditional(spec, x, u)
                    assert conditional(spec, v_star, u) >= x - 1e-9
                    # infimum property: strictly smaller v fails the bound
                    below = vs[vs < v_star - 1e-6]
                    if below.size:
                        assert cond[vs < v_star - 1e-6][-1] < x + 1e-9


unit = st.floats(0.001, 0.999)


@st.composite
def specs(draw):
    kind = draw(st.sampled_from(["coin", "gumbel", "comonotonic",
                                 "independence"]))
    if kind == "coin":
        return CopulaSpec("coin", u_star=draw(st.floats(0.05, 0.95)))
    if kind == "gumbel":
        return CopulaSpec("gumbel", theta=draw(st.floats(1.0, 8.0)))
    return CopulaSpec(kind)


class TestCopulaProperties:
    @given(specs(), unit, unit, unit, unit)
    @settings(max_examples=200, deadline=None)
    def test_two_increasing(self, spec, a, b, c, d):
        u1, u2 = sorted((a, b))
        v1, v2 = sorted((c, d))
        mass = (cdf(spec, u2, v2) - cdf(spec, u1, v2)
                - cdf(spec, u2, v1) + cdf(spec, u1, v1))
        assert mass >= -1e-12

    @given(specs(), unit, unit, unit)
    @settings(max_examples=200, deadline=None)
    def test_conditional_monotone(self, spec, u, v1, v2):
        lo, hi = sorted((v1, v2))
        assert (conditional(spec, lo, u)
                <= conditional(spec, hi, u) + 1e-12)
