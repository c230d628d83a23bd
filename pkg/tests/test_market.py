import numpy as np
import pytest

from conftest import (GBM_STRATEGY, GBM_TWO_ASSET, SIRCEV_STRATEGY,
                      SIRCEV_THREE_ASSET)
from wassport.errors import ParameterError, SimulationError
from wassport.fileio import read_csv
from wassport.market import (GbmParams, SirCevParams, Strategy, simulate_gbm,
                             simulate_sir_cev)


def gaussian_elimination(a, b):
    """Plain row-reduction solve, independent of numpy.linalg."""
    a = [list(map(float, row)) for row in a]
    b = list(map(float, b))
    n = len(b)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            for c in range(col, n):
                a[r][c] -= f * a[col][c]
            b[r] -= f * b[col]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        x[r] = (b[r] - sum(a[r][c] * x[c] for c in range(r + 1, n))) / a[r][r]
    return np.array(x)


def martingale_gap(paths):
    """Worst |mean(sdf * S_rel) - 1| over assets, in standard errors."""
    prods = paths.sdfT[:, None] * paths.sT
    gaps = np.abs(prods.mean(axis=0) - 1.0)
    ses = prods.std(axis=0) / np.sqrt(paths.n_paths)
    return np.max(gaps / ses)


class TestParamValidation:
    def test_non_positive_definite_rho(self):
        with pytest.raises(ParameterError):
            GbmParams(mu=[0.05, 0.06], sigma=[0.1, 0.12],
                      rho=[[1.0, 1.2], [1.2, 1.0]], r=0.01, s0=[1, 2], T=5)

    def test_negative_sigma(self):
        with pytest.raises(ParameterError):
            GbmParams(mu=[0.05], sigma=[-0.1], rho=[[1.0]], r=0.01,
                      s0=[1.0], T=5)

    def test_strategy_dimension_mismatch(self):
        with pytest.raises(ParameterError):
            simulate_gbm(GBM_TWO_ASSET, Strategy(delta=[0.5], x0=1.0), 100)

    def test_sircev_needs_weekly_steps(self):
        with pytest.raises(ParameterError):
            simulate_sir_cev(SIRCEV_THREE_ASSET, SIRCEV_STRATEGY, 100,
                             n_steps=100)


class TestGbm:
    def test_zero_risk_limit(self):
        # mu = r and vanishing volatility: wealth grows at the bank rate
        params = GbmParams(mu=[0.01, 0.01], sigma=[1e-10, 1e-10],
                           rho=[[1.0, 0.25], [0.25, 1.0]], r=0.01,
                           s0=[1.0, 2.0], T=5.0)
        ps = simulate_gbm(params, Strategy(delta=[0.3, 0.4], x0=2.0), 500,
                          seed=7)
        assert np.allclose(ps.xT, 2.0 * np.exp(0.01 * 5), rtol=1e-8)
        assert np.allclose(ps.sdfT, np.exp(-0.01 * 5), rtol=1e-8)

    def test_small_vol_limit_keeps_excess_drift(self):
        # sigma -> 0 with mu held fixed: xT -> x0 exp((r + delta'(mu-r)) T)
        params = GbmParams(mu=[0.0104, 0.0106], sigma=[1e-3, 1.2e-3],
                           rho=[[1.0, 0.25], [0.25, 1.0]], r=0.01,
                           s0=[1.0, 2.0], T=5.0)
        delta = np.array([0.25, 0.75])
        ps = simulate_gbm(params, Strategy(delta=delta, x0=1.0), 2000, seed=3)
        limit = np.exp((0.01 + delta @ (params.mu - 0.01)) * 5)
        assert np.allclose(ps.xT, limit, rtol=2e-2)
        assert np.median(np.abs(ps.xT / limit - 1.0)) < 5e-3

    def test_market_price_of_risk_vs_row_reduction(self):
        lam = GBM_TWO_ASSET.market_price_of_risk()
        rhs = (GBM_TWO_ASSET.mu - GBM_TWO_ASSET.r) / GBM_TWO_ASSET.sigma
        assert np.allclose(lam, gaussian_elimination(GBM_TWO_ASSET.rho, rhs),
                           atol=1e-12)

    def test_budget_is_martingale(self, gbm_paths):
        prod = gbm_paths.sdfT * gbm_paths.xT
        se = prod.std() / np.sqrt(gbm_paths.n_paths)
        assert abs(prod.mean() - 1.0) <= 3 * se

    def test_assets_are_martingales(self, gbm_paths):
        assert martingale_gap(gbm_paths) <= 3.0

    def test_reproducible(self):
        a = simulate_gbm(GBM_TWO_ASSET, GBM_STRATEGY, 1000, seed=11)
        b = simulate_gbm(GBM_TWO_ASSET, GBM_STRATEGY, 1000, seed=11)
        assert np.array_equal(a.xT, b.xT)
        assert np.array_equal(a.sdfT, b.sdfT)
        c = simulate_gbm(GBM_TWO_ASSET, GBM_STRATEGY, 1000, seed=12)
        assert not np.array_equal(a.xT, c.xT)


def _flat_rate_sircev(**overrides):
    base = dict(
        mu=np.array([0.02, 0.02]),
        sigma=np.array([1e-8, 1e-8]),
        beta=np.array([0.0, 0.0]),
        rho=np.array([[1.0, 0.25, 0.0], [0.25, 1.0, 0.0], [0.0, 0.0, 1.0]]),
        r0=0.02, kappaP=1.0, thetaP=0.02, sigma_r=1e-8,
        kappaQ=1.0, thetaQ=0.02, s0=np.array([1.0, 2.0]), T=5.0,
    )
    base.update(overrides)
    return SirCevParams(**base)


class TestSirCev:
    def test_no_risk_limit(self):
        # all volatilities ~0 with the market price of risk held at zero
        # (mu = r0 = theta, matching Q-parameters) so the SDF stays finite;
        # delta = 0 leaves wealth compounding at the flat ODE rate path
        params = _flat_rate_sircev()
        strat = Strategy(delta=np.zeros(3), x0=1.5)
        ps = simulate_sir_cev(params, strat, 200, seed=5)
        assert np.allclose(ps.xT, 1.5 * np.exp(0.02 * 5.0), rtol=1e-5)
        assert np.allclose(ps.sdfT, np.exp(-0.02 * 5.0), rtol=1e-4)

    def test_beta_zero_flat_rate_degenerates_to_gbm(self):
        # CEV exponent 0 and a frozen rate reproduce the closed-form model
        params = _flat_rate_sircev(
            mu=np.array([0.05, 0.06]), sigma=np.array([0.1, 0.12]),
            r0=0.01, thetaP=0.01, thetaQ=0.01, T=1.0)
        strat = Strategy(delta=np.array([0.25, 0.75, 0.0]), x0=1.0)
        cev = simulate_sir_cev(params, strat, 50_000, n_steps=260, seed=9)

        gbm_params = GbmParams(mu=[0.05, 0.06], sigma=[0.1, 0.12],
                               rho=[[1.0, 0.25], [0.25, 1.0]], r=0.01,
                               s0=[1.0, 2.0], T=1.0)
        gbm = simulate_gbm(gbm_params, Strategy(delta=[0.25, 0.75], x0=1.0),
                           50_000, seed=10)
        for stat in (np.mean, np.std):
            a, b = stat(cev.xT), stat(gbm.xT)
            se = np.hypot(cev.xT.std() / np.sqrt(cev.n_paths),
                          gbm.xT.std() / np.sqrt(gbm.n_paths))
            assert abs(a - b) <= 3 * se + 1e-4

    def test_reference_setup_martingales(self, sircev_paths):
        assert martingale_gap(sircev_paths) <= 3.0

    def test_budget_martingale(self, sircev_paths):
        prod = sircev_paths.sdfT * sircev_paths.xT
        se = prod.std() / np.sqrt(sircev_paths.n_paths)
        assert abs(prod.mean() - 1.0) <= 3 * se

    def test_positivity(self, sircev_paths):
        assert np.all(sircev_paths.xT > 0)
        assert np.all(sircev_paths.sdfT > 0)

    def test_reproducible(self):
        kw = dict(n_steps=260, seed=21)
        a = simulate_sir_cev(SIRCEV_THREE_ASSET, SIRCEV_STRATEGY, 400, **kw)
        b = simulate_sir_cev(SIRCEV_THREE_ASSET, SIRCEV_STRATEGY, 400, **kw)
        assert np.array_equal(a.xT, b.xT)
        assert np.array_equal(a.sdfT, b.sdfT)

    def test_unrecoverable_leverage_raises(self):
        # 50x leverage forces the wealth through zero at every resolution
        params = _flat_rate_sircev(mu=np.array([0.05, 0.05]),
                                   sigma=np.array([0.8, 0.8]), T=1.0)
        strat = Strategy(delta=np.array([50.0, 0.0, 0.0]), x0=1.0)
        with pytest.raises(SimulationError):
            simulate_sir_cev(params, strat, 400, n_steps=52, seed=13)


class TestPathSetExport:
    def test_csv_round_trip(self, tmp_path):
        ps = simulate_gbm(GBM_TWO_ASSET, GBM_STRATEGY, 50, seed=4)
        out = tmp_path / "paths.csv"
        ps.to_csv(out)
        header, cols = read_csv(out)
        assert header == ["path_id", "x_T", "sdf_T"]
        assert np.array_equal(cols["x_T"], ps.xT)
        assert np.array_equal(cols["sdf_T"], ps.sdfT)
