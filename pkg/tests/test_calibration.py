"""Drift/vol/riskless calibration, up-probability estimation, score adjustment."""

import io

import numpy as np
import pytest

from bbsm import (
    EsgInput,
    InsufficientData,
    ModelParams,
    PriceSeries,
    Quote,
    QuoteSheet,
    bsm_call,
    calibrate_drift,
    calibrate_riskless,
    calibrate_vol,
    esg_adjust,
    estimate_pn,
    load_price_series,
    load_quote_sheet,
    simulate_paths,
)
from bbsm.errors import ConfigError, ZeroIndexScore

from fixture_gen import QUOTE_PN, QUOTE_TREE_N, tree_quotes


def synthetic(params, n_steps, seed):
    ps = simulate_paths(
        params, "natural", t_mat=n_steps / 252.0, n_paths=1, n_steps=n_steps, seed=seed
    )
    return PriceSeries(times=ps.times.copy(), prices=ps.paths[0].copy())


class TestDrift:
    def test_noiseless_linear_series(self):
        times = np.arange(300) / 252.0
        prices = 100.0 + 4.0 * times
        res = calibrate_drift(PriceSeries(times=times, prices=prices), 10)
        assert res.params["a"] == pytest.approx(4.0, abs=1e-9)
        assert res.params["mu"] == pytest.approx(0.0, abs=1e-9)

    def test_constant_series(self):
        times = np.arange(100) / 252.0
        res = calibrate_drift(PriceSeries(times=times, prices=np.full(100, 55.0)), 10)
        assert res.params["a"] == 0.0
        assert res.params["mu"] == 0.0

    def test_well_identified_design_recovers_the_drift_function(self):
        # strong drift signal relative to diffusion noise; the fitted line is
        # compared in relative L2 over the observed price range
        p = ModelParams(a=12.0, mu=0.12, v=1.5, sigma=0.02, rho=0.0, r=0.0, a0=40.0)
        series = synthetic(p, 2000, seed=0)
        res = calibrate_drift(series, 10)
        xs = np.linspace(series.prices.min(), series.prices.max(), 200)
        fitted = res.params["a"] + res.params["mu"] * xs
        truth = p.a + p.mu * xs
        rel_l2 = np.sqrt(np.mean((fitted - truth) ** 2) / np.mean(truth**2))
        assert rel_l2 < 0.25

    def test_low_signal_point_is_scale_sane(self):
        # At (a=1, mu=0.05, v=5, sigma=0.1) the drift is informationally
        # unidentifiable at tight tolerances from 2000 daily points (the
        # diffusion term dominates the Fisher information); assert only that
        # the estimator stays on a sane scale.  See notes in the repo docs.
        p = ModelParams(a=1.0, mu=0.05, v=5.0, sigma=0.1, rho=0.0, r=0.0, a0=100.0)
        mus = [calibrate_drift(synthetic(p, 2000, s), 10).params["mu"] for s in range(5)]
        assert abs(float(np.mean(mus))) < 1.5

    def test_insufficient_data(self):
        times = np.arange(8) / 252.0
        with pytest.raises(InsufficientData):
            calibrate_drift(PriceSeries(times=times, prices=np.arange(8.0) + 50), 10)

    def test_scale_equivariance(self):
        p = ModelParams(a=12.0, mu=0.12, v=1.5, sigma=0.02, rho=0.0, r=0.0, a0=40.0)
        base = synthetic(p, 400, seed=1)
        scaled = PriceSeries(times=base.times, prices=3.0 * base.prices)
        d0 = calibrate_drift(base, 10)
        d3 = calibrate_drift(scaled, 10)
        assert d3.params["a"] == pytest.approx(3.0 * d0.params["a"], rel=1e-9)
        assert d3.params["mu"] == pytest.approx(d0.params["mu"], rel=1e-9, abs=1e-12)


class TestVol:
    def test_proportional_noise(self):
        p = ModelParams(a=0.0, mu=0.08, v=0.0, sigma=0.2, rho=0.0, r=0.0, a0=100.0)
        for seed in range(3):
            res = calibrate_vol(synthetic(p, 2000, seed), 10)
            assert abs(res.params["sigma"] - 0.2) / 0.2 < 0.2
            assert 0.0 <= res.params["v"] < 3.0

    def test_additive_noise(self):
        p = ModelParams(a=5.0, mu=0.0, v=10.0, sigma=0.0, rho=0.0, r=0.0, a0=100.0)
        for seed in range(3):
            res = calibrate_vol(synthetic(p, 2000, seed), 10)
            assert abs(res.params["v"] - 10.0) / 10.0 < 0.2
            assert 0.0 <= res.params["sigma"] < 0.02

    def test_deterministic_series(self):
        times = np.arange(200) / 252.0
        res = calibrate_vol(PriceSeries(times=times, prices=100.0 + 2.0 * times), 10)
        # the window stds carry float noise from the time arithmetic
        assert res.params["v"] == pytest.approx(0.0, abs=1e-9)
        assert res.params["sigma"] == pytest.approx(0.0, abs=1e-12)

    def test_nonnegativity_is_enforced(self):
        p = ModelParams(a=0.0, mu=0.08, v=0.0, sigma=0.2, rho=0.0, r=0.0, a0=100.0)
        res = calibrate_vol(synthetic(p, 600, 7), 10)
        assert res.params["v"] >= 0.0
        assert res.params["sigma"] >= 0.0

    def test_scale_equivariance(self):
        p = ModelParams(a=0.0, mu=0.08, v=2.0, sigma=0.1, rho=0.0, r=0.0, a0=100.0)
        base = synthetic(p, 400, seed=2)
        scaled = PriceSeries(times=base.times, prices=3.0 * base.prices)
        v0 = calibrate_vol(base, 10)
        v3 = calibrate_vol(scaled, 10)
        assert v3.params["v"] == pytest.approx(3.0 * v0.params["v"], rel=1e-9, abs=1e-9)
        assert v3.params["sigma"] == pytest.approx(
            v0.params["sigma"], rel=1e-9, abs=1e-12
        )


class TestUpProbability:
    def test_strictly_increasing_series_clips(self):
        times = np.arange(51) / 252.0
        series = PriceSeries(times=times, prices=np.linspace(100, 110, 51))
        assert estimate_pn(series) == pytest.approx(1.0 - 1.0 / 50.0)

    def test_alternating_changes(self):
        times = np.arange(41) / 252.0
        prices = 100.0 + (np.arange(41) % 2)  # changes alternate +1, -1
        series = PriceSeries(times=times, prices=prices)
        assert estimate_pn(series) == pytest.approx(0.5)

    def test_bernoulli_walk(self):
        rng = np.random.default_rng(3)
        steps = np.where(rng.random(5000) < 0.6, 1.0, -1.0)
        prices = np.concatenate([[1000.0], 1000.0 + np.cumsum(steps)])
        series = PriceSeries(times=np.arange(5001) / 252.0, prices=prices)
        assert estimate_pn(series) == pytest.approx(0.6, abs=0.02)

    def test_flat_steps_count_half(self):
        times = np.arange(5) / 252.0
        series = PriceSeries(times=times, prices=np.array([1.0, 1.0, 2.0, 2.0, 3.0]))
        # changes: 0, +1, 0, +1 -> (2 + 0.5*2)/4 = 0.75
        assert estimate_pn(series) == pytest.approx(0.75)

    def test_single_change_degenerates_to_half(self):
        series = PriceSeries(
            times=np.array([0.0, 1.0 / 252.0]), prices=np.array([100.0, 101.0])
        )
        # with one change the clip interval collapses onto 1/2
        assert estimate_pn(series) == 0.5


class TestRisklessFit:
    def test_recovers_generator_parameters_from_tree_quotes(self):
        fixed = (1.0, 0.05, 5.0, 0.1, QUOTE_PN)
        quotes = tuple(
            Quote(maturity=t, strike=k, price=px, kind=kind)
            for t, k, px, kind in tree_quotes()
        )
        sheet = QuoteSheet(quotes=quotes, a0=100.0)
        res = calibrate_riskless(sheet, fixed, tree_n=QUOTE_TREE_N)
        assert res.objective < 1e-8
        assert res.params["rho"] == pytest.approx(1.0, abs=1e-4)
        assert res.params["r"] == pytest.approx(0.03, abs=1e-3)
        assert not res.constraint_active

    def test_drift_dominance_constraint_respected(self):
        fixed = (1.0, 0.05, 5.0, 0.1, QUOTE_PN)
        quotes = tuple(
            Quote(maturity=t, strike=k, price=px, kind=kind)
            for t, k, px, kind in tree_quotes()
        )
        res = calibrate_riskless(QuoteSheet(quotes=quotes, a0=100.0), fixed)
        chi0 = res.params["rho"] + res.params["r"] * 100.0
        assert chi0 < 1.0 + 0.05 * 100.0

    def test_lognormal_quotes_identify_the_effective_rate(self):
        # rho and r enter desk-scale quotes only through r + rho/beta_t, whose
        # curvature across maturities is tiny, so the identified quantity is
        # the effective short rate at spot; the individual split is flat
        # along r + rho/beta0 = const at the tree's discretization error.
        fixed = (0.0, 0.08, 0.0, 0.2, 0.5)
        r_true = 0.04
        quotes = tuple(
            Quote(maturity=t, strike=k, price=bsm_call(100.0, k, r_true, 0.2, t), kind="call")
            for t in (0.5, 3.0)
            for k in (90.0, 110.0)
        )
        sheet = QuoteSheet(quotes=quotes, a0=100.0)
        res = calibrate_riskless(sheet, fixed, tree_n=200)
        effective = res.params["r"] + res.params["rho"] / 100.0
        assert abs(effective - r_true) < 1e-3
        assert abs(res.params["rho"]) < 1.0

    def test_single_quote_rejected(self):
        sheet = QuoteSheet(
            quotes=(Quote(maturity=1.0, strike=100.0, price=8.0, kind="call"),),
            a0=100.0,
        )
        with pytest.raises(InsufficientData):
            calibrate_riskless(sheet, (1.0, 0.05, 5.0, 0.1, 0.5))


class TestScoreAdjustment:
    def test_zero_affinity(self):
        assert esg_adjust(EsgInput(s=100, z_company=20, z_index=50, gamma_esg=0)) == 100

    def test_matching_scores(self):
        assert esg_adjust(EsgInput(s=100, z_company=50, z_index=50, gamma_esg=2)) == 100

    def test_negative_adjusted_price(self):
        value = esg_adjust(EsgInput(s=100, z_company=20, z_index=50, gamma_esg=2))
        assert value == pytest.approx(-20.0, rel=1e-14)

    def test_zero_index_score(self):
        with pytest.raises(ZeroIndexScore):
            EsgInput(s=100, z_company=20, z_index=0, gamma_esg=1)

    def test_score_ranges(self):
        with pytest.raises(ValueError):
            EsgInput(s=100, z_company=120, z_index=50, gamma_esg=1)


class TestCsvIo:
    def test_price_series_round_trip(self):
        text = "date,price\n2024-01-02,100.0\n2024-01-03,101.5\n2024-01-04,99.75\n"
        series = load_price_series(io.StringIO(text))
        assert series.prices.tolist() == [100.0, 101.5, 99.75]
        assert series.times[1] == pytest.approx(1.0 / 252.0)

    def test_bad_header(self):
        with pytest.raises(ConfigError):
            load_price_series(io.StringIO("time,price\n1,100\n"))

    def test_empty_file(self):
        with pytest.raises(ConfigError):
            load_price_series(io.StringIO(""))
        with pytest.raises(ConfigError):
            load_price_series(io.StringIO("date,price\n"))

    def test_nonincreasing_dates(self):
        text = "date,price\n2024-01-03,100\n2024-01-02,101\n"
        with pytest.raises(ConfigError):
            load_price_series(io.StringIO(text))

    def test_quote_sheet(self):
        text = (
            "maturity_years,strike,price,kind\n"
            "0.5,95,9.1,call\n"
            "1.0,100,7.4,put\n"
        )
        sheet = load_quote_sheet(io.StringIO(text), spot=100.0)
        assert len(sheet.quotes) == 2
        assert sheet.quotes[1].kind == "put"

    def test_bad_quote_kind(self):
        text = "maturity_years,strike,price,kind\n1.0,100,7.4,swap\n"
        with pytest.raises(ConfigError):
            load_quote_sheet(io.StringIO(text), spot=100.0)
