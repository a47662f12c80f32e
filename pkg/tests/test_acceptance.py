"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
report lines.  Statistical checks use fixed seeds, so reruns are
deterministic.
"""

import math
import time

import numpy as np
from scipy import integrate

from bbsm import (
    MaturityRestriction,
    MbCallInputs,
    MCConfig,
    ModelParams,
    NonPositiveRiskless,
    OptionSpec,
    PerpetualSpec,
    PriceSeries,
    PerpetualUnsupported,
    Quote,
    QuoteSheet,
    TreeSpec,
    bsm_call,
    calibrate_drift,
    calibrate_riskless,
    calibrate_vol,
    deflators,
    drift_ratio,
    forward_price,
    ForwardSpec,
    futures_price,
    growth_coefficient,
    growth_coefficient_direct,
    mb_call,
    mb_call_rho0,
    pde_residual,
    positivity_horizon,
    price_q1,
    riskless_beta,
    simulate_paths,
    simulate_terminal,
    stationary_exponent,
    tree_price,
    zcb_price,
)
from support import bsm_sub_model, full_model, lognormal_limit_tree, mb_sub_model, mean_se

N_PATHS = 100_000
N_STEPS = 48
STRIKES = (90.0, 100.0, 110.0)
MATURITIES = (0.5, 1.0)
BSM_REF = 10.450583572185565


def report(number, name, ok, detail):
    print(f"[acceptance] criterion {number:02d} {name}: "
          f"{'PASS' if ok else 'FAIL'} ({detail})")
    return ok


def call(strike, maturity):
    return OptionSpec(kind="call", maturity=maturity, strike=strike)


def test_criterion_01_limit_consistency():
    started = time.monotonic()
    bsm = bsm_sub_model(mu=0.1, sigma=0.2, r=0.05)
    mb = mb_sub_model(a=2.0, v=10.0, rho=1.0)
    worst = 0.0
    seed = 100
    for t_mat in MATURITIES:
        for strike in STRIKES:
            seed += 1
            cfg = MCConfig(n_paths=N_PATHS, n_steps=N_STEPS, seed=seed)
            mc = price_q1(bsm, call(strike, t_mat), cfg)
            closed = bsm_call(100.0, strike, 0.05, 0.2, t_mat)
            worst = max(worst, abs(mc.price - closed) / (3.0 * mc.std_error))
            mc = price_q1(mb, call(strike, t_mat), cfg)
            closed = mb_call(MbCallInputs(a0=100.0, k=strike, t_mat=t_mat, v=10.0, rho=1.0))
            worst = max(worst, abs(mc.price - closed) / (3.0 * mc.std_error))
    elapsed = time.monotonic() - started
    ok = worst < 1.0 and elapsed < 30.0
    assert report(1, "limit-consistency", ok, f"max |dev|/3SE = {worst:.2f}, {elapsed:.1f}s")


def test_criterion_02_mb_closed_form_vs_gaussian_integral():
    a0, v, rho, t_mat = 100.0, 10.0, 1.0, 1.0
    sigma_t = math.sqrt(t_mat / (a0 * (a0 + rho * t_mat)))
    rng = np.random.default_rng(7)
    normals = rng.standard_normal(2_000_000)
    worst = 0.0
    for strike in STRIKES:
        terminal = (a0 + rho * t_mat) * (1.0 + v * sigma_t * normals)
        payoff = (a0 / (a0 + rho * t_mat)) * np.maximum(terminal - strike, 0.0)
        mc, se = mean_se(payoff)
        closed = mb_call(MbCallInputs(a0=a0, k=strike, t_mat=t_mat, v=v, rho=rho))
        worst = max(worst, abs(closed - mc) / (3.0 * se))
    base = mb_call_rho0(a0, 100.0, v, t_mat)
    branch_gap = abs(
        mb_call(MbCallInputs(a0=a0, k=100.0, t_mat=t_mat, v=v, rho=1e-9)) - base
    )
    ok = worst < 1.0 and branch_gap < 1e-5
    assert report(
        2, "mb-closed-form", ok,
        f"max |dev|/3SE = {worst:.2f}, rho->0 gap = {branch_gap:.2e}",
    )


def test_criterion_03_binomial_convergence():
    started = time.monotonic()
    p = bsm_sub_model(mu=0.07, sigma=0.2, r=0.05)
    # reference value cross-checked against an independently coded 1e4-step tree
    independent = lognormal_limit_tree(100, 100, 0.05, 0.2, 1.0, n=10_000)
    cross_check = abs(BSM_REF - independent)
    tree_err = abs(
        tree_price(TreeSpec(n=1000, t_mat=1.0, params=p), call(100.0, 1.0)) - BSM_REF
    )
    full = full_model()
    bucketed = tree_price(
        TreeSpec(n=400, t_mat=1.0, params=full), call(100.0, 1.0), mode="bucketed"
    )
    mc = price_q1(full, call(100.0, 1.0), MCConfig(n_paths=N_PATHS, n_steps=64, seed=42))
    mc_gap = abs(bucketed - mc.price) / (3.0 * mc.std_error)
    elapsed = time.monotonic() - started
    ok = cross_check < 5e-3 and tree_err < 0.02 and mc_gap < 1.0 and elapsed < 60.0
    assert report(
        3, "binomial-convergence", ok,
        f"|tree(1000)-ref| = {tree_err:.4f}, ref-crosscheck = {cross_check:.4f}, "
        f"bucketed/MC |dev|/3SE = {mc_gap:.2f}, {elapsed:.1f}s",
    )


def test_criterion_04_convention_split():
    # with rho = 0 the two conventions price path-for-path identically
    p0 = ModelParams(a=1.0, mu=0.05, v=5.0, sigma=0.1, rho=0.0, r=0.03, a0=100.0)
    cfg = dict(t_mat=1.0, n_paths=50_000, n_steps=N_STEPS, seed=77)
    d = deflators(p0, 1.0)
    bond = d.d1 * np.maximum(simulate_terminal(p0, "q1", **cfg).values - 100.0, 0.0)
    bank = d.d2 * np.maximum(simulate_terminal(p0, "q2", **cfg).values - 100.0, 0.0)
    pathwise = float(np.max(np.abs(bond - bank)))

    # with rho = 1 the conventions differ by more than 3 paired SEs
    p1 = full_model()
    d1 = deflators(p1, 1.0)
    accrual = 1.0 * (1.0 - math.exp(-0.03)) / 0.03
    bond1 = d1.d1 * np.maximum(simulate_terminal(p1, "q1", **cfg).values - 100.0, 0.0)
    bank1 = d1.d2 * np.maximum(simulate_terminal(p1, "q2", **cfg).values - 100.0, 0.0) - accrual
    split, split_se = mean_se(bank1 - bond1)
    ok = pathwise < 1e-10 * 100.0 and abs(split) > 3.0 * split_se
    assert report(
        4, "convention-split", ok,
        f"pathwise rho=0 gap = {pathwise:.2e}, rho=1 split = {split:.3f} "
        f"(3SE = {3 * split_se:.3f})",
    )


def test_criterion_05_put_call_parity():
    worst = 0.0
    seed = 500
    for model in (bsm_sub_model(mu=0.1, sigma=0.2, r=0.05), mb_sub_model(a=2.0, v=10.0, rho=1.0)):
        for t_mat in MATURITIES:
            seed += 1
            terminal = simulate_terminal(
                model, "q1", t_mat=t_mat, n_paths=N_PATHS, n_steps=N_STEPS, seed=seed
            ).values
            d1 = deflators(model, t_mat).d1
            discount = zcb_price(model, 0.0, t_mat)
            for strike in STRIKES:
                paired = d1 * (terminal - strike)
                lhs, se = mean_se(paired)
                rhs = 100.0 - strike * discount
                worst = max(worst, abs(lhs - rhs) / (3.0 * se))
    ok = worst < 1.0
    assert report(5, "put-call-parity", ok, f"max |dev|/3SE = {worst:.2f}")


def test_criterion_06_martingale_checks():
    p = full_model()
    d = deflators(p, 1.0)
    q1 = simulate_terminal(p, "q1", t_mat=1.0, n_paths=N_PATHS, n_steps=64, seed=61)
    m1, se1 = mean_se(d.d1 * q1.values)
    q2 = simulate_terminal(p, "q2", t_mat=1.0, n_paths=N_PATHS, n_steps=64, seed=62)
    m2, se2 = mean_se(d.d2 * q2.values)
    dev1 = abs(m1 - 100.0) / (3.0 * se1)
    dev2 = abs(m2 - 100.0) / (3.0 * se2)
    ok = dev1 < 1.0 and dev2 < 1.0
    assert report(
        6, "martingale-checks", ok,
        f"bond-side |dev|/3SE = {dev1:.2f}, bank-side = {dev2:.2f}",
    )


def test_criterion_07_term_structure():
    p = ModelParams(a=0.0, mu=0.2, v=0.0, sigma=0.2, rho=2.0, r=0.05, a0=100.0)
    splice = abs(
        zcb_price(p, 0.0, 2.0) - zcb_price(p, 0.0, 1.0) * zcb_price(p, 1.0, 2.0)
    )
    frozen = abs(zcb_price(p, 0.0, 1.0) - 100.0 / (140.0 * math.exp(0.05) - 40.0))

    def chi_over_beta(u):
        beta = (100.0 + 40.0) * math.exp(0.05 * u) - 40.0
        return (2.0 + 0.05 * beta) / beta

    integral, _ = integrate.quad(chi_over_beta, 0.0, 1.0, epsabs=1e-14)
    quad_gap = abs(zcb_price(p, 0.0, 1.0) - math.exp(-integral))

    full = full_model()
    fut = futures_price(full, 0.0, 1.0, MCConfig(n_paths=N_PATHS, n_steps=N_STEPS, seed=71))
    fwd = forward_price(full, ForwardSpec(t=0.0, t_mat=1.0), 100.0)
    fut_gap = abs(fut.price - fwd) / (3.0 * fut.std_error)
    ok = splice < 1e-12 and frozen < 1e-12 and quad_gap < 1e-12 and fut_gap < 1.0
    assert report(
        7, "term-structure", ok,
        f"splice = {splice:.1e}, quadrature gap = {quad_gap:.1e}, "
        f"futures/forward |dev|/3SE = {fut_gap:.2f}",
    )


def test_criterion_08_perpetual():
    x_grid = np.linspace(60.0, 160.0, 50)
    t_grid = np.linspace(0.0, 1.0, 50)
    linear_params = ModelParams(a=0.0, mu=0.1, v=0.0, sigma=0.2, rho=2.0, r=0.05, a0=100.0)
    linear = pde_residual(
        PerpetualSpec(gamma=1.0, w0=2.0, h0=1.5, params=linear_params), x_grid, t_grid
    )
    prop = ModelParams(a=0.0, mu=0.1, v=0.0, sigma=0.2, rho=0.0, r=0.05, a0=100.0)
    power = pde_residual(
        PerpetualSpec(gamma=stationary_exponent(prop), w0=0.0, h0=1.0, params=prop),
        x_grid,
        t_grid,
    )
    try:
        PerpetualSpec(gamma=1.0, w0=0.0, h0=1.0, params=full_model())
        raises = False
    except PerpetualUnsupported:
        raises = True
    factor_params = ModelParams(a=0.0, mu=0.1, v=0.0, sigma=0.2, rho=1.5, r=0.04, a0=100.0)
    worst_factor = 0.0
    for t in np.linspace(0.0, 4.0, 5):
        d = drift_ratio(factor_params, float(t))
        for gamma in np.linspace(-5.0, 5.0, 101):
            direct = growth_coefficient_direct(factor_params, float(gamma), float(t))
            gap = abs(direct - growth_coefficient(float(gamma), d))
            worst_factor = max(worst_factor, gap / max(1.0, abs(direct)))
    ok = linear < 1e-6 and power < 1e-6 and raises and worst_factor < 1e-12
    assert report(
        8, "perpetual", ok,
        f"linear residual = {linear:.1e}, power residual = {power:.1e}, "
        f"v!=0 raises = {raises}, factorization gap = {worst_factor:.1e}",
    )


def test_criterion_09_calibration_round_trip():
    started = time.monotonic()
    truth = ModelParams(a=12.0, mu=0.12, v=1.5, sigma=0.02, rho=0.0, r=0.0, a0=40.0)
    worst_drift = worst_vol = 0.0
    for seed in range(5):
        ps = simulate_paths(
            truth, "natural", t_mat=2000 / 252.0, n_paths=1, n_steps=2000, seed=seed
        )
        series = PriceSeries(times=ps.times.copy(), prices=ps.paths[0].copy())
        drift = calibrate_drift(series, 10)
        vol = calibrate_vol(series, 10)
        xs = np.linspace(series.prices.min(), series.prices.max(), 200)
        drift_fit = drift.params["a"] + drift.params["mu"] * xs
        drift_true = truth.a + truth.mu * xs
        worst_drift = max(
            worst_drift,
            math.sqrt(np.mean((drift_fit - drift_true) ** 2) / np.mean(drift_true**2)),
        )
        vol_fit = vol.params["v"] + vol.params["sigma"] * xs
        vol_true = truth.v + truth.sigma * xs
        worst_vol = max(
            worst_vol,
            math.sqrt(np.mean((vol_fit - vol_true) ** 2) / np.mean(vol_true**2)),
        )

    fixed = (1.0, 0.05, 5.0, 0.1, 0.55)
    generator = ModelParams(
        a=1.0, mu=0.05, v=5.0, sigma=0.1, rho=1.0, r=0.03, a0=100.0
    )
    quotes = []
    for t_mat in (0.5, 1.0):
        for strike in (90.0, 95.0, 100.0, 110.0):
            px = tree_price(
                TreeSpec(n=10, t_mat=t_mat, params=generator, p_n=0.55),
                call(strike, t_mat),
            )
            quotes.append(Quote(maturity=t_mat, strike=strike, price=px, kind="call"))
    fit = calibrate_riskless(QuoteSheet(quotes=tuple(quotes), a0=100.0), fixed, tree_n=10)
    r_err = abs(fit.params["r"] - 0.03)
    elapsed = time.monotonic() - started
    ok = (
        worst_drift < 0.25
        and worst_vol < 0.25
        and fit.objective < 1e-8
        and r_err < 1e-3
        and elapsed < 120.0
    )
    assert report(
        9, "calibration-round-trip", ok,
        f"worst drift L2 = {worst_drift:.3f}, worst vol L2 = {worst_vol:.3f}, "
        f"riskless objective = {fit.objective:.1e}, |r_hat - r*| = {r_err:.1e}, "
        f"{elapsed:.1f}s",
    )


def test_criterion_10_guard_rails():
    p = ModelParams(a=0.0, mu=0.3, v=0.0, sigma=0.2, rho=-6.0, r=0.05, a0=100.0)
    bound = (1.0 / 0.05) * math.log((6.0 / 0.05) / (6.0 / 0.05 - 100.0))
    horizon_exact = abs(positivity_horizon(p) - bound) < 1e-12 * bound

    below_ok = zcb_price(p, 0.0, bound * (1.0 - 1e-6)) > 0.0
    try:
        zcb_price(p, 0.0, bound * (1.0 + 1e-6))
        above_raises = False
    except MaturityRestriction:
        above_raises = True

    beta_below_ok = riskless_beta(p, bound - 1e-4) > 0.0
    try:
        riskless_beta(p, bound + 1e-4)
        beta_above_raises = False
    except NonPositiveRiskless:
        beta_above_raises = True
    ok = horizon_exact and below_ok and above_raises and beta_below_ok and beta_above_raises
    assert report(
        10, "guard-rails", ok,
        f"analytic bound matched = {horizon_exact}, maturity guard two-sided = "
        f"{below_ok and above_raises}, positivity guard two-sided = "
        f"{beta_below_ok and beta_above_raises}",
    )
