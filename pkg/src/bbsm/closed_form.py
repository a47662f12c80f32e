"""Closed-form and quasi-closed-form option prices.

Covers the lognormal (proportional-only) limit, the arithmetic limit with a
linearly accruing riskless account, and the general quasi-closed call price:
a deterministic discount prefactor times an expectation of the terminal
payoff under the bond-unit risk-neutral measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contracts import Diagnostics, PriceResult, mean_and_se
from .errors import NonPositiveForwardDenominator
from .model import _beta_grid, deflators, ensure_maturity, simulate_terminal
from .params import EPS_RATE, Coefficients, ModelParams, as_schedule
from .rng import standard_normals

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def norm_cdf(x: float) -> float:
    """Standard normal CDF via erfc (relative error well below 1e-12)."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT_2PI


def bsm_call(
    a0: float,
    k: float,
    r: float,
    sigma: float,
    t_mat: float,
    dividend_yield: float = 0.0,
) -> float:
    """Lognormal European call with continuous dividend yield."""
    if a0 <= 0.0 or k <= 0.0:
        raise ValueError("spot and strike must be positive")
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    if t_mat <= 0.0:
        raise ValueError("t_mat must be positive")
    vol = sigma * math.sqrt(t_mat)
    d1 = (math.log(a0 / k) + (r - dividend_yield + 0.5 * sigma * sigma) * t_mat) / vol
    d2 = d1 - vol
    return a0 * math.exp(-dividend_yield * t_mat) * norm_cdf(d1) - k * math.exp(
        -r * t_mat
    ) * norm_cdf(d2)


def bsm_put(
    a0: float,
    k: float,
    r: float,
    sigma: float,
    t_mat: float,
    dividend_yield: float = 0.0,
) -> float:
    """Lognormal European put, obtained from the call through parity."""
    call = bsm_call(a0, k, r, sigma, t_mat, dividend_yield)
    return call - a0 * math.exp(-dividend_yield * t_mat) + k * math.exp(-r * t_mat)


@dataclass(frozen=True)
class MbCallInputs:
    """Inputs of the arithmetic-limit call price (mu = sigma = r = 0).

    The forward-level denominator a0 + rho*t_mat must be positive.
    """

    a0: float
    k: float
    t_mat: float
    v: float
    rho: float

    def __post_init__(self):
        if self.a0 <= 0.0:
            raise ValueError("a0 must be positive")
        if self.t_mat <= 0.0:
            raise ValueError("t_mat must be positive")
        if self.v <= 0.0:
            raise ValueError("v must be positive")
        if not math.isfinite(self.k):
            raise ValueError("strike must be finite")
        if self.a0 + self.rho * self.t_mat <= 0.0:
            raise NonPositiveForwardDenominator(
                f"a0 + rho*T = {self.a0 + self.rho * self.t_mat:g} must be positive"
            )


def mb_call(inputs: MbCallInputs) -> float:
    """Arithmetic-limit call price a*CDF(a/b) + b*PDF(a/b).

    a is the discounted moneyness a0 - a0*k/(a0 + rho*T) and b the standard
    deviation of the discounted terminal price, v*a0*sqrt((1/rho)(1/a0 -
    1/(a0 + rho*T))), which simplifies to v*sqrt(a0*T/(a0 + rho*T)) and is
    therefore positive for rho of either sign while a0 + rho*T > 0.
    """
    if abs(inputs.rho) <= EPS_RATE:
        return mb_call_rho0(inputs.a0, inputs.k, inputs.v, inputs.t_mat)
    level = inputs.a0 + inputs.rho * inputs.t_mat
    a = inputs.a0 - inputs.a0 * inputs.k / level
    b = inputs.v * math.sqrt(inputs.a0 * inputs.t_mat / level)
    z = a / b
    return max(0.0, a * norm_cdf(z) + b * norm_pdf(z))


def mb_call_rho0(a0: float, k: float, v: float, t_mat: float) -> float:
    """rho -> 0 limit of the arithmetic call price (flat riskless account)."""
    if v <= 0.0 or t_mat <= 0.0:
        raise ValueError("v and t_mat must be positive")
    spread = v * math.sqrt(t_mat)
    z = (a0 - k) / spread
    return max(0.0, (a0 - k) * norm_cdf(z) + spread * norm_pdf(z))


def _integral_terminal(
    params: ModelParams,
    t_mat: float,
    n_paths: int,
    n_steps: int,
    seed: int,
) -> np.ndarray:
    """Terminal prices from the variation-of-constants representation.

    A_T = eta(0,T) * [A0 - v*sigma * sum eta(0,s)^{-1} ds
                          + v * sum eta(0,s)^{-1} dB_s]
    with eta(0,s) = (beta_s/beta_0) * exp(-sigma^2 s/2 + sigma B_s), using
    left-endpoint sums.  A deliberately different discretization from the
    Euler scheme, kept as a cross-check of the quasi-closed price.
    """
    times = t_mat * np.arange(n_steps + 1) / n_steps
    beta = _beta_grid(params, times)
    beta0 = params.beta0
    dt = t_mat / n_steps
    sqrt_dt = math.sqrt(dt)
    path_idx = np.arange(n_paths, dtype=np.uint64)
    brownian = np.zeros(n_paths)
    sum_ds = np.zeros(n_paths)
    sum_db = np.zeros(n_paths)
    sig = params.sigma
    for k in range(n_steps):
        eta_inv = (beta0 / beta[k]) * np.exp(
            0.5 * sig * sig * times[k] - sig * brownian
        )
        db = sqrt_dt * standard_normals(seed, path_idx, k)
        sum_ds += eta_inv * dt
        sum_db += eta_inv * db
        brownian += db
    eta_t = (beta[-1] / beta0) * np.exp(-0.5 * sig * sig * t_mat + sig * brownian)
    return eta_t * (params.a0 - params.v * sig * sum_ds + params.v * sum_db)


def bbsm_call_quasi(
    params: Coefficients,
    k: float,
    t_mat: float,
    n_paths: int = 100_000,
    n_steps: int = None,
    seed: int = 0,
    representation: str = "sde",
) -> PriceResult:
    """Quasi-closed call price: deterministic discount prefactor times a Monte
    Carlo estimate of the expected payoff under the bond-unit risk-neutral
    measure.

    representation="sde" evolves the risk-neutral SDE directly (default);
    "integral" uses the explicit variation-of-constants terminal law on the
    same grid, as an independent discretization cross-check.
    """
    ensure_maturity(params, t_mat)
    if n_steps is None:
        n_steps = max(1, math.ceil(252.0 * t_mat))
    prefactor = deflators(params, t_mat).d1
    violations = 0
    if representation == "sde":
        sample = simulate_terminal(
            params, "q1", t_mat=t_mat, n_paths=n_paths, n_steps=n_steps, seed=seed
        )
        terminal = sample.values
        violations = sample.psi_violations
        method = "quasi-closed"
    elif representation == "integral":
        sched = as_schedule(params)
        if len(sched.params) != 1:
            raise ValueError("integral representation requires constant parameters")
        terminal = _integral_terminal(sched.params[0], t_mat, n_paths, n_steps, seed)
        method = "quasi-closed-integral"
    else:
        raise ValueError(f"unknown representation {representation!r}")
    payoff = np.maximum(terminal - k, 0.0)
    mean, se = mean_and_se(payoff)
    return PriceResult(
        price=prefactor * mean,
        std_error=prefactor * se,
        method=method,
        n_paths=n_paths,
        n_steps=n_steps,
        seed=seed,
        diagnostics=Diagnostics(psi_violations=violations),
    )
