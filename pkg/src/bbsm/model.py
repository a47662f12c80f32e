"""Riskless account, deflators, no-arbitrage checks, and path simulation.

All rates in scope are deterministic (constant or piecewise-constant), so the
riskless account ``beta`` and the three deflators are closed-form:

* ``beta(t) = beta0*exp(r*t) + rho*t*phi1(r*t)`` per segment, with
  ``phi1(x) = expm1(x)/x`` (the exact limit ``beta0 + rho*t`` at ``r = 0``);
* multiplicative deflator ``d1(t) = beta0/beta(t)`` (since
  ``d log beta = (chi/beta) dt``);
* bank deflator ``d2(t) = exp(-int_0^t r)``; accrual deflator
  ``d3(t) = exp(-int_0^t rho/beta) = (beta0/beta(t)) * exp(int_0^t r)``.

Simulation uses Euler-Maruyama with counter-based normals keyed on
``(seed, path, step)``, so identical inputs give bit-identical output
regardless of batching.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArbitrageViolation,
    DegenerateDiffusion,
    ExcessPsiViolations,
    MaturityRestriction,
    NonPositiveRiskless,
)
from .params import Coefficients, EPS_RATE, ModelParams, as_schedule
from .rng import standard_normals

MEASURES = ("natural", "q1", "q2")

#: Fraction of (path, step) states allowed to hit a nonpositive diffusion
#: coefficient before the whole run is rejected.
PSI_VIOLATION_BUDGET = 1e-3

Deflators = namedtuple("Deflators", ["d1", "d2", "d3"])


def _phi1(x):
    """expm1(x)/x, continuous through x = 0."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = x != 0.0
    out[nz] = np.expm1(x[nz]) / x[nz]
    if out.ndim == 0:
        return float(out)
    return out


def _segment_beta(p: ModelParams, beta_start: float, tau):
    """Riskless value after elapsed time tau within one constant segment."""
    tau = np.asarray(tau, dtype=float)
    return beta_start * np.exp(p.r * tau) + p.rho * tau * _phi1(p.r * tau)


def _beta_grid(params: Coefficients, times: np.ndarray) -> np.ndarray:
    """Riskless account on a grid of times (no positivity check)."""
    times = np.asarray(times, dtype=float)
    sched = as_schedule(params)
    out = np.empty_like(times)
    beta_start = sched.beta0
    horizon = float(times.max()) if times.size else 0.0
    for start, end, p in sched.segments(max(horizon, 0.0) + 1.0):
        sel = (times >= start) & (times <= end)
        out[sel] = _segment_beta(p, beta_start, times[sel] - start)
        if end != math.inf:
            beta_start = float(_segment_beta(p, beta_start, end - start))
    return out


def riskless_beta(params: Coefficients, t) -> float:
    """Riskless account value at time t; raises if it is not strictly positive."""
    scalar = np.isscalar(t) or np.ndim(t) == 0
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < 0.0):
        raise ValueError("t must be nonnegative")
    values = _beta_grid(params, times)
    if np.any(values <= 0.0):
        bad = float(times[values <= 0.0][0])
        raise NonPositiveRiskless(
            f"riskless account is nonpositive at t={bad:g} "
            f"(positivity horizon {positivity_horizon(params):g})"
        )
    return float(values[0]) if scalar else values


def rate_integral(params: Coefficients, t) -> np.ndarray:
    """Cumulative proportional rate int_0^t r(s) ds on a scalar or grid."""
    scalar = np.isscalar(t) or np.ndim(t) == 0
    times = np.atleast_1d(np.asarray(t, dtype=float))
    sched = as_schedule(params)
    out = np.zeros_like(times)
    horizon = float(times.max()) if times.size else 0.0
    for start, end, p in sched.segments(max(horizon, 0.0) + 1.0):
        seg_len = end - start if end != math.inf else None
        out += p.r * np.clip(times - start, 0.0, seg_len)
    return float(out[0]) if scalar else out


def _segment_horizon(p: ModelParams, beta_start: float) -> float:
    """First elapsed time at which beta hits zero in one segment (inf if never)."""
    if abs(p.r) <= EPS_RATE:
        return beta_start / -p.rho if p.rho < 0.0 else math.inf
    c = p.rho / p.r
    denom = beta_start + c
    if denom == 0.0:
        return math.inf
    ratio = c / denom
    if ratio <= 0.0:
        return math.inf
    t = math.log(ratio) / p.r
    return t if t > 0.0 else math.inf


def positivity_horizon(params: Coefficients) -> float:
    """First time the riskless account would hit zero; +inf if it never does.

    For a single constant segment with r > 0, rho < 0 and beta0 < |rho|/r this
    is the analytic bound (1/r)*log((|rho|/r) / (|rho|/r - beta0)).
    """
    sched = as_schedule(params)
    beta_start = sched.beta0
    for start, end, p in sched.segments(math.inf):
        h = _segment_horizon(p, beta_start)
        length = end - start
        if h <= length:
            return start + h
        if end == math.inf:
            return math.inf
        beta_start = float(_segment_beta(p, beta_start, length))
    return math.inf


def ensure_maturity(params: Coefficients, t_mat: float) -> None:
    """Reject maturities at or beyond the riskless-positivity horizon."""
    horizon = positivity_horizon(params)
    if t_mat >= horizon:
        raise MaturityRestriction(
            f"maturity {t_mat:g} exceeds the riskless-positivity horizon {horizon:g}"
        )


def deflator_grid(params: Coefficients, times) -> Deflators:
    """Deflator triple (d1, d2, d3) on a time grid.

    d2 multiplies prices in the bank-account convention, d1 = d2*d3 in the
    bond-unit convention.  All three are deterministic because rates are.
    """
    times = np.asarray(times, dtype=float)
    beta = _beta_grid(params, times)
    if np.any(beta <= 0.0):
        raise NonPositiveRiskless("riskless account nonpositive on the requested grid")
    r_int = rate_integral(params, times)
    beta0 = as_schedule(params).beta0
    d1 = beta0 / beta
    d2 = np.exp(-r_int)
    d3 = beta0 * np.exp(r_int) / beta
    return Deflators(d1, d2, d3)


def deflators(params: Coefficients, t: float) -> Deflators:
    """Deflator triple at a single time, as floats."""
    grid = deflator_grid(params, [float(t)])
    return Deflators(float(grid.d1[0]), float(grid.d2[0]), float(grid.d3[0]))


def market_price_of_risk(params: ModelParams, a_t: float, beta_t: float) -> float:
    """Excess drift per unit diffusion, (phi - chi)/psi; must be positive."""
    psi = params.psi(a_t)
    if psi <= 0.0:
        raise DegenerateDiffusion(f"psi = {psi:g} <= 0 at price {a_t:g}")
    phi = params.phi(a_t)
    chi = params.chi(beta_t)
    if phi <= chi:
        raise ArbitrageViolation(
            f"risky drift {phi:g} does not exceed riskless drift {chi:g}"
        )
    return (phi - chi) / psi


@dataclass(frozen=True)
class PathSet:
    """Simulated risky-asset paths plus the deterministic deflator grids.

    ``paths`` has shape (n_paths, n_steps+1); the deflators are shared across
    paths because rates are deterministic in this model family.
    """

    times: np.ndarray
    paths: np.ndarray
    beta: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    psi_violations: int
    measure: str
    seed: int

    def __post_init__(self):
        for arr in (self.times, self.paths, self.beta, self.d1, self.d2, self.d3):
            arr.setflags(write=False)

    @property
    def terminal(self) -> np.ndarray:
        return self.paths[:, -1]


TerminalSample = namedtuple("TerminalSample", ["values", "psi_violations"])


def default_steps(t_span: float) -> int:
    """Default Euler resolution: 252 steps per year, at least one."""
    return max(1, math.ceil(252.0 * t_span))


def _drift_rate(p: ModelParams, measure: str, beta_k: float, dividend_yield: float):
    """Per-step drift as (additive, proportional) pair for dA = (add + prop*A)dt."""
    if measure == "natural":
        return p.a, p.mu - dividend_yield
    if measure == "q1":
        return 0.0, p.r + p.rho / beta_k - dividend_yield
    if measure == "q2":
        return 0.0, p.r - dividend_yield
    raise ValueError(f"unknown measure {measure!r}; expected one of {MEASURES}")


def _march(
    params: Coefficients,
    measure: str,
    times: np.ndarray,
    n_paths: int,
    seed: int,
    dividend_yield: float,
    x0: float,
    beta: np.ndarray,
    keep_paths: bool,
):
    sched = as_schedule(params)
    n_steps = len(times) - 1
    path_idx = np.arange(n_paths, dtype=np.uint64)
    state = np.full(n_paths, float(x0))
    stored = np.empty((n_paths, n_steps + 1)) if keep_paths else None
    if keep_paths:
        stored[:, 0] = state
    violations = 0
    for k in range(n_steps):
        dt = times[k + 1] - times[k]
        sqrt_dt = math.sqrt(dt)
        p = sched.at(times[k])
        add, prop = _drift_rate(p, measure, float(beta[k]), dividend_yield)
        psi = p.v + p.sigma * state
        bad = psi <= 0.0
        if bad.any():
            violations += int(bad.sum())
            psi = np.where(bad, 0.0, psi)
        z = standard_normals(seed, path_idx, k)
        state = state + (add + prop * state) * dt + psi * sqrt_dt * z
        if keep_paths:
            stored[:, k + 1] = state
    budget = PSI_VIOLATION_BUDGET * n_paths * n_steps
    if violations > budget:
        raise ExcessPsiViolations(
            f"{violations} of {n_paths * n_steps} path-steps had nonpositive "
            f"diffusion (budget {budget:.0f}); the model assumptions are breached"
        )
    return state, stored, violations


def _grid(t0: float, t_mat: float, n_steps: int) -> np.ndarray:
    return t0 + (t_mat - t0) * np.arange(n_steps + 1) / n_steps


def _validate_sim_args(params, t_mat, n_paths, n_steps, t0):
    if not 0.0 <= t0 < t_mat:
        raise ValueError("need 0 <= t0 < t_mat")
    if n_paths < 1 or n_steps < 1:
        raise ValueError("n_paths and n_steps must be at least 1")
    ensure_maturity(params, t_mat)


def simulate_paths(
    params: Coefficients,
    measure: str = "natural",
    *,
    t_mat: float,
    n_paths: int,
    n_steps: int = None,
    seed: int = 0,
    dividend_yield: float = 0.0,
    x0: float = None,
    t0: float = 0.0,
) -> PathSet:
    """Euler-Maruyama paths of the risky asset under the requested measure.

    measure: "natural" (drift a + mu*A), "q1" (bond-unit risk-neutral drift
    (chi/beta)*A), or "q2" (bank-account risk-neutral drift r*A).  A nonzero
    ``dividend_yield`` shifts the proportional drift down by that yield in
    every measure.  States with nonpositive diffusion are clamped to zero
    diffusion for that step and counted; the run fails once the count exceeds
    0.1% of path-steps.
    """
    measure = measure.lower()
    if n_steps is None:
        n_steps = default_steps(t_mat - t0)
    _validate_sim_args(params, t_mat, n_paths, n_steps, t0)
    times = _grid(t0, t_mat, n_steps)
    beta = _beta_grid(params, times)
    if np.any(beta <= 0.0):
        raise NonPositiveRiskless("riskless account nonpositive on the simulation grid")
    defl = deflator_grid(params, times)
    start = as_schedule(params).a0 if x0 is None else float(x0)
    terminal, stored, violations = _march(
        params, measure, times, n_paths, seed, dividend_yield, start, beta, True
    )
    return PathSet(
        times=times,
        paths=stored,
        beta=beta,
        d1=defl.d1,
        d2=defl.d2,
        d3=defl.d3,
        psi_violations=violations,
        measure=measure,
        seed=seed,
    )


def simulate_terminal(
    params: Coefficients,
    measure: str,
    *,
    t_mat: float,
    n_paths: int,
    n_steps: int = None,
    seed: int = 0,
    dividend_yield: float = 0.0,
    x0: float = None,
    t0: float = 0.0,
) -> TerminalSample:
    """Terminal values only; bit-identical to simulate_paths(...).terminal."""
    measure = measure.lower()
    if n_steps is None:
        n_steps = default_steps(t_mat - t0)
    _validate_sim_args(params, t_mat, n_paths, n_steps, t0)
    times = _grid(t0, t_mat, n_steps)
    beta = _beta_grid(params, times)
    if np.any(beta <= 0.0):
        raise NonPositiveRiskless("riskless account nonpositive on the simulation grid")
    start = as_schedule(params).a0 if x0 is None else float(x0)
    terminal, _, violations = _march(
        params, measure, times, n_paths, seed, dividend_yield, start, beta, False
    )
    return TerminalSample(terminal, violations)
