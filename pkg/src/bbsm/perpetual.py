"""Separable perpetual-derivative solutions and a PDE verification harness.

For purely proportional diffusion (v = 0) the pricing PDE admits solutions of
the form ``f(x, t) = x**gamma * h(t) + w(t)`` for any exponent gamma, where

* ``w(t) = w0 * beta_t/beta_0`` (grows at the riskless account rate), and
* ``h(t) = h0 * (beta_t/beta_0)**(1-gamma) * exp((1-gamma)*gamma*sigma^2*t/2)``.

The growth rate of h per half-variance unit is the quadratic
``(1-gamma)*(d(t) + gamma)`` in the exponent, with ``d(t) = 2*chi_t/(beta_t*
sigma^2)``; exponents where it vanishes (gamma = 1, and gamma = -2r/sigma^2
when rho = 0) give time-invariant perpetual claims.  A nonzero additive
volatility makes the separation impossible, which is why ``v = 0`` is
required.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PerpetualUnsupported
from .model import riskless_beta
from .params import ModelParams


@dataclass(frozen=True)
class PerpetualSpec:
    """Exponent and initial levels of a separable perpetual claim."""

    gamma: float
    w0: float
    h0: float
    params: ModelParams

    def __post_init__(self):
        if not isinstance(self.params, ModelParams):
            raise TypeError("perpetual claims require constant coefficients")
        if self.params.v != 0.0:
            raise PerpetualUnsupported(
                "separable perpetual solutions require v = 0 "
                f"(got v = {self.params.v:g})"
            )
        if self.params.sigma <= 0.0:
            raise ValueError("sigma must be positive")


def drift_ratio(params: ModelParams, t: float) -> float:
    """Riskless growth per half-variance unit, 2*chi_t/(beta_t*sigma^2).

    Equals 2r/sigma^2 + 2*rho/(beta_t*sigma^2); for r > 0 it tends
    monotonically to 2r/sigma^2 as beta grows.
    """
    beta = riskless_beta(params, t)
    return 2.0 * params.chi(beta) / (beta * params.sigma**2)


def growth_coefficient(gamma: float, d: float) -> float:
    """Factored form (1-gamma)*(d+gamma) of h's growth rate per half-variance."""
    return (1.0 - gamma) * (d + gamma)


def growth_coefficient_direct(params: ModelParams, gamma: float, t: float) -> float:
    """Same quantity evaluated directly from the coefficients,
    (1-gamma)*(2*chi/(beta*sigma^2) + gamma)."""
    beta = riskless_beta(params, t)
    return (1.0 - gamma) * (
        2.0 * params.chi(beta) / (beta * params.sigma**2) + gamma
    )


def stationary_exponent(params: ModelParams) -> float:
    """Exponent -2r/sigma^2 whose power claim is time-invariant when rho = 0."""
    return -2.0 * params.r / params.sigma**2


def perpetual_value(spec: PerpetualSpec, x, t):
    """Value x**gamma * h(t) + w(t); x and t broadcast, x must be positive."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("x must be positive for the power claim")
    p = spec.params
    beta_ratio = np.asarray(riskless_beta(p, t), dtype=float) / p.beta0
    g = spec.gamma
    h = spec.h0 * beta_ratio ** (1.0 - g) * np.exp(
        (1.0 - g) * g * 0.5 * p.sigma**2 * t
    )
    w = spec.w0 * beta_ratio
    out = x**g * h + w
    if out.ndim == 0:
        return float(out)
    return out


def pde_residual_fn(params: ModelParams, value_fn, x_grid, t_grid) -> float:
    """Max absolute residual of f_t + psi^2/2 f_xx + (chi/beta)(x f_x - f) over the
    interior of a uniform x-t grid, with second-order central differences.
    ``value_fn(x, t)`` must broadcast over meshgrids."""
    x = np.asarray(x_grid, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    if x.size < 3 or t.size < 3:
        raise ValueError("grids need at least 3 points for central differences")
    dx = x[1] - x[0]
    dt = t[1] - t[0]
    if not (np.allclose(np.diff(x), dx) and np.allclose(np.diff(t), dt)):
        raise ValueError("grids must be uniformly spaced")
    xx, tt = np.meshgrid(x, t, indexing="ij")
    f = np.asarray(value_fn(xx, tt), dtype=float)
    f_t = (f[1:-1, 2:] - f[1:-1, :-2]) / (2.0 * dt)
    f_x = (f[2:, 1:-1] - f[:-2, 1:-1]) / (2.0 * dx)
    f_xx = (f[2:, 1:-1] - 2.0 * f[1:-1, 1:-1] + f[:-2, 1:-1]) / (dx * dx)
    xi = xx[1:-1, 1:-1]
    ti = tt[1:-1, 1:-1]
    beta = np.asarray(riskless_beta(params, ti.ravel()), dtype=float).reshape(ti.shape)
    rate = params.chi(beta) / beta
    psi2 = params.psi(xi) ** 2
    resid = f_t + 0.5 * psi2 * f_xx + rate * (xi * f_x - f[1:-1, 1:-1])
    return float(np.max(np.abs(resid)))


def pde_residual(spec: PerpetualSpec, x_grid, t_grid) -> float:
    """PDE residual of the separable candidate defined by ``spec``."""
    return pde_residual_fn(
        spec.params, lambda x, t: perpetual_value(spec, x, t), x_grid, t_grid
    )
