"""Shared helpers for the test suite."""

import math

import numpy as np

from bbsm import ModelParams


def bsm_sub_model(mu=0.1, sigma=0.2, r=0.05, a0=100.0):
    """Proportional-only instance (a = v = rho = 0)."""
    return ModelParams(a=0.0, mu=mu, v=0.0, sigma=sigma, rho=0.0, r=r, a0=a0)


def mb_sub_model(a=2.0, v=10.0, rho=1.0, a0=100.0):
    """Additive-only instance (mu = sigma = r = 0)."""
    return ModelParams(a=a, mu=0.0, v=v, sigma=0.0, rho=rho, r=0.0, a0=a0)


def full_model(a0=100.0):
    """Instance with every coefficient active."""
    return ModelParams(a=1.0, mu=0.05, v=5.0, sigma=0.1, rho=1.0, r=0.03, a0=a0)


def se(samples):
    samples = np.asarray(samples, dtype=float)
    return float(samples.std(ddof=1) / math.sqrt(samples.size))


def mean_se(samples):
    samples = np.asarray(samples, dtype=float)
    return float(samples.mean()), se(samples)


def lognormal_limit_tree(a0, k, r, sigma, t_mat, n, mu=0.07, p=0.5):
    """Test-local lattice for the proportional limit: additive moves
    u = A*(mu*dt + c_u*sigma*sqrt(dt)), discount 1/(1 + r*dt), and
    q = p - theta*sqrt(p*(1-p)*dt) with theta = (mu - r)/sigma.
    Written independently of the library's tree module."""
    dt = t_mat / n
    cu = math.sqrt((1.0 - p) / p)
    cd = math.sqrt(p / (1.0 - p))
    fu = 1.0 + mu * dt + cu * sigma * math.sqrt(dt)
    fd = 1.0 + mu * dt - cd * sigma * math.sqrt(dt)
    q = p - (mu - r) / sigma * math.sqrt(p * (1.0 - p) * dt)
    disc = 1.0 + r * dt
    ups = np.arange(n + 1)
    prices = a0 * np.exp(ups * math.log(fu) + (n - ups) * math.log(fd))
    values = np.maximum(prices - k, 0.0)
    for _ in range(n):
        values = (q * values[1:] + (1.0 - q) * values[:-1]) / disc
    return float(values[0])
