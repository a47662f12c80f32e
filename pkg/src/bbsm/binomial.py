"""Discrete binomial pricing on additive-move trees.

Each node moves by ``u = phi*dt + sqrt((1-p)/p)*psi*sqrt(dt)`` or
``d = phi*dt - sqrt(p/(1-p))*psi*sqrt(dt)``, matching the conditional mean
``phi*dt`` and variance ``psi^2*dt`` of the diffusion exactly.  Backward
induction discounts with the one-step riskless growth ``D = 1 + chi*dt/beta``
using the risk-neutral branch probability

    q = p - ((phi - chi*A/beta)/psi) * sqrt(p*(1-p)*dt).

Because the moves depend on the node price, a general tree does not
recombine; three engines are provided:

* ``recombining`` when the moves are state-independent (mu = sigma = 0) or
  proportional (a = v = 0), which recombine additively/multiplicatively;
* ``exact`` full enumeration, capped at 24 steps;
* ``bucketed`` backward induction on a fixed price grid with linear
  interpolation, for large non-recombining trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contracts import OptionSpec
from .errors import (
    DegenerateDiffusion,
    NonPositiveDiscount,
    NonPositiveRiskless,
    QOutOfRange,
    TreeTooLarge,
)
from .params import Coefficients, ModelParams, as_schedule

MAX_EXACT_STEPS = 24
_Q_MARGIN = 1e-9


@dataclass(frozen=True)
class TreeSpec:
    """Lattice resolution, horizon, coefficients, and natural up-probability."""

    n: int
    t_mat: float
    params: Coefficients
    p_n: float = 0.5

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.t_mat <= 0.0:
            raise ValueError("t_mat must be positive")
        if not 0.0 < self.p_n < 1.0:
            raise ValueError("p_n must lie strictly in (0, 1)")

    @property
    def dt(self) -> float:
        return self.t_mat / self.n


@dataclass(frozen=True)
class TreeNode:
    """One lattice node: price, moves, branch probability, and the one-step
    discount 1/D applied in the backward recursion.  Terminal nodes carry NaN
    for the branch quantities."""

    k: int
    node_id: int
    a: float
    u: float
    d: float
    q: float
    disc: float


def node_moves(params: ModelParams, a_k: float, p_n: float, delta: float):
    """Additive up/down moves at one node; the branch mean is phi*delta and
    the branch variance psi^2*delta exactly, for any p_n in (0, 1)."""
    if not 0.0 < p_n < 1.0:
        raise ValueError("p_n must lie strictly in (0, 1)")
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    psi = params.psi(a_k)
    if psi <= 0.0:
        raise DegenerateDiffusion(f"psi = {psi:g} <= 0 at node price {a_k:g}")
    phi = params.phi(a_k)
    sq = math.sqrt(delta)
    u = phi * delta + math.sqrt((1.0 - p_n) / p_n) * psi * sq
    d = phi * delta - math.sqrt(p_n / (1.0 - p_n)) * psi * sq
    return u, d


def risk_neutral_q(
    params: ModelParams, a_k: float, beta_k: float, p_n: float, delta: float
) -> float:
    """Risk-neutral branch probability at one node.

    Computed in the shifted form q = p - Theta_node * sqrt(p(1-p)delta) and
    verified against the raw ratio ((A/beta)*chi*delta - d)/(u - d); the two
    must agree to 1e-12.  Raises QOutOfRange when q leaves (0, 1), which
    signals a time step too large for the node's risk premium.
    """
    psi = params.psi(a_k)
    if psi <= 0.0:
        raise DegenerateDiffusion(f"psi = {psi:g} <= 0 at node price {a_k:g}")
    phi = params.phi(a_k)
    chi = params.chi(beta_k)
    q = p_n - (phi - chi * a_k / beta_k) / psi * math.sqrt(p_n * (1.0 - p_n) * delta)
    u, d = node_moves(params, a_k, p_n, delta)
    q_ratio = ((a_k / beta_k) * chi * delta - d) / (u - d)
    if abs(q - q_ratio) > 1e-12 * max(1.0, abs(q)):
        raise RuntimeError(
            f"risk-neutral probability forms disagree: {q!r} vs {q_ratio!r}"
        )
    if not 0.0 < q < 1.0:
        raise QOutOfRange(
            f"q = {q:g} outside (0, 1) at node price {a_k:g}; reduce the time step"
        )
    return q


def mb_discount(beta0: float, rho: float, k: int, delta: float) -> float:
    """Exact one-step lattice discount 1 + rho*delta/(beta0 + rho*k*delta)
    for the arithmetic sub-model with a linearly accruing account."""
    beta_k = beta0 + rho * k * delta
    if beta_k <= 0.0:
        raise NonPositiveRiskless(f"account value {beta_k:g} <= 0 at step {k}")
    return 1.0 + rho * delta / beta_k


def mb_discount_smalltime(beta0: float, rho: float, delta: float) -> float:
    """Small-time approximation 1 + rho*delta/beta0 of mb_discount; only valid
    while rho*k*delta << beta0, kept for diagnostic comparison."""
    return 1.0 + rho * delta / beta0


def _discrete_account(spec: TreeSpec):
    """Riskless account on the lattice via the exact discrete recursion
    beta[k+1] = beta[k] + chi(beta[k])*dt; returns (betas, chis, discounts)."""
    sched = as_schedule(spec.params)
    dt = spec.dt
    betas = np.empty(spec.n + 1)
    chis = np.empty(spec.n)
    discs = np.empty(spec.n)
    betas[0] = sched.beta0
    for k in range(spec.n):
        p = sched.at(k * dt)
        chis[k] = p.chi(betas[k])
        betas[k + 1] = betas[k] + chis[k] * dt
        discs[k] = betas[k + 1] / betas[k]
        if discs[k] <= 0.0:
            raise NonPositiveDiscount(
                f"one-step discount {discs[k]:g} <= 0 at step {k}"
            )
    return betas, chis, discs


def _level_moves_q(p: ModelParams, a, beta_k, chi_k, p_n, dt):
    """Vectorized moves and risk-neutral q for one level of node prices."""
    a = np.asarray(a, dtype=float)
    psi = p.psi(a)
    if np.any(psi <= 0.0):
        raise DegenerateDiffusion("psi <= 0 at a reachable node")
    phi = p.phi(a)
    sq = math.sqrt(dt)
    u = phi * dt + math.sqrt((1.0 - p_n) / p_n) * psi * sq
    d = phi * dt - math.sqrt(p_n / (1.0 - p_n)) * psi * sq
    q = p_n - (phi - chi_k * a / beta_k) / psi * math.sqrt(p_n * (1.0 - p_n) * dt)
    if np.any(q <= 0.0) or np.any(q >= 1.0):
        raise QOutOfRange("q outside (0, 1) at a reachable node; reduce the time step")
    return u, d, q


def _classify(spec: TreeSpec) -> str:
    sched = as_schedule(spec.params)
    if len(sched.params) != 1:
        return "general"
    p = sched.params[0]
    if p.mu == 0.0 and p.sigma == 0.0:
        return "additive"
    if p.a == 0.0 and p.v == 0.0:
        return "multiplicative"
    return "general"


def _recombining_levels(spec: TreeSpec):
    """Node prices per level for the two recombining families, ordered by the
    number of up-moves j = 0..k."""
    p = as_schedule(spec.params).params[0]
    dt = spec.dt
    kind = _classify(spec)
    levels = [np.array([p.a0])]
    if kind == "additive":
        u, d = node_moves(p, p.a0, spec.p_n, dt)
        for k in range(spec.n):
            prev = levels[k]
            nxt = np.empty(k + 2)
            nxt[1:] = prev + u
            nxt[0] = prev[0] + d
            levels.append(nxt)
    elif kind == "multiplicative":
        sq = math.sqrt(dt)
        fu = 1.0 + p.mu * dt + math.sqrt((1.0 - spec.p_n) / spec.p_n) * p.sigma * sq
        fd = 1.0 + p.mu * dt - math.sqrt(spec.p_n / (1.0 - spec.p_n)) * p.sigma * sq
        for k in range(spec.n):
            prev = levels[k]
            nxt = np.empty(k + 2)
            nxt[1:] = prev * fu
            nxt[0] = prev[0] * fd
            levels.append(nxt)
    else:
        raise ValueError("tree does not recombine for these coefficients")
    return levels


def _price_recombining(spec: TreeSpec, option: OptionSpec) -> float:
    sched = as_schedule(spec.params)
    p = sched.params[0]
    dt = spec.dt
    betas, chis, discs = _discrete_account(spec)
    levels = _recombining_levels(spec)
    values = option.payoff_values(levels[spec.n])
    for k in range(spec.n - 1, -1, -1):
        _, _, q = _level_moves_q(p, levels[k], betas[k], chis[k], spec.p_n, dt)
        values = (q * values[1:] + (1.0 - q) * values[:-1]) / discs[k]
    return float(values[0])


def _price_exact(spec: TreeSpec, option: OptionSpec) -> float:
    if spec.n > MAX_EXACT_STEPS:
        raise TreeTooLarge(
            f"exact non-recombining tree limited to {MAX_EXACT_STEPS} steps, got {spec.n}"
        )
    sched = as_schedule(spec.params)
    dt = spec.dt
    betas, chis, discs = _discrete_account(spec)
    level = np.array([sched.a0])
    qs = []
    for k in range(spec.n):
        p = sched.at(k * dt)
        u, d, q = _level_moves_q(p, level, betas[k], chis[k], spec.p_n, dt)
        qs.append(q)
        nxt = np.empty(2 * level.size)
        nxt[0::2] = level + u
        nxt[1::2] = level + d
        level = nxt
    values = option.payoff_values(level)
    for k in range(spec.n - 1, -1, -1):
        values = (qs[k] * values[0::2] + (1.0 - qs[k]) * values[1::2]) / discs[k]
    return float(values[0])


def _bucketed_grid(spec: TreeSpec, option: OptionSpec, grid_points: int):
    """Fixed price grid wide enough to make edge truncation negligible,
    restricted to the contiguous region where every level's node invariants
    (psi > 0 and q in (0,1)) hold."""
    sched = as_schedule(spec.params)
    dt = spec.dt
    betas, chis, _ = _discrete_account(spec)
    # propagate first/second natural moments to size the grid
    m = sched.a0
    var = 0.0
    for k in range(spec.n):
        p = sched.at(k * dt)
        var = var * (1.0 + p.mu * dt) ** 2 + p.psi(m) ** 2 * dt
        m = m + p.phi(m) * dt
    spread = 12.0 * math.sqrt(var)
    lo = min(sched.a0, m) - spread
    hi = max(sched.a0, m) + spread
    if option.strike is not None:
        lo = min(lo, option.strike - 1.0)
        hi = max(hi, option.strike + 1.0)
    grid = np.linspace(lo, hi, grid_points)

    valid = np.ones(grid_points, dtype=bool)
    for k in range(spec.n):
        p = sched.at(k * dt)
        psi = p.psi(grid)
        ok = psi > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            q = spec.p_n - (p.phi(grid) - chis[k] * grid / betas[k]) / psi * math.sqrt(
                spec.p_n * (1.0 - spec.p_n) * dt
            )
        valid &= ok & (q > _Q_MARGIN) & (q < 1.0 - _Q_MARGIN)
    anchor = int(np.argmin(np.abs(grid - sched.a0)))
    if not valid[anchor]:
        raise QOutOfRange("node invariants fail at the initial price; reduce dt")
    left = anchor
    while left > 0 and valid[left - 1]:
        left -= 1
    right = anchor
    while right < grid_points - 1 and valid[right + 1]:
        right += 1
    if right - left < 32:
        raise QOutOfRange("feasible price region too narrow; reduce the time step")
    return grid[left : right + 1], betas, chis


def _price_bucketed(spec: TreeSpec, option: OptionSpec, grid_points: int) -> float:
    sched = as_schedule(spec.params)
    dt = spec.dt
    grid, betas, chis = _bucketed_grid(spec, option, grid_points)
    _, _, discs = _discrete_account(spec)
    values = option.payoff_values(grid)
    for k in range(spec.n - 1, -1, -1):
        p = sched.at(k * dt)
        u, d, q = _level_moves_q(p, grid, betas[k], chis[k], spec.p_n, dt)
        up_vals = np.interp(grid + u, grid, values)
        dn_vals = np.interp(grid + d, grid, values)
        values = (q * up_vals + (1.0 - q) * dn_vals) / discs[k]
    return float(np.interp(sched.a0, grid, values))


def tree_price(
    spec: TreeSpec,
    option: OptionSpec,
    mode: str = "auto",
    grid_points: int = 1601,
) -> float:
    """Backward-induction price of a European claim on the lattice.

    mode "auto" picks a recombining engine when the coefficients allow one,
    exact enumeration up to 24 steps otherwise, and the bucketed grid engine
    beyond that.  "exact" and "bucketed" force the respective engines.
    """
    if mode == "auto":
        if _classify(spec) != "general":
            return _price_recombining(spec, option)
        if spec.n <= MAX_EXACT_STEPS:
            return _price_exact(spec, option)
        return _price_bucketed(spec, option, grid_points)
    if mode == "recombining":
        return _price_recombining(spec, option)
    if mode == "exact":
        return _price_exact(spec, option)
    if mode == "bucketed":
        return _price_bucketed(spec, option, grid_points)
    raise ValueError(f"unknown mode {mode!r}")


def tree_nodes(spec: TreeSpec):
    """Enumerate the lattice as TreeNode rows, level by level.

    Recombining trees enumerate level indices; general trees use the exact
    engine and are limited to MAX_EXACT_STEPS.
    """
    sched = as_schedule(spec.params)
    dt = spec.dt
    betas, chis, discs = _discrete_account(spec)

    def _level_rows(k, prices, u, d, q):
        u, d, q = (np.broadcast_to(np.asarray(arr), prices.shape) for arr in (u, d, q))
        return [
            TreeNode(
                k=k,
                node_id=j,
                a=float(prices[j]),
                u=float(u[j]),
                d=float(d[j]),
                q=float(q[j]),
                disc=float(1.0 / discs[k]),
            )
            for j in range(prices.size)
        ]

    def _terminal_rows(prices):
        return [
            TreeNode(
                k=spec.n, node_id=j, a=float(price),
                u=math.nan, d=math.nan, q=math.nan, disc=math.nan,
            )
            for j, price in enumerate(prices)
        ]

    rows = []
    if _classify(spec) != "general":
        levels = _recombining_levels(spec)
        p = sched.params[0]
        for k in range(spec.n):
            u, d, q = _level_moves_q(p, levels[k], betas[k], chis[k], spec.p_n, dt)
            rows += _level_rows(k, levels[k], u, d, q)
        return rows + _terminal_rows(levels[spec.n])
    if spec.n > MAX_EXACT_STEPS:
        raise TreeTooLarge(
            f"node dump of a non-recombining tree is limited to {MAX_EXACT_STEPS} steps"
        )
    level = np.array([sched.a0])
    for k in range(spec.n):
        p = sched.at(k * dt)
        u, d, q = _level_moves_q(p, level, betas[k], chis[k], spec.p_n, dt)
        rows += _level_rows(k, level, u, d, q)
        nxt = np.empty(2 * level.size)
        nxt[0::2] = level + u
        nxt[1::2] = level + d
        level = nxt
    return rows + _terminal_rows(level)
