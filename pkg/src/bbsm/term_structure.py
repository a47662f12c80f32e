"""Zero-coupon bonds, forwards, futures, and the deterministic-rate hedge.

With deterministic rates the discount bond is closed-form,
``B(t, T) = beta_t / beta_T`` (both deflators are deterministic), futures and
forward prices coincide, and the bond is replicated by holding
``B(t, T)/beta_t`` units of the riskless account and no risky asset.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Iterable, Sequence, Union

from .contracts import Diagnostics, MCConfig, PriceResult, mean_and_se
from .model import ensure_maturity, riskless_beta, simulate_terminal
from .params import Coefficients, as_schedule


@dataclass(frozen=True)
class CurvePoint:
    maturity: float
    discount: float
    source: str = "closed"

    def __post_init__(self):
        if self.discount <= 0.0:
            raise ValueError("discount must be positive")


@dataclass(frozen=True)
class ForwardSpec:
    """Forward contract: valuation time, delivery time, initial contract value."""

    t: float
    t_mat: float
    v0: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.t <= self.t_mat:
            raise ValueError("need 0 <= t <= t_mat")


def zcb_price(params: Coefficients, t: float, t_mat: float) -> float:
    """Discount bond B(t, T) = beta_t/beta_T under deterministic rates."""
    if not 0.0 <= t <= t_mat:
        raise ValueError("need 0 <= t <= t_mat")
    if t == t_mat:
        return 1.0
    ensure_maturity(params, t_mat)
    return riskless_beta(params, t) / riskless_beta(params, t_mat)


def discount_curve(params: Coefficients, maturities: Sequence[float]) -> list:
    """Curve of CurvePoint rows B(0, T) over the given maturities."""
    return [
        CurvePoint(maturity=float(T), discount=zcb_price(params, 0.0, float(T)))
        for T in maturities
    ]


def curve_to_csv(points: Iterable[CurvePoint], target: Union[str, IO[str]]) -> None:
    """Write a curve as CSV with header ``maturity,discount``."""

    def _write(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["maturity", "discount"])
        for pt in points:
            writer.writerow([repr(pt.maturity), repr(pt.discount)])

    if isinstance(target, str):
        with open(target, "w", encoding="utf-8", newline="") as fh:
            _write(fh)
    else:
        _write(target)


def forward_price(params: Coefficients, spec: ForwardSpec, a_t: float) -> float:
    """Delivery price F(t, T) = (A_t - V_t)/B(t, T)."""
    return (a_t - spec.v0) / zcb_price(params, spec.t, spec.t_mat)


def forward_value(
    params: Coefficients, spec: ForwardSpec, a_t: float, s: float, a_s: float
) -> float:
    """Mark-to-market value at s >= t of the contract struck at time t:
    A_s - F(t, T)*B(s, T)."""
    if not spec.t <= s <= spec.t_mat:
        raise ValueError("need t <= s <= t_mat")
    f = forward_price(params, spec, a_t)
    return a_s - f * zcb_price(params, s, spec.t_mat)


def futures_price(
    params: Coefficients,
    t: float,
    t_mat: float,
    mc_config: MCConfig = MCConfig(),
    a_t: float = None,
) -> PriceResult:
    """Futures level: conditional risk-neutral expectation of A_T given the
    state (a_t, t), estimated by restarting the simulation from that state.
    Under deterministic rates it equals the forward price a_t/B(t, T)."""
    if not 0.0 <= t <= t_mat:
        raise ValueError("need 0 <= t <= t_mat")
    spot = as_schedule(params).a0 if a_t is None else float(a_t)
    if t == t_mat:
        return PriceResult(price=spot, std_error=0.0, method="futures", seed=mc_config.seed)
    ensure_maturity(params, t_mat)
    n_steps = mc_config.steps_for(t_mat - t)
    sample = simulate_terminal(
        params,
        "q1",
        t_mat=t_mat,
        n_paths=mc_config.n_paths,
        n_steps=n_steps,
        seed=mc_config.seed,
        x0=spot,
        t0=t,
    )
    mean, se = mean_and_se(sample.values)
    return PriceResult(
        price=mean,
        std_error=se,
        method="futures",
        n_paths=mc_config.n_paths,
        n_steps=n_steps,
        seed=mc_config.seed,
        diagnostics=Diagnostics(psi_violations=sample.psi_violations),
    )


def zcb_hedge(params: Coefficients, t: float, t_mat: float) -> tuple:
    """Replicating portfolio (asset_units, account_units) for the discount
    bond under deterministic rates: no risky asset, B(t, T)/beta_t units of
    the account."""
    bond = zcb_price(params, t, t_mat)
    return 0.0, bond / riskless_beta(params, t)
