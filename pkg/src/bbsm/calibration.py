"""Parameter calibration from historical prices and option quotes.

Drift and volatility coefficients are fitted by robust (Huber-weighted IRLS)
regression of rolling-window statistics on window-end prices:

* drift: mean price change per unit time over each window, fitted as
  ``a + mu * price``;
* volatility: standard deviation of the window's changes per square-root
  time, fitted as ``v + sigma * price`` with both coefficients constrained
  nonnegative.

The riskless pair (rho, r) is fitted in a risk-neutral setting by matching
binomial-tree prices to quoted option prices (sum of squared relative errors,
Nelder-Mead over (rho, r), penalized so the riskless drift stays below the
risky drift at spot).
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from typing import IO, Sequence, Union

import numpy as np
from scipy.optimize import minimize, nnls

from .binomial import TreeSpec, tree_price
from .contracts import OptionSpec
from .errors import (
    ConfigError,
    InfeasibleConstraint,
    InsufficientData,
    ModelError,
    NonConvergence,
    ZeroIndexScore,
)
from .params import ModelParams

HUBER_TUNING = 1.345
IRLS_MAX_ITER = 50
TRADING_DAYS_PER_YEAR = 252.0


@dataclass(frozen=True)
class PriceSeries:
    """Observed price history; times are year fractions, strictly increasing."""

    times: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        prices = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "prices", prices)
        if times.ndim != 1 or times.shape != prices.shape:
            raise ValueError("times and prices must be equal-length 1-D arrays")
        if times.size < 2:
            raise ValueError("need at least 2 observations")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        times.setflags(write=False)
        prices.setflags(write=False)


@dataclass(frozen=True)
class Quote:
    maturity: float
    strike: float
    price: float
    kind: str

    def __post_init__(self):
        if self.kind not in ("call", "put"):
            raise ValueError("quote kind must be 'call' or 'put'")
        if self.maturity <= 0.0 or self.price <= 0.0 or self.strike <= 0.0:
            raise ValueError("maturity, strike and price must be positive")


@dataclass(frozen=True)
class QuoteSheet:
    """Listed option prices with the valuation time and spot they refer to."""

    quotes: tuple
    a0: float
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "quotes", tuple(self.quotes))
        if not self.quotes:
            raise ValueError("quote sheet must contain at least one quote")
        if self.a0 <= 0.0:
            raise ValueError("spot must be positive")


@dataclass(frozen=True)
class CalibResult:
    params: dict
    objective: float
    iterations: int
    constraint_active: bool = False

    def __post_init__(self):
        if self.objective < 0.0:
            raise ValueError("objective must be nonnegative")


@dataclass(frozen=True)
class EsgInput:
    """Financial price plus sustainability scores of company and index."""

    s: float
    z_company: float
    z_index: float
    gamma_esg: float

    def __post_init__(self):
        if self.s <= 0.0:
            raise ValueError("financial price must be positive")
        for name in ("z_company", "z_index"):
            z = getattr(self, name)
            if not 0.0 <= z <= 100.0:
                raise ValueError(f"{name} must lie in [0, 100]")
        if self.z_index == 0.0:
            raise ZeroIndexScore("index score must be positive")


def esg_adjust(inputs: EsgInput) -> float:
    """Score-adjusted price s*(1 + gamma*(z_company - z_index)/z_index).

    The result may be negative, which is precisely the regime that calls for
    an arithmetic (rather than lognormal) price model.
    """
    relative = (inputs.z_company - inputs.z_index) / inputs.z_index
    return inputs.s * (1.0 + inputs.gamma_esg * relative)


# ---------------------------------------------------------------------------
# robust regression
# ---------------------------------------------------------------------------


def _weighted_line_fit(x, y, w, nonneg):
    design = np.column_stack([np.ones_like(x), x]) * np.sqrt(w)[:, None]
    target = y * np.sqrt(w)
    if nonneg:
        coef, _ = nnls(design, target)
        return np.asarray(coef)
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    return coef


def _irls_huber(x, y, nonneg=False):
    """Huber-weighted iteratively reweighted least squares for y ~ b0 + b1*x.

    Tuning constant 1.345 on MAD-standardized residuals, at most 50 sweeps.
    With ``nonneg`` both coefficients are constrained >= 0.  Returns
    (intercept, slope, iterations, mean squared residual).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.ptp(x) == 0.0:
        # degenerate design: slope is unidentifiable, fit a location only
        loc = float(np.median(y))
        if nonneg:
            loc = max(0.0, loc)
        resid = y - loc
        return loc, 0.0, 0, float(np.mean(resid**2))
    w = np.ones_like(y)
    coef = _weighted_line_fit(x, y, w, nonneg)
    iterations = 0
    for iterations in range(1, IRLS_MAX_ITER + 1):
        resid = y - coef[0] - coef[1] * x
        scale = 1.4826 * np.median(np.abs(resid - np.median(resid)))
        if scale < 1e-300:
            break
        z = np.abs(resid) / scale
        w = np.where(z <= HUBER_TUNING, 1.0, HUBER_TUNING / np.maximum(z, 1e-300))
        new = _weighted_line_fit(x, y, w, nonneg)
        step = np.max(np.abs(new - coef))
        coef = new
        if step <= 1e-12 * (1.0 + np.max(np.abs(coef))):
            break
    resid = y - coef[0] - coef[1] * x
    return float(coef[0]), float(coef[1]), iterations, float(np.mean(resid**2))


def _window_edges(series: PriceSeries, window: int):
    n = series.prices.size
    if window < 2:
        raise ValueError("window must be at least 2")
    if n < window + 2:
        raise InsufficientData(
            f"need at least {window + 2} observations, got {n}"
        )
    return np.arange(window, n)


def calibrate_drift(series: PriceSeries, window: int = 10) -> CalibResult:
    """Fit (a, mu) from rolling mean price changes per unit time."""
    ends = _window_edges(series, window)
    t = series.times
    p = series.prices
    y = (p[ends] - p[ends - window]) / (t[ends] - t[ends - window])
    x = p[ends]
    a, mu, iterations, mse = _irls_huber(x, y)
    return CalibResult(params={"a": a, "mu": mu}, objective=mse, iterations=iterations)


def calibrate_vol(series: PriceSeries, window: int = 10) -> CalibResult:
    """Fit (v, sigma) >= 0 from rolling standard deviations of price changes."""
    ends = _window_edges(series, window)
    t = series.times
    p = series.prices
    changes = np.diff(p)
    y = np.empty(ends.size)
    for i, k in enumerate(ends):
        step = (t[k] - t[k - window]) / window
        y[i] = np.std(changes[k - window : k], ddof=1) / math.sqrt(step)
    x = p[ends]
    v, sigma, iterations, mse = _irls_huber(x, y, nonneg=True)
    return CalibResult(
        params={"v": v, "sigma": sigma}, objective=mse, iterations=iterations
    )


def estimate_pn(series: PriceSeries) -> float:
    """Fraction of positive lag-1 price changes; zero changes count half,
    and the estimate is clipped away from 0 and 1 by 1/n."""
    changes = np.diff(series.prices)
    n = changes.size
    ups = float(np.count_nonzero(changes > 0.0)) + 0.5 * float(
        np.count_nonzero(changes == 0.0)
    )
    p = ups / n
    lo = min(1.0 / n, 0.5)
    hi = max(1.0 - 1.0 / n, 0.5)
    return float(np.clip(p, lo, hi))


def calibrate_riskless(
    sheet: QuoteSheet,
    fixed: Sequence[float],
    tree_n: int = 10,
) -> CalibResult:
    """Fit (rho, r) by minimizing the sum of squared relative tree-pricing
    errors over the quote sheet.

    ``fixed`` is (a, mu, v, sigma, p_n) from the historical stages.  The
    search is Nelder-Mead from up to three feasible starting points, with a
    1e6-weighted quadratic penalty keeping the riskless drift below the risky
    drift at spot.
    """
    if len(sheet.quotes) < 2:
        raise InsufficientData("a two-parameter fit needs at least 2 quotes")
    a, mu, v, sigma, p_n = (float(f) for f in fixed)
    a0 = sheet.a0
    phi0 = a + mu * a0
    if not math.isfinite(phi0):
        raise InfeasibleConstraint("risky drift at spot is not finite")

    def objective(vec):
        rho, r = float(vec[0]), float(vec[1])
        penalty = 1e6 * max(0.0, (rho + r * a0) - phi0) ** 2
        total = penalty
        for quote in sheet.quotes:
            spec = TreeSpec(n=tree_n, t_mat=quote.maturity, params=ModelParams(
                a=a, mu=mu, v=v, sigma=sigma, rho=rho, r=r, a0=a0
            ), p_n=p_n)
            option = OptionSpec(
                kind=quote.kind, maturity=quote.maturity, strike=quote.strike
            )
            try:
                model = tree_price(spec, option)
            except ModelError:
                return 1e9 + penalty
            total += ((model - quote.price) / quote.price) ** 2
        return total

    candidates = [
        (0.0, 0.5 * phi0 / a0),
        (0.5 * phi0, 0.0),
        (phi0 - 1.0, 0.0),
    ]
    starts = [c for c in candidates if c[0] + c[1] * a0 < phi0]
    if not starts:
        raise InfeasibleConstraint("no starting point satisfies chi < phi at spot")

    best = None
    iterations = 0
    converged = False
    for start in starts:
        result = minimize(
            objective,
            np.asarray(start, dtype=float),
            method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 4000, "maxfev": 8000},
        )
        iterations += int(result.nit)
        converged = converged or bool(result.success)
        if best is None or result.fun < best.fun:
            best = result
    if not converged:
        raise NonConvergence("Nelder-Mead exhausted its budget from every start")
    rho_hat, r_hat = (float(val) for val in best.x)
    active = (rho_hat + r_hat * a0) >= phi0
    return CalibResult(
        params={"rho": rho_hat, "r": r_hat},
        objective=float(best.fun),
        iterations=iterations,
        constraint_active=bool(active),
    )


# ---------------------------------------------------------------------------
# CSV input
# ---------------------------------------------------------------------------


def _open_rows(source: Union[str, IO[str]], expected_header):
    if isinstance(source, str):
        fh = open(source, "r", encoding="utf-8", newline="")
        close = True
    else:
        fh, close = source, False
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError("empty CSV file") from None
        if [h.strip() for h in header] != list(expected_header):
            raise ConfigError(
                f"expected header {','.join(expected_header)!r}, got {','.join(header)!r}"
            )
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    finally:
        if close:
            fh.close()
    if not rows:
        raise ConfigError("CSV contains no data rows")
    return rows


def load_price_series(source: Union[str, IO[str]]) -> PriceSeries:
    """Read a ``date,price`` CSV (ISO dates, strictly increasing).  Rows are
    mapped onto a trading-day clock: the i-th observation sits at i/252 years."""
    rows = _open_rows(source, ("date", "price"))
    dates = []
    prices = []
    for i, row in enumerate(rows, start=2):
        if len(row) != 2:
            raise ConfigError(f"line {i}: expected 2 columns")
        try:
            dates.append(dt.date.fromisoformat(row[0].strip()))
            prices.append(float(row[1]))
        except ValueError as exc:
            raise ConfigError(f"line {i}: {exc}") from None
    if any(d2 <= d1 for d1, d2 in zip(dates, dates[1:])):
        raise ConfigError("dates must be strictly increasing")
    times = np.arange(len(prices)) / TRADING_DAYS_PER_YEAR
    try:
        return PriceSeries(times=times, prices=np.asarray(prices, dtype=float))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_quote_sheet(
    source: Union[str, IO[str]], spot: float, t: float = 0.0
) -> QuoteSheet:
    """Read a ``maturity_years,strike,price,kind`` CSV into a QuoteSheet."""
    rows = _open_rows(source, ("maturity_years", "strike", "price", "kind"))
    quotes = []
    for i, row in enumerate(rows, start=2):
        if len(row) != 4:
            raise ConfigError(f"line {i}: expected 4 columns")
        try:
            quotes.append(
                Quote(
                    maturity=float(row[0]),
                    strike=float(row[1]),
                    price=float(row[2]),
                    kind=row[3].strip(),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"line {i}: {exc}") from None
    try:
        return QuoteSheet(quotes=tuple(quotes), a0=spot, t=t)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
