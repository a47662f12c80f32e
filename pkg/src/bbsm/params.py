"""Model coefficient sets and their (de)serialization.

The market has risky-asset dynamics ``dA = (a + mu*A) dt + (v + sigma*A) dW``
and riskless-account dynamics ``d(beta) = (rho + r*beta) dt``.  The account is
started at the common numeraire level ``beta_0 = a0``.  Coefficients are
either constants (:class:`ModelParams`) or deterministic piecewise-constant
schedules (:class:`ParamSchedule`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import IO, Iterable, Union

from .errors import ConfigError

#: Threshold below which a proportional rate is treated as exactly zero when a
#: formula needs an explicit branch (most formulas here use expm1-stable forms
#: that need no branch at all).
EPS_RATE = 1e-9

CONFIG_KEYS = ("a", "mu", "v", "sigma", "rho", "r", "a0")


@dataclass(frozen=True)
class ModelParams:
    """Constant coefficients of the unified diffusion market.

    a: additive drift of the risky asset (price/time)
    mu: proportional drift (1/time)
    v: additive volatility (price/sqrt(time)), >= 0
    sigma: proportional volatility (1/sqrt(time)), >= 0
    rho: additive accrual of the riskless account (price/time)
    r: proportional riskless rate (1/time)
    a0: initial risky price; also the initial riskless account value, > 0
    """

    a: float
    mu: float
    v: float
    sigma: float
    rho: float
    r: float
    a0: float

    def __post_init__(self):
        for name in CONFIG_KEYS:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.v < 0.0 or self.sigma < 0.0:
            raise ValueError("volatility coefficients v and sigma must be nonnegative")
        if self.v + self.sigma <= 0.0:
            raise ValueError("degenerate diffusion: v + sigma must be positive")
        if self.a0 <= 0.0:
            raise ValueError("initial price a0 must be positive")

    @property
    def beta0(self) -> float:
        """Initial riskless account value (common-numeraire convention)."""
        return self.a0

    def phi(self, x):
        """Risky drift a + mu*x."""
        return self.a + self.mu * x

    def psi(self, x):
        """Diffusion coefficient v + sigma*x."""
        return self.v + self.sigma * x

    def chi(self, beta):
        """Riskless drift rho + r*beta."""
        return self.rho + self.r * beta

    def with_rho(self, rho: float) -> "ModelParams":
        return replace(self, rho=rho)


@dataclass(frozen=True)
class ParamSchedule:
    """Deterministic piecewise-constant coefficients.

    ``params[i]`` applies on ``[breakpoints[i], breakpoints[i+1])``; the last
    set extends to infinity.  Breakpoints are strictly increasing and start
    at 0.  All segments must share the same initial price ``a0``.
    """

    breakpoints: tuple
    params: tuple

    def __post_init__(self):
        bp = tuple(float(t) for t in self.breakpoints)
        ps = tuple(self.params)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "params", ps)
        if len(bp) != len(ps) or not bp:
            raise ValueError("breakpoints and params must be equal-length and nonempty")
        if bp[0] != 0.0:
            raise ValueError("first interval must start at 0")
        if any(b >= c for b, c in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(p.a0 != ps[0].a0 for p in ps):
            raise ValueError("all segments must share the same a0")

    @property
    def a0(self) -> float:
        return self.params[0].a0

    @property
    def beta0(self) -> float:
        return self.params[0].a0

    def at(self, t: float) -> ModelParams:
        """Coefficient set in force at time t (right-open intervals)."""
        if t < 0.0:
            raise ValueError("t must be nonnegative")
        idx = 0
        for i, b in enumerate(self.breakpoints):
            if t >= b:
                idx = i
        return self.params[idx]

    def segments(self, horizon: float) -> Iterable[tuple]:
        """Yield (t_start, t_end, params) covering [0, horizon]."""
        for i, start in enumerate(self.breakpoints):
            if start >= horizon:
                return
            end = self.breakpoints[i + 1] if i + 1 < len(self.breakpoints) else math.inf
            yield start, min(end, horizon), self.params[i]


Coefficients = Union[ModelParams, ParamSchedule]


def as_schedule(params: Coefficients) -> ParamSchedule:
    if isinstance(params, ParamSchedule):
        return params
    return ParamSchedule(breakpoints=(0.0,), params=(params,))


def load_config(source: Union[str, IO[str]]) -> ModelParams:
    """Read a flat ``key = value`` config file with exactly the keys
    a, mu, v, sigma, rho, r, a0 (decimal numbers, per-year units).

    Lines starting with ``#`` and blank lines are ignored; ``key: value`` and
    ``key=value`` spellings are accepted.  Unknown or duplicate keys are
    rejected.
    """
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source.read()
    found = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, _, value = line.partition(sep)
                break
        else:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in found:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            found[key] = float(value.strip())
        except ValueError:
            raise ConfigError(f"line {lineno}: {value.strip()!r} is not a number") from None
    missing = [k for k in CONFIG_KEYS if k not in found]
    if missing:
        raise ConfigError(f"missing keys: {', '.join(missing)}")
    try:
        return ModelParams(**found)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def dump_config(params: ModelParams, target: Union[str, IO[str]]) -> None:
    """Write the flat key-value representation of ``params``."""
    lines = [f"{key} = {getattr(params, key)!r}\n" for key in CONFIG_KEYS]
    text = "".join(lines)
    if isinstance(target, str):
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        target.write(text)
