"""Contract and result types shared by the pricing engines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class OptionSpec:
    """European claim: vanilla call/put on a strike, or a custom terminal payoff.

    ``dividend_yield`` is the continuous yield paid by the underlying.
    """

    kind: str
    maturity: float
    strike: Optional[float] = None
    payoff: Optional[Callable[[np.ndarray], np.ndarray]] = None
    dividend_yield: float = 0.0

    def __post_init__(self):
        if self.kind not in ("call", "put", "custom"):
            raise ValueError(f"kind must be call, put or custom, got {self.kind!r}")
        if not (math.isfinite(self.maturity) and self.maturity > 0.0):
            raise ValueError("maturity must be positive and finite")
        if self.kind in ("call", "put"):
            if self.strike is None or self.strike <= 0.0:
                raise ValueError("call/put requires a positive strike")
        elif self.payoff is None:
            raise ValueError("custom spec requires a payoff callable")

    def payoff_values(self, terminal: np.ndarray) -> np.ndarray:
        terminal = np.asarray(terminal, dtype=float)
        if self.kind == "call":
            return np.maximum(terminal - self.strike, 0.0)
        if self.kind == "put":
            return np.maximum(self.strike - terminal, 0.0)
        return np.asarray(self.payoff(terminal), dtype=float)


@dataclass(frozen=True)
class MCConfig:
    """Monte Carlo resolution: path count, Euler steps (None = 252/year), seed."""

    n_paths: int = 100_000
    n_steps: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")
        if self.n_steps is not None and self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    def steps_for(self, t_span: float) -> int:
        if self.n_steps is not None:
            return self.n_steps
        return max(1, math.ceil(252.0 * t_span))


@dataclass(frozen=True)
class Diagnostics:
    psi_violations: int = 0
    negative_price: bool = False


@dataclass(frozen=True)
class PriceResult:
    """Price estimate with its Monte Carlo standard error (0 for closed forms)."""

    price: float
    std_error: float
    method: str
    n_paths: int = 0
    n_steps: int = 0
    seed: int = 0
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    def __post_init__(self):
        if self.std_error < 0.0:
            raise ValueError("std_error must be nonnegative")


@dataclass(frozen=True)
class MixedDeflatorSpec:
    """Ratio c of additive to multiplicative deflation entering mixed pricing."""

    c: float

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise ValueError("c must be finite")


def mean_and_se(samples: np.ndarray) -> tuple:
    """Sample mean and standard error; SE is exactly 0 for a constant sample."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    mean = float(samples.mean())
    if n < 2 or np.all(samples == samples[0]):
        return mean, 0.0
    return mean, float(samples.std(ddof=1) / math.sqrt(n))
