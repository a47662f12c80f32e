"""Exception hierarchy.

``ModelError`` subclasses signal mathematical/numerical failures of the model
itself (the CLI maps them to exit code 3); ``ConfigError`` signals bad user
input such as malformed config files or CSV schemas (exit code 2).
"""


class ModelError(Exception):
    """Base class for model-level failures."""


class NonPositiveRiskless(ModelError):
    """The riskless account value is not strictly positive at the requested time."""


class MaturityRestriction(ModelError):
    """Requested maturity lies at or beyond the riskless-positivity horizon."""


class ArbitrageViolation(ModelError):
    """Risky drift does not strictly exceed the riskless drift."""


class DegenerateDiffusion(ModelError):
    """Diffusion coefficient is not strictly positive."""


class ExcessPsiViolations(ModelError):
    """Too many simulated states with nonpositive diffusion coefficient."""


class NonPositiveForwardDenominator(ModelError):
    """Forward-level denominator a0 + rho*T is not strictly positive."""


class QOutOfRange(ModelError):
    """Risk-neutral branch probability left (0, 1); the time step is too large."""


class NonPositiveDiscount(ModelError):
    """One-step discount factor on the lattice is not strictly positive."""


class TreeTooLarge(ModelError):
    """Exact non-recombining lattice would exceed the node budget."""


class PerpetualUnsupported(ModelError):
    """Separable perpetual solutions require a purely proportional diffusion (v = 0)."""


class InsufficientData(ModelError):
    """Not enough observations/quotes for the requested fit."""


class InfeasibleConstraint(ModelError):
    """No feasible starting point satisfying the drift-dominance constraint."""


class NonConvergence(ModelError):
    """Optimizer exhausted its iteration budget without converging."""


class ZeroIndexScore(ModelError):
    """Index score of zero makes the score-adjustment undefined."""


class ConfigError(Exception):
    """Malformed configuration, CLI arguments, or input files."""
