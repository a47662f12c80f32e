"""Unified diffusion market model: mixed additive/proportional asset dynamics
with an affine riskless account, priced in closed form, by Monte Carlo under
two replicating-portfolio conventions, and on binomial lattices; plus term
structure instruments, perpetual claims, and parameter calibration."""

from .binomial import (
    TreeNode,
    TreeSpec,
    mb_discount,
    mb_discount_smalltime,
    node_moves,
    risk_neutral_q,
    tree_nodes,
    tree_price,
)
from .calibration import (
    CalibResult,
    EsgInput,
    PriceSeries,
    Quote,
    QuoteSheet,
    calibrate_drift,
    calibrate_riskless,
    calibrate_vol,
    esg_adjust,
    estimate_pn,
    load_price_series,
    load_quote_sheet,
)
from .closed_form import (
    MbCallInputs,
    bbsm_call_quasi,
    bsm_call,
    bsm_put,
    mb_call,
    mb_call_rho0,
)
from .contracts import (
    Diagnostics,
    MCConfig,
    MixedDeflatorSpec,
    OptionSpec,
    PriceResult,
)
from .errors import (
    ArbitrageViolation,
    ConfigError,
    DegenerateDiffusion,
    ExcessPsiViolations,
    InfeasibleConstraint,
    InsufficientData,
    MaturityRestriction,
    ModelError,
    NonConvergence,
    NonPositiveDiscount,
    NonPositiveForwardDenominator,
    NonPositiveRiskless,
    PerpetualUnsupported,
    QOutOfRange,
    TreeTooLarge,
    ZeroIndexScore,
)
from .mc_pricer import (
    bank_accrual,
    delta_fd,
    mixed_deflator_asset_check,
    price_dividend,
    price_mixed_deflator,
    price_q1,
    price_q2_bank,
)
from .model import (
    Deflators,
    PathSet,
    deflator_grid,
    deflators,
    ensure_maturity,
    market_price_of_risk,
    positivity_horizon,
    riskless_beta,
    simulate_paths,
    simulate_terminal,
)
from .params import ModelParams, ParamSchedule, dump_config, load_config
from .perpetual import (
    PerpetualSpec,
    drift_ratio,
    growth_coefficient,
    growth_coefficient_direct,
    pde_residual,
    pde_residual_fn,
    perpetual_value,
    stationary_exponent,
)
from .term_structure import (
    CurvePoint,
    ForwardSpec,
    curve_to_csv,
    discount_curve,
    forward_price,
    forward_value,
    futures_price,
    zcb_hedge,
    zcb_price,
)

__version__ = "0.1.0"
