"""Pricing engine for index-linked contingent convertible catastrophe notes.

Semi-analytic valuation (rates and equity integrated out in closed form;
Monte Carlo only over the catastrophe-loss trigger time) plus a full joint
three-process Monte Carlo oracle for cross-validation, and a CLI.
"""

from .config import (
    CocoCatTerms,
    ConstantPrice,
    MarketParams,
    McParams,
    PowerOfShare,
    ResolvedConfig,
    canonical_config,
    canonical_raw,
    load_config,
    resolve_config,
)
from .errors import ConfigError, NumericalError
from .loss import (
    CENSORED,
    EventBatch,
    IntensityParams,
    LossModel,
    TriggerSample,
    intensity_at,
    simulate_event_batch,
    survival_prob,
    tilt_model,
    trigger_distribution,
)
from .oracle import PathBundle, oracle_report, price_direct, simulate_joint_path
from .pricing import (
    PriceBreakdown,
    conversion_leg,
    coupon_leg,
    coupon_weights,
    price,
    redemption_leg,
    run_sweep,
)
from .rates import (
    LongstaffParams,
    conversion_measure_params,
    girsanov_transform,
    implied_initial_libor,
    zcb_price,
)
from .severity import BurrSeverity, ExponentialSeverity

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BurrSeverity",
    "CENSORED",
    "CocoCatTerms",
    "ConfigError",
    "ConstantPrice",
    "EventBatch",
    "ExponentialSeverity",
    "IntensityParams",
    "LongstaffParams",
    "LossModel",
    "MarketParams",
    "McParams",
    "NumericalError",
    "PathBundle",
    "PowerOfShare",
    "PriceBreakdown",
    "ResolvedConfig",
    "TriggerSample",
    "canonical_config",
    "canonical_raw",
    "conversion_leg",
    "conversion_measure_params",
    "coupon_leg",
    "coupon_weights",
    "girsanov_transform",
    "implied_initial_libor",
    "intensity_at",
    "load_config",
    "oracle_report",
    "price",
    "price_direct",
    "redemption_leg",
    "resolve_config",
    "run_sweep",
    "simulate_event_batch",
    "simulate_joint_path",
    "survival_prob",
    "tilt_model",
    "trigger_distribution",
    "zcb_price",
]
