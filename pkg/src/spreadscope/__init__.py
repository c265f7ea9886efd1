"""Term-spread recession modelling: data, trees, ensembles, attributions, rules."""

from .data import (
    SPREAD_NAMES,
    SPREADS,
    TENORS,
    Dataset,
    SpreadFrame,
    YieldPanel,
    attach_target,
    compute_spreads,
    descriptive_stats,
    parse_yield_csv,
    pearson_correlations,
    temporal_split,
)
from .errors import SpreadscopeError

__version__ = "0.1.0"

__all__ = [
    "SPREAD_NAMES",
    "SPREADS",
    "TENORS",
    "Dataset",
    "SpreadFrame",
    "YieldPanel",
    "SpreadscopeError",
    "attach_target",
    "compute_spreads",
    "descriptive_stats",
    "parse_yield_csv",
    "pearson_correlations",
    "temporal_split",
    "__version__",
]
