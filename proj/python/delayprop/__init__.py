"""Phase-linked discrete Bayesian networks for flight delay propagation."""

import os as _os

_scenarios = _os.path.join(_os.path.dirname(__file__), "scenarios")
if _os.path.isdir(_scenarios):
    _os.environ.setdefault("DELAYPROP_SCENARIO_DIR", _scenarios)

from ._delayprop import (  # noqa: E402
    BinScheme,
    InconsistentEvidence,
    Network,
    approx_mse,
    canonical_json,
    default_scenario,
    derive_gdp,
    expected_value,
    ingest,
    ks_statistic,
    map_state,
    scaled_mse,
    simulate,
)

__all__ = [
    "BinScheme",
    "InconsistentEvidence",
    "Network",
    "approx_mse",
    "canonical_json",
    "default_scenario",
    "derive_gdp",
    "expected_value",
    "ingest",
    "ks_statistic",
    "map_state",
    "scaled_mse",
    "simulate",
]
