"""Joint rate/power trade-off and real-time computing outage for indoor SWIPT networks."""

from .compute import operating_point, optimal_frequencies, outage_probability, required_power
from .scenario import ComputeProfile, NetworkScenario, dbm_to_watt, watt_to_dbm
from .tradeoff import JccdfEngine, TradeoffQuery, engine_for, jccdf, tradeoff_curve

__version__ = "0.1.0"

__all__ = [
    "ComputeProfile",
    "JccdfEngine",
    "NetworkScenario",
    "TradeoffQuery",
    "dbm_to_watt",
    "engine_for",
    "jccdf",
    "operating_point",
    "optimal_frequencies",
    "outage_probability",
    "required_power",
    "tradeoff_curve",
    "watt_to_dbm",
]
