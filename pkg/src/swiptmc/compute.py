"""CPU energy under DVFS, the power needed for real-time operation, and outage.

A control message of ``M`` bits triggers ``k N`` CPU cycles that must finish
before the next message arrives, i.e. within ``M/R`` seconds.  Minimising
``xi sum f_i^2`` under that deadline gives equal clocks ``f = kNR/M``.
"""

from __future__ import annotations

import logging
import math
import numpy as np
from scipy.optimize import brentq

from .scenario import ComputeProfile, NetworkScenario
from .tradeoff import JccdfEngine, TradeoffPoint, engine_for

log = logging.getLogger(__name__)


class InfeasibleRate(ValueError):
    """The rate needs a clock above ``f_max``."""

    def __init__(self, R, bound):
        super().__init__(f"rate {R:g} bit/s exceeds the feasibility bound {bound:g} bit/s")
        self.R = R
        self.bound = bound


class NoIntersection(RuntimeError):
    """The required-power curve does not cross the trade-off level curve."""


def max_rate(profile: ComputeProfile) -> float:
    """Largest rate the CPU can follow, ``f_max M/(kN)``."""
    if profile.cycles == 0:
        return math.inf
    return profile.f_max * profile.M / profile.cycles


def _check(profile, R):
    if R < 0:
        raise ValueError("rate must be non-negative")
    bound = max_rate(profile)
    # one ulp of slack so the boundary rate itself is feasible
    if R > bound * (1.0 + 1e-12):
        raise InfeasibleRate(R, bound)


def cpu_energy(frequencies, xi: float) -> float:
    """Energy ``xi sum f_i^2`` of a per-cycle clock schedule."""
    f = np.asarray(frequencies, dtype=float)
    return float(xi * np.sum(f * f))


def optimal_frequencies(profile: ComputeProfile, R: float):
    """Equal per-cycle clock ``kNR/M`` and the resulting energy per message."""
    _check(profile, R)
    cycles = profile.cycles
    f = min(cycles * R / profile.M, profile.f_max) if cycles else 0.0
    E = profile.xi * R**2 * cycles**3 / profile.M**2
    return f, E


def required_power(profile: ComputeProfile, R):
    """Harvested power needed for real-time operation, ``xi (kNR)^3 / M^3``."""
    R_arr = np.asarray(R, dtype=float)
    for r in np.atleast_1d(R_arr):
        _check(profile, float(r))
    Q = profile.xi * (profile.cycles * R_arr) ** 3 / profile.M**3
    return float(Q) if Q.ndim == 0 else Q


def tasks_per_second(profile: ComputeProfile, R):
    return np.asarray(R, dtype=float) / profile.M


def cycles_per_second(profile: ComputeProfile, R):
    return profile.cycles * np.asarray(R, dtype=float) / profile.M


def outage_probability(profile: ComputeProfile, R: float, scenario: NetworkScenario,
                       engine: JccdfEngine | None = None) -> float:
    """``1 - F_c(R, required_power(R))``."""
    eng = engine or engine_for(scenario)
    return 1.0 - eng.jccdf(R, required_power(profile, R))


def operating_point(profile: ComputeProfile, level: float, scenario: NetworkScenario,
                    engine: JccdfEngine | None = None, R_lo: float = 1.0,
                    rtol: float = 1e-6):
    """Rate where the required-power curve meets the ``level`` trade-off curve.

    Solves ``F_c(R, required_power(R)) = level``; the left side is
    nonincreasing in ``R``.  Returns ``(TradeoffPoint, tasks_per_second)``.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    eng = engine or engine_for(scenario)

    def gap(logR):
        R = math.exp(logR)
        return eng.jccdf(R, required_power(profile, R)) - level

    lo = math.log(R_lo)
    if gap(lo) < 0:
        raise NoIntersection(f"level {level} is above the joint CCDF at R={R_lo:g}")
    hi_R = min(max_rate(profile), 100.0 * eng.budget.B)
    hi = math.log(hi_R)
    if gap(hi) >= 0:
        raise NoIntersection(f"joint CCDF stays above {level} up to R={hi_R:g}")
    logR = brentq(gap, lo, hi, xtol=1e-9, rtol=rtol)
    R = math.exp(logR)
    Q = required_power(profile, R)
    point = TradeoffPoint(R=R, Q=Q, jccdf=eng.jccdf(R, Q))
    return point, R / profile.M


def rate_at_outage(profile: ComputeProfile, p_out: float, scenario: NetworkScenario,
                   engine: JccdfEngine | None = None, rtol: float = 1e-6) -> float:
    """Largest rate whose outage does not exceed ``p_out``."""
    point, _ = operating_point(profile, 1.0 - p_out, scenario, engine, rtol=rtol)
    return point.R

