"""Deployment, radio and CPU parameters shared by every module."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

SPEED_OF_LIGHT = 299_792_458.0


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def watt_to_dbm(watt: float) -> float:
    if watt <= 0:
        return -math.inf
    return 10.0 * math.log10(watt * 1000.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class NetworkScenario:
    """Physical and deployment parameters of the SWIPT network.

    Powers are in watts, distances in meters, frequencies in Hz.  The
    defaults reproduce the reference indoor deployment (60 m disk, PHs with
    3 m half inter-distance, 30 dBm, 200 kHz at 2.1 GHz).
    """

    R_D: float = 60.0
    d_PH: float = 3.0
    q_hit: float = 0.7
    P: float = 1.0
    B: float = 200e3
    f_c: float = 2.1e9
    lambda_w: float = 0.03
    sigma_c2: float = dbm_to_watt(-70.0)
    noise_figure_db: float = 10.0
    zeta: float = 0.8
    rho: float = 0.99
    n_r: int = 2
    n_t: int = 4
    beta: float = 2.5
    K: float = 0.1
    W_max: int = 6

    def __post_init__(self):
        checks = [
            (self.R_D > 0, "R_D must be positive"),
            (self.d_PH > 0, "d_PH must be positive"),
            (0.0 <= self.q_hit <= 1.0, "q_hit must lie in [0, 1]"),
            (self.P > 0, "P must be positive"),
            (self.B > 0, "B must be positive"),
            (self.f_c > 0, "f_c must be positive"),
            (self.lambda_w >= 0, "lambda_w must be non-negative"),
            (self.sigma_c2 >= 0, "sigma_c2 must be non-negative"),
            (0.0 < self.zeta <= 1.0, "zeta must lie in (0, 1]"),
            (0.0 <= self.rho < 1.0, "rho must lie in [0, 1)"),
            (self.n_r >= 1 and self.n_t >= 1, "antenna counts must be >= 1"),
            (self.beta > 2, "beta must exceed 2"),
            (0.0 < self.K <= 1.0, "K must lie in (0, 1]"),
            (self.W_max >= 0, "W_max must be non-negative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    @property
    def lambda_ph(self) -> float:
        return 1.0 / (math.pi * self.d_PH**2)

    @property
    def kappa(self) -> float:
        return (4.0 * math.pi * self.f_c / SPEED_OF_LIGHT) ** 2

    @property
    def sigma_n2(self) -> float:
        """Thermal noise power: -174 dBm/Hz + 10 log10(B) + noise figure."""
        return dbm_to_watt(-174.0 + 10.0 * math.log10(self.B) + self.noise_figure_db)

    @property
    def sigma_star2(self) -> float:
        return self.sigma_n2 + self.sigma_c2 / (1.0 - self.rho)

    def with_(self, **changes) -> "NetworkScenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class ComputeProfile:
    """CPU and task parameters.

    ``k`` is the total number of logical operations per processed bit; a
    sequence of per-task counts is summed.
    """

    xi: float = 1e-28
    k: float = 20.0
    N: float = 600.0
    M: float = 32.0
    f_max: float = 1e9
    k_tasks: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.k_tasks:
            object.__setattr__(self, "k", float(sum(self.k_tasks)))
        for name in ("xi", "N", "M", "f_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.k < 0:
            raise ValueError("k must be non-negative")

    @property
    def cycles(self) -> float:
        """CPU cycles per control message, kN."""
        return self.k * self.N

    def with_(self, **changes) -> "ComputeProfile":
        return replace(self, **changes)
