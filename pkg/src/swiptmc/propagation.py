"""Wall-penalised path loss and the intensity of the per-wall-count loss processes.

PHs behind exactly ``W`` walls form an inhomogeneous PPP; mapping each one to
its loss ``kappa r^beta / K^W`` gives a 1-D PPP on the loss axis whose mean
measure on ``[0, alpha)`` is computed here in closed form (a power series in
the radius) together with its derivative.  The serving loss is the minimum
over all hit PHs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammainc

from .scenario import SPEED_OF_LIGHT, NetworkScenario
from .specfun import gauss_2f1

log = logging.getLogger(__name__)

SERIES_CAP = 200
SERIES_TOL = 1e-12
_THETA_NODES, _THETA_WEIGHTS = np.polynomial.legendre.leggauss(96)


@dataclass(frozen=True)
class PropagationParams:
    beta: float
    K: float
    f_c: float
    lambda_w: float
    lambda_ph: float
    R_D: float
    W_max: int = 6

    def __post_init__(self):
        if not self.beta > 2:
            raise ValueError("beta must exceed 2")
        if not 0 < self.K <= 1:
            raise ValueError("K must lie in (0, 1]")
        if self.W_max < 0:
            raise ValueError("W_max must be non-negative")
        if self.lambda_w < 0 or self.lambda_ph < 0:
            raise ValueError("densities must be non-negative")

    @classmethod
    def from_scenario(cls, sc: NetworkScenario) -> "PropagationParams":
        return cls(beta=sc.beta, K=sc.K, f_c=sc.f_c, lambda_w=sc.lambda_w,
                   lambda_ph=sc.lambda_ph, R_D=sc.R_D, W_max=sc.W_max)

    @property
    def kappa(self) -> float:
        return (4.0 * math.pi * self.f_c / SPEED_OF_LIGHT) ** 2

    @property
    def near_field_radius(self) -> float:
        return self.kappa ** (-1.0 / self.beta)

    def saturation(self, W: int) -> float:
        """Largest loss a PH inside the disk can have behind ``W`` walls."""
        return self.R_D**self.beta * self.kappa / self.K**W


def path_loss(r, W, params: PropagationParams):
    """Loss ``kappa r^beta / K^W``, clamped to 1 inside the near-field radius."""
    r = np.asarray(r, dtype=float)
    W = np.asarray(W)
    loss = params.kappa * r**params.beta / params.K**W
    out = np.where(r >= params.near_field_radius, loss, 1.0)
    if out.ndim == 0:
        return float(out)
    return out


def angular_moment(n: int) -> float:
    """Integral of ``(|cos t| + |sin t|)^n`` over one turn."""
    half = (n + 1) / 2.0
    first = 2.0 ** (n / 2.0) * math.sqrt(math.pi) * math.exp(
        math.lgamma(half) - math.lgamma((n + 2) / 2.0)
    )
    second = math.sqrt(2.0) * gauss_2f1(0.5, half, half + 1.0, 0.5).real / (n + 1)
    return 4.0 * (first - second)


class IntensityModel:
    """Intensity family ``Lambda_{W,q}([0, alpha))`` for ``W = 0..W_max``.

    ``q`` thins the PH density (``q_hit`` for the serving candidates,
    ``1 - q_hit`` for the other PHs).
    """

    def __init__(self, params: PropagationParams, q: float):
        if not 0.0 <= q <= 1.0:
            raise ValueError("q must lie in [0, 1]")
        self.params = params
        self.q = q
        self.fallback = {}
        self._coef = {}
        for W in range(params.W_max + 1):
            self._coef[W] = self._build_series(W)

    # -- series coefficients -------------------------------------------------

    def _build_series(self, W):
        p = self.params
        scale = self.q * p.lambda_ph / math.factorial(W)
        R = p.R_D
        coefs, ns = [], []
        total = 0.0
        abs_total = 0.0
        small = 0
        for i in range(SERIES_CAP):
            n = i + W
            c = scale * (-1) ** i / (math.factorial(i) * (n + 2)) * p.lambda_w**n * angular_moment(n)
            coefs.append(c)
            ns.append(n)
            term = c * R ** (n + 2)
            total += term
            abs_total += abs(term)
            if abs(term) <= SERIES_TOL * max(abs(total), 1e-300):
                small += 1
                if small >= 2:
                    break
            else:
                small = 0
            if p.lambda_w == 0.0:
                break
        converged = small >= 2 or p.lambda_w == 0.0
        ill = abs_total > 1e8 * max(abs(total), 1e-300) and total != 0.0
        if not converged or ill:
            log.warning("intensity series for W=%d falls back to quadrature", W)
            self.fallback[W] = True
        else:
            self.fallback[W] = False
        return np.array(ns), np.array(coefs)

    def series(self, W: int):
        """``(n, c)`` with ``Lambda_W = sum_i c_i rho^(n_i + 2)`` and ``n_i = W + i``."""
        return self._coef[W]

    @cached_property
    def max_terms(self) -> int:
        return max(len(c) for _, c in self._coef.values())

    # -- evaluation ------------------------------------------------------------

    def saturation(self, W: int) -> float:
        return self.params.saturation(W)

    def radius(self, W: int, alpha):
        """Radius at which a PH behind ``W`` walls has loss ``alpha`` (capped at R_D)."""
        p = self.params
        alpha = np.asarray(alpha, dtype=float)
        rho = (np.maximum(alpha, 0.0) * p.K**W / p.kappa) ** (1.0 / p.beta)
        return np.minimum(rho, p.R_D)

    def intensity(self, W: int, alpha):
        """``Lambda_{W,q}([0, alpha))``; constant beyond the saturation loss."""
        if W > self.params.W_max or W < 0:
            return _like(alpha, 0.0)
        rho = self.radius(W, alpha)
        if self.fallback[W]:
            out = self._intensity_quadrature(W, rho)
        else:
            n, c = self._coef[W]
            out = _power_sum(c, n + 2, rho)
        return _finish(out, alpha)

    def derivative(self, W: int, alpha):
        """Derivative of :meth:`intensity` in ``alpha``; zero once saturated."""
        if W > self.params.W_max or W < 0:
            return _like(alpha, 0.0)
        p = self.params
        a = np.asarray(alpha, dtype=float)
        rho = self.radius(W, a)
        live = (a > 0) & (a < self.saturation(W))
        safe_a = np.where(live, a, 1.0)
        if self.fallback[W]:
            ang = self._angular_pdf(W, rho)
            out = self.q * p.lambda_ph * rho * rho / (p.beta * safe_a) * ang
        else:
            n, c = self._coef[W]
            out = _power_sum(c * (n + 2), n + 2, rho) / (p.beta * safe_a)
        out = np.where(live, out, 0.0)
        return _finish(out, alpha)

    def total(self, alpha):
        return sum(np.asarray(self.intensity(W, alpha)) for W in range(self.params.W_max + 1))

    def total_derivative(self, alpha):
        return sum(np.asarray(self.derivative(W, alpha)) for W in range(self.params.W_max + 1))

    # -- quadrature route ------------------------------------------------------

    def _theta(self):
        t = 0.5 * (_THETA_NODES + 1.0) * (math.pi / 4.0)
        w = _THETA_WEIGHTS * (math.pi / 8.0)
        return np.abs(np.cos(t)) + np.abs(np.sin(t)), w

    def _intensity_quadrature(self, W, rho):
        """Angular Gauss-Legendre of the exact radial integral (8-fold symmetry)."""
        p = self.params
        rho = np.asarray(rho, dtype=float)
        if p.lambda_w == 0.0:
            return self.q * p.lambda_ph * math.pi * rho**2 if W == 0 else 0.0 * rho
        cth, w = self._theta()
        lam = p.lambda_w * cth
        x = np.multiply.outer(rho, lam)
        radial = (W + 1) / lam**2 * gammainc(W + 2, x)
        return 8.0 * self.q * p.lambda_ph * (radial * w).sum(axis=-1)

    def _angular_pdf(self, W, rho):
        p = self.params
        cth, w = self._theta()
        mu = p.lambda_w * np.multiply.outer(np.asarray(rho, dtype=float), cth)
        with np.errstate(divide="ignore", invalid="ignore"):
            pw = np.exp(W * np.log(np.where(mu > 0, mu, 1.0)) - mu - math.lgamma(W + 1))
        if W > 0:
            pw = np.where(mu > 0, pw, 0.0)
        return 8.0 * (pw * w).sum(axis=-1)


def _power_sum(coef, powers, rho):
    """``sum_i coef_i rho^powers_i`` vectorized over ``rho``."""
    rho = np.asarray(rho, dtype=float)
    return (coef * np.power.outer(rho, powers.astype(float))).sum(axis=-1)


def _like(alpha, value):
    if np.ndim(alpha) == 0:
        return float(value)
    return np.full(np.shape(alpha), value, dtype=float)


def _finish(out, alpha):
    if np.ndim(alpha) == 0:
        return float(np.asarray(out))
    return np.asarray(out, dtype=float)


# -- serving loss --------------------------------------------------------------


def intensity(model: IntensityModel, W: int, alpha):
    return model.intensity(W, alpha)


def intensity_derivative(model: IntensityModel, W: int, alpha):
    return model.derivative(W, alpha)


def serving_loss_cdf(hit_model: IntensityModel, alpha):
    """CDF of the minimum loss over hit PHs (defective: no serving PH is possible)."""
    return _finish(1.0 - np.exp(-np.asarray(hit_model.total(alpha))), alpha)


def serving_loss_pdf_weight(hit_model: IntensityModel, alpha):
    """Density of the serving loss: summed derivative times the void probability."""
    lam = np.asarray(hit_model.total(alpha))
    dlam = np.asarray(hit_model.total_derivative(alpha))
    return _finish(dlam * np.exp(-lam), alpha)


def serving_probability(hit_model: IntensityModel) -> float:
    """Probability that at least one hit PH (within ``W_max`` walls) exists."""
    big = hit_model.saturation(hit_model.params.W_max)
    return float(serving_loss_cdf(hit_model, big * 2.0))


def models_for(sc: NetworkScenario):
    """``(hit, other)`` intensity models for a scenario."""
    params = PropagationParams.from_scenario(sc)
    return IntensityModel(params, sc.q_hit), IntensityModel(params, 1.0 - sc.q_hit)
