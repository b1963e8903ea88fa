"""Joint CCDF of the information rate and harvested power, and its level sets.

``F_c(R*, Q*) = Pr{R >= R*, Q >= Q*}`` is evaluated as

    K_mn sum_{s,t} a_{s,t} (J1_{s,t} - J2_{s,t}),

where each ``J`` is a double integral over the serving loss ``y`` (weighted
by its density) and the inversion frequency ``omega`` of

    Im{ e^{-j omega q*/P} G_t(s - j omega/y) Phi(omega; y) } / (pi omega)      (J1)
    Im{ e^{+j omega sigma*^2/P} G_t(s + j omega gamma/y) Phi(omega; y) } / (pi omega)  (J2)

with ``G_t(u) = u^{-(1+t)} Gamma(1+t, u y T*/P)``.  The interference CF
``Phi`` does not depend on the query, so :class:`JccdfEngine` tabulates it
once per scenario on a ``(y, omega)`` grid and reuses it for every query.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .interference import (
    InversionError,
    _log_edges,
    subpanel_interpolation,
    cf_horizon,
    cf_onset,
    log_cf_grid,
    tail_bound,
)
from .mimo import EigenPdfCoefficients, eigen_pdf_coefficients
from .propagation import IntensityModel, models_for, serving_loss_cdf, serving_loss_pdf_weight
from .scenario import NetworkScenario

log = logging.getLogger(__name__)

# beyond this SINR threshold the rate requirement is treated as absent
GAMMA_INF = 1e6


@dataclass(frozen=True)
class LinkBudget:
    P: float
    B: float
    rho: float
    zeta: float
    sigma_n2: float
    sigma_c2: float

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if not 0.0 < self.zeta <= 1.0:
            raise ValueError("zeta must lie in (0, 1]")
        if not (self.P > 0 and self.B > 0):
            raise ValueError("P and B must be positive")

    @classmethod
    def from_scenario(cls, sc: NetworkScenario) -> "LinkBudget":
        return cls(P=sc.P, B=sc.B, rho=sc.rho, zeta=sc.zeta,
                   sigma_n2=sc.sigma_n2, sigma_c2=sc.sigma_c2)

    @property
    def sigma_star2(self) -> float:
        return self.sigma_n2 + self.sigma_c2 / (1.0 - self.rho)


@dataclass(frozen=True)
class TradeoffQuery:
    """Minimum rate ``R_star`` [bit/s] and harvested power ``Q_star`` [W]."""

    R_star: float
    Q_star: float

    def __post_init__(self):
        if self.R_star < 0 or self.Q_star < 0:
            raise ValueError("R_star and Q_star must be non-negative")

    def gamma(self, budget: LinkBudget) -> float:
        """SINR threshold; infinite for a zero rate requirement."""
        x = math.expm1(self.R_star / budget.B * math.log(2.0))
        return math.inf if x == 0 else 1.0 / x

    def q_star(self, budget: LinkBudget) -> float:
        return self.Q_star / (budget.rho * budget.zeta)

    def T_star(self, budget: LinkBudget) -> float:
        g = self.gamma(budget)
        if math.isinf(g):
            return 0.0
        return (self.q_star(budget) + budget.sigma_star2) / (g + 1.0)


@dataclass(frozen=True)
class TradeoffPoint:
    R: float
    Q: float
    jccdf: float


def instantaneous_rate_energy(g0, L0, I, budget: LinkBudget):
    """Rate [bit/s] and harvested power [W] of one realization."""
    g0 = np.asarray(g0, dtype=float)
    L0 = np.asarray(L0, dtype=float)
    I = np.asarray(I, dtype=float)
    signal = g0 / L0
    sinr = budget.P * signal / (budget.P * I + budget.sigma_star2)
    R = budget.B * np.log2(1.0 + sinr)
    Q = budget.rho * budget.zeta * budget.P * (signal + I)
    if R.ndim == 0:
        return float(R), float(Q)
    return R, Q


# ---------------------------------------------------------------------------
# kernel
# ---------------------------------------------------------------------------


def _gamma_kernel(t: int, u, x):
    """``u^{-(1+t)} Gamma(1+t, u x)`` for real ``x >= 0`` as a finite sum.

    ``Gamma(1+t, v) = e^{-v} sum_j t!/(t-j)! v^{t-j}`` gives
    ``e^{-u x} sum_j t!/(t-j)! x^{t-j} u^{-1-j}``, which stays finite for
    every ``u`` with positive real part.
    """
    inv = 1.0 / u
    acc = np.zeros(np.broadcast(u, x).shape, dtype=complex)
    coef = 1.0
    p = inv
    for j in range(t + 1):
        acc = acc + coef * x ** (t - j) * p
        coef *= t - j
        p = p * inv
    return np.exp(-u * x) * acc


def gamma_kernel(t: int, u, x):
    """Public form of the incomplete-gamma kernel (see :func:`_gamma_kernel`)."""
    return _gamma_kernel(t, np.asarray(u, dtype=complex), np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# engine
# ---------------------------------------------------------------------------


class JccdfEngine:
    """Cached evaluator of the joint CCDF for one scenario.

    Parameters
    ----------
    scenario:
        Network parameters.
    y_per_decade, y_order:
        Log-panel density and Gauss-Legendre order of the serving-loss grid.
    w_per_decade, w_order:
        Same for the inversion frequency.
    mass_tol:
        Serving-loss mass ignored above the grid.
    """

    _PHASE = 8.0  # max radians of query oscillation per omega panel
    _ROW_TOL = 1e-11
    _TAIL_TOL = 1e-8

    def __init__(self, scenario: NetworkScenario, y_per_decade: int = 3, y_order: int = 8,
                 w_per_decade: int = 4, w_order: int = 12, mass_tol: float = 1e-10):
        self.scenario = scenario
        self.budget = LinkBudget.from_scenario(scenario)
        self.hit, self.other = models_for(scenario)
        self.coeffs: EigenPdfCoefficients = eigen_pdf_coefficients(scenario.n_t, scenario.n_r)
        self._terms = self.coeffs.terms
        self._kernel_bound = sum(abs(c) * math.factorial(t) for _, t, c in self._terms)
        self.serving_mass = float(serving_loss_cdf(self.hit, 2.0 * self.hit.saturation(
            scenario.W_max)))
        self._build_y(y_per_decade, y_order, mass_tol)
        self._w_order = w_order
        self._x, self._wx = np.polynomial.legendre.leggauss(w_order)
        self._cache = {}
        self._log0 = {}
        self._build_omega(w_per_decade)

    # -- grids ---------------------------------------------------------------

    def _build_y(self, per_decade, order, mass_tol):
        hit = self.hit
        total = self.serving_mass
        if total <= 0.0:
            self.y = np.array([1.0])
            self.y_weights = np.array([0.0])
            return
        # upper end: where the remaining serving mass is negligible
        top = 1.0
        cap = 2.0 * hit.saturation(hit.params.W_max)
        while top < cap and total - float(serving_loss_cdf(hit, top)) > mass_tol:
            top *= 10.0
        top = min(top, cap)
        breaks = [1.0] + sorted(a for a in (hit.saturation(W) for W in range(
            hit.params.W_max + 1)) if 1.0 < a < top) + [top]
        x, w = np.polynomial.legendre.leggauss(order)
        nodes, weights = [1.0], [float(serving_loss_cdf(hit, 1.0))]  # atom at the clamp
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            for a, b in zip(*_log_edges(lo, hi, per_decade)):
                ua, ub = math.log(a), math.log(b)
                u = 0.5 * (ub - ua) * x + 0.5 * (ub + ua)
                yy = np.exp(u)
                dens = np.asarray(serving_loss_pdf_weight(hit, yy))
                nodes.extend(yy)
                weights.extend(0.5 * (ub - ua) * w * dens * yy)
        self.y = np.array(nodes)
        self.y_weights = np.array(weights)
        self.mass_error = abs(self.y_weights.sum() - total)

    def _logcf(self, w, y=None):
        y = self.y if y is None else y
        return log_cf_grid(w, y, self.hit, self.other)

    def _build_omega(self, per_decade):
        # rows above this loss carry less than 1e-8 of the mass; their slower
        # CF decay does not set the horizon
        cum = np.cumsum(self.y_weights)
        ref = int(np.searchsorted(cum, cum[-1] - 1e-8))
        y_ref = np.array([self.y[min(ref, len(self.y) - 1)]])
        y_lo = np.array([self.y.min()])

        def slowest(w):
            return self._logcf(w, y_ref)[0]

        def fastest(w):
            return self._logcf(w, y_lo)[0]

        self._pd = per_decade
        self.w_hi = cf_horizon(slowest)
        self.tail = tail_bound(slowest, self.w_hi)
        if not self.tail < 1e-6:
            raise InversionError("CF tail too heavy for truncation", tail_bound=self.tail)
        lo = min(cf_onset(slowest, self.w_hi / 10.0), cf_onset(fastest, self.w_hi / 10.0))
        self._k_hi = int(math.ceil(math.log10(self.w_hi) * per_decade))
        self._heads = {}
        self._set_low(lo)

    def _edge(self, k: int) -> float:
        return 10.0 ** (k / self._pd)

    def _set_low(self, lo):
        """Move the lower panel edge to the lattice point at or below ``lo``."""
        self._k_lo = int(math.floor(math.log10(lo) * self._pd))
        self.w_lo = self._edge(self._k_lo)
        if self._k_lo not in self._heads:
            xh, wh = np.polynomial.legendre.leggauss(12)
            nodes = 0.5 * self.w_lo * (xh + 1.0)
            self._heads[self._k_lo] = (nodes, 0.5 * self.w_lo * wh,
                                       np.exp(self._logcf(nodes)))

    def _panel(self, k: int, level: int):
        """``(omega, weights, cf, rows)`` for lattice panel ``k`` split ``2^level`` times.

        Refined panels only carry the rows whose contribution can exceed
        ``_ROW_TOL``: the kernel is bounded by ``sum |K a_st| t!``, so a row's
        share of the panel is at most that times ``max|Phi| log(b/a)``.
        """
        key = (k, level)
        if key in self._cache:
            return self._cache[key]
        rows = np.arange(len(self.y))
        if level > 0:
            _, _, cf0, rows0 = self._panel(k, 0)
            bound = (self._kernel_bound * self.y_weights[rows0]
                     * np.abs(cf0).max(axis=1) * math.log(self._edge(k + 1) / self._edge(k)))
            rows = rows0[bound > self._ROW_TOL]
        a, b = self._edge(k), self._edge(k + 1)
        if level == 0:
            nodes = 0.5 * (b - a) * self._x + 0.5 * (b + a)
            logc = self._logcf(nodes)
            self._log0[k] = logc
            cf = np.exp(logc)
        else:
            # the CF is smooth across the lattice panel: interpolate its log
            # from the level-0 nodes instead of re-evaluating it
            t, m = subpanel_interpolation(self._x, level)
            nodes = 0.5 * (b - a) * t + 0.5 * (b + a)
            cf = np.exp(self._log0[k][rows] @ m.T) if len(rows) else \
                np.zeros((0, len(nodes)), dtype=complex)
        weights = np.tile(0.5 * (b - a) / 2**level * self._wx, 2**level)
        self._cache[key] = (nodes, weights, cf, rows)
        return self._cache[key]

    def nodes_for(self, z: float, stop: int | None = None):
        """Iterate ``(omega, weights, cf, rows)`` blocks resolving frequency ``z``.

        Panels from lattice index ``stop`` upward are skipped.
        """
        stop = self._k_hi if stop is None else stop
        nodes, weights, cf = self._heads[self._k_lo]
        yield nodes, weights, cf, np.arange(len(self.y))
        for k in range(self._k_lo, stop):
            width = self._edge(k + 1) - self._edge(k)
            level = max(0, int(math.ceil(math.log2(max(width * z / self._PHASE, 1.0)))))
            if level > 16:
                raise InversionError(f"frequency {z:g} needs too fine a panel split")
            yield self._panel(k, level)

    # -- queries -------------------------------------------------------------

    def _kernel_sum(self, u_fn, w, rows, x_y):
        y = self.y[rows, None]
        xy = x_y[rows, None]
        acc = np.zeros((len(rows), len(w)), dtype=complex)
        for s, t, c in self._terms:
            acc += c * _gamma_kernel(t, u_fn(s, w[None, :], y), xy)
        return acc

    def _cutoff(self, u_fn, x_y, z):
        """First lattice index whose tail the query oscillation already averages out.

        Integrating by parts, the tail of ``int e^{-j z w} g(w) dw`` beyond
        ``b`` is at most ``(|g(b)| + TV_b(g)) / z`` for the slowly varying
        envelope ``g``; the variation is read off the coarse panels.
        """
        if z <= 0.0 or z * self.w_hi <= self._PHASE:
            return self._k_hi
        rows = np.arange(len(self.y))
        rate = float(u_fn(0, 1.0, self.y[0]).imag * x_y[0])
        env, ends = [], []
        for k in range(self._k_lo, self._k_hi):
            w, _, cf, _ = self._panel(k, 0)
            m = np.sum(self.y_weights[:, None] * self._kernel_sum(u_fn, w, rows, x_y) * cf,
                       axis=0)
            env.append(m * np.exp(1j * rate * w) / w)
            ends.append(sum(len(e) for e in env) - 1)
        env = np.concatenate(env)
        tv = np.concatenate([np.cumsum(np.abs(np.diff(env))[::-1])[::-1], [0.0]])
        # factor 2 covers variation between the coarse samples
        bound = 2.0 * (np.abs(env) + tv) / (math.pi * z)
        for k, end in zip(range(self._k_lo, self._k_hi), ends):
            if bound[end] < self._TAIL_TOL:
                return k + 1
        return self._k_hi

    def _j(self, phase_rate, u_fn, x_y, sign, z):
        """``sum_st K a_st int int Im{e^{sign j omega phase} G_t(u) Phi}/(pi omega)``."""
        total = 0.0
        for w, wt, cf, rows in self.nodes_for(z, self._cutoff(u_fn, x_y, z)):
            if len(rows) == 0:
                continue
            yw = self.y_weights[rows, None]
            w2 = w[None, :]
            phase = np.exp(sign * 1j * w2 * phase_rate)
            acc = self._kernel_sum(u_fn, w, rows, x_y)
            vals = np.imag(phase * acc * cf) / w2
            total += float(np.sum(yw * vals * wt[None, :]))
        return total / math.pi

    def jccdf(self, R_star: float, Q_star: float) -> float:
        """Joint CCDF ``Pr{R >= R_star, Q >= Q_star}``."""
        q = TradeoffQuery(R_star, Q_star)
        bud = self.budget
        P = bud.P
        gam = q.gamma(bud)
        qs = q.q_star(bud)
        sig = bud.sigma_star2
        if gam < GAMMA_INF:
            T = q.T_star(bud)
            # the SINR kernel varies on omega ~ s y / gamma; extend the grid down
            need_lo = 1e-3 * self.y.min() / gam
            if need_lo < self.w_lo:
                self._set_low(10.0 ** math.floor(math.log10(need_lo)))
        else:
            T = 0.0
        x_y = T / P * self.y
        z1 = abs(qs - T) / P
        j1 = self._j(qs / P, lambda s, w, y: s - 1j * w / y, x_y, -1.0, z1)
        if gam < GAMMA_INF:
            z2 = abs(gam * T - sig) / P
            j2 = self._j(sig / P, lambda s, w, y: s + 1j * w * gam / y, x_y, 1.0, z2)
            val = j1 - j2
        else:
            # no rate requirement: the first interference CDF is identically 1
            val = 0.5 * float(np.sum(self.y_weights)) + j1
        resid = max(0.0, -val, val - 1.0)
        if resid > 1e-3:
            raise InversionError(f"J-CCDF residual {resid:.3g} outside [0, 1]", partial=val)
        if resid > 0:
            log.debug("clamped J-CCDF residual %.3g", resid)
        return min(max(val, 0.0), 1.0)


_ENGINES: dict = {}


def engine_for(scenario: NetworkScenario) -> JccdfEngine:
    """Process-wide cached engine per scenario (scenarios are hashable)."""
    eng = _ENGINES.get(scenario)
    if eng is None:
        eng = JccdfEngine(scenario)
        _ENGINES[scenario] = eng
    return eng


def jccdf(query: TradeoffQuery, scenario: NetworkScenario) -> float:
    return engine_for(scenario).jccdf(query.R_star, query.Q_star)


def max_power_at(level: float, R: float, engine: JccdfEngine, q_lo: float = 1e-15,
                 rtol: float = 1e-3):
    """Largest ``Q`` with ``jccdf(R, Q) >= level`` by bisection on ``log Q``.

    Returns ``None`` when even ``q_lo`` misses the level.
    """
    if engine.jccdf(R, q_lo) < level:
        return None
    lo = q_lo
    hi = q_lo * 10.0
    while engine.jccdf(R, hi) >= level:
        lo = hi
        hi *= 10.0
        if hi > 1e3 * engine.budget.P:
            return lo
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if engine.jccdf(R, mid) >= level:
            lo = mid
        else:
            hi = mid
    return lo


def max_rate_at(level: float, Q: float, engine: JccdfEngine, R_lo: float = 1.0,
                rtol: float = 1e-4):
    """Largest ``R`` with ``jccdf(R, Q) >= level`` by bisection on ``log R``.

    Returns ``None`` when even ``R_lo`` misses the level.
    """
    if engine.jccdf(R_lo, Q) < level:
        return None
    lo, hi = R_lo, R_lo * 10.0
    while engine.jccdf(hi, Q) >= level:
        lo = hi
        hi *= 10.0
        if hi > 1e3 * engine.budget.B:
            return lo
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if engine.jccdf(mid, Q) >= level:
            lo = mid
        else:
            hi = mid
    return lo


def tradeoff_curve(level: float, R_grid, scenario: NetworkScenario,
                   engine: JccdfEngine | None = None):
    """Level set of the joint CCDF: for each rate the largest feasible power."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    eng = engine or engine_for(scenario)
    out = []
    for R in R_grid:
        Q = max_power_at(level, float(R), eng)
        if Q is not None:
            out.append(TradeoffPoint(R=float(R), Q=Q, jccdf=eng.jccdf(float(R), Q)))
    if not out:
        log.warning("level %.3g unreachable on the whole rate grid", level)
    return out
