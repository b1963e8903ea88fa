"""Characteristic function of the multi-user interference and its inversion.

For PHs behind ``W`` walls the interference CF is ``exp(sum_i c_i D_n(omega))``
with ``c_i`` the intensity series coefficients (see
:class:`~swiptmc.propagation.IntensityModel`) and ``D_n`` the integral of
``j omega/(alpha - j omega)`` against ``d rho(alpha)^(n+2)`` over the
interfering loss range.  ``D_n`` has a hypergeometric closed form; when
``p = (n+2)/beta`` is an integer the hypergeometric has a pole and the
equivalent rational-plus-logarithm form is used, and far above the
saturation loss a 1/omega expansion of the difference avoids cancellation.

Unit-mean exponential fading of the interfering links is integrated out
analytically: ``E[exp(j omega h/alpha)] - 1 = j omega/(alpha - j omega)``.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy import integrate

from .propagation import IntensityModel
from .specfun import gauss_2f1

log = logging.getLogger(__name__)

CF_FLOOR = 1e-8
_LARGE_OMEGA = 2.0  # omega/saturation above which the 1/omega expansion is used
_INT_TOL = 1e-9


class InversionError(RuntimeError):
    """CF inversion could not reach the requested accuracy."""

    def __init__(self, message, partial=None, tail_bound=None):
        super().__init__(message)
        self.partial = partial
        self.tail_bound = tail_bound


class QuadratureError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# closed-form building blocks
# ---------------------------------------------------------------------------


def _is_integer(p):
    return abs(p - round(p)) < _INT_TOL


def g_hit(p: float, x):
    """``1 - 2F1(1, -p; 1-p; j x)`` for real ``x >= 0`` (non-integer ``p``)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=complex)
    nz = x > 0
    if np.any(nz):
        out[nz] = 1.0 - gauss_2f1(1.0, -p, 1.0 - p, 1j * x[nz])
    return out


def _delta_large(p, n2, R_pow, A, rL_pow, L, omega):
    """1/omega expansion of the hit delta, valid for ``omega > A >= L``."""
    ja = A / (1j * omega)
    jl = L / (1j * omega)
    acc = np.zeros(np.broadcast(ja, jl).shape, dtype=complex)
    ta = np.ones_like(acc)
    tl = np.ones_like(acc)
    for k in range(400):
        term = (R_pow * ta - rL_pow * tl) / (k + p)
        acc = acc + term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(acc), 1e-300)) and k > 2:
            break
        ta = ta * ja
        tl = tl * jl
    return -p * acc


def _delta_integer(m, R_pow, A, rL_pow, L, omega):
    """Hit delta for integer ``p = m``: rational part plus a logarithm."""
    jw = 1j * omega
    out = np.zeros(np.broadcast(omega, L).shape, dtype=complex)
    for k in range(m - 1):
        e = k + 1
        out = out + (R_pow * (jw / A) ** e - rL_pow * (jw / L) ** e) / (m - 1 - k)
    out = out + R_pow * (jw / A) ** m * (np.log(A - jw) - np.log(L - jw))
    return m * out


def delta_hit(n: int, omega, L, W: int, model: IntensityModel, g_cache=None):
    """``D_n(omega; L)`` for hit PHs behind ``W`` walls, loss range ``[L, A_W)``.

    Broadcasts over ``omega`` (> 0) and ``L`` (> 0).  ``g_cache`` may hold a
    precomputed ``g_hit(p, omega/L)`` on the broadcast shape.
    """
    prm = model.params
    beta = prm.beta
    p = (n + 2) / beta
    A = prm.saturation(W)
    omega = np.asarray(omega, dtype=float)
    L = np.asarray(L, dtype=float)
    shape = np.broadcast(omega, L).shape
    Lc = np.minimum(L, A)
    R_pow = prm.R_D ** (n + 2)
    rL_pow = (Lc * prm.K**W / prm.kappa) ** p
    out = np.zeros(shape, dtype=complex)

    wb = np.broadcast_to(omega, shape)
    Lb = np.broadcast_to(Lc, shape)
    rb = np.broadcast_to(rL_pow, shape)
    live = (Lb < A) & (wb > 0)
    large = live & (wb > _LARGE_OMEGA * A)
    reg = live & ~large
    if np.any(large):
        out[large] = _delta_large(p, n + 2, R_pow, A, rb[large], Lb[large], wb[large])
    if np.any(reg):
        if _is_integer(p):
            out[reg] = _delta_integer(int(round(p)), R_pow, A, rb[reg], Lb[reg], wb[reg])
        else:
            if g_cache is not None:
                gl = np.broadcast_to(g_cache, shape)[reg]
            else:
                gl = g_hit(p, wb[reg] / Lb[reg])
            ga = np.broadcast_to(g_hit(p, omega / A), shape)[reg]
            out[reg] = rb[reg] * gl - R_pow * ga
    return out


def delta_other(n: int, omega, W: int, model: IntensityModel):
    """``D_n(omega)`` over the whole loss range, for PHs not serving the LPD."""
    prm = model.params
    p = (n + 2) / prm.beta
    A = prm.saturation(W)
    omega = np.asarray(omega, dtype=float)
    out = np.zeros(omega.shape, dtype=complex)
    pos = omega > 0
    R_pow = prm.R_D ** (n + 2)
    large = pos & (omega > _LARGE_OMEGA * A)
    if np.any(large):
        out[large] = _delta_large(p, n + 2, R_pow, A, 0.0, 0.0, omega[large])
    pos = pos & ~large
    if np.any(pos) and _is_integer(p):
        # limit of the rational-plus-log form as the lower loss tends to 0
        m = int(round(p))
        jw = 1j * omega[pos]
        acc = np.zeros(jw.shape, dtype=complex)
        for k in range(m - 1):
            acc = acc + (jw / A) ** (k + 1) / (m - 1 - k)
        acc = acc + (jw / A) ** m * (np.log(A - jw) - np.log(-jw))
        out[pos] = m * prm.R_D ** (n + 2) * acc
    elif np.any(pos):
        w = omega[pos]
        z = -1j * A / w
        F = gauss_2f1(1.0, 1.0 + p, 2.0 + p, z)
        out[pos] = prm.R_D ** (n + 2) * (p * (1j * A / w) * F / (1.0 + p) - 1.0)
    return out


# ---------------------------------------------------------------------------
# characteristic functions
# ---------------------------------------------------------------------------


def _signed(omega, fn):
    """Evaluate ``fn`` on |omega| and conjugate where omega < 0."""
    omega = np.asarray(omega, dtype=float)
    val = fn(np.abs(omega))
    return np.where(omega < 0, np.conj(val), val)


def log_cf_hit(omega, L0, W: int, model: IntensityModel):
    n_arr, c_arr = model.series(W)

    def fn(w):
        acc = np.zeros(np.broadcast(w, L0).shape, dtype=complex)
        for n, c in zip(n_arr, c_arr):
            if c != 0.0:
                acc = acc + c * delta_hit(int(n), w, L0, W, model)
        return acc

    return _signed(omega, fn)


def log_cf_other(omega, W: int, model: IntensityModel):
    n_arr, c_arr = model.series(W)

    def fn(w):
        acc = np.zeros(np.shape(w), dtype=complex)
        for n, c in zip(n_arr, c_arr):
            if c != 0.0:
                acc = acc + c * delta_other(int(n), w, W, model)
        return acc

    return _signed(omega, fn)


def _scalarize(val, *args):
    if all(np.ndim(a) == 0 for a in args):
        return complex(np.asarray(val))
    return val


def cf_hit(omega, L0, W: int, model: IntensityModel):
    """CF of the interference from hit PHs behind ``W`` walls with loss above ``L0``.

    Equals 1 once ``L0`` reaches the saturation loss of the tier.  Falls back
    to :func:`cf_generic` if the closed form is not finite.
    """
    val = np.exp(log_cf_hit(omega, L0, W, model))
    if not np.all(np.isfinite(val)):
        log.warning("closed-form hit CF not finite for W=%d; using quadrature", W)
        val = np.vectorize(lambda w, l: cf_generic(w, l, W, model))(omega, L0)
    return _scalarize(val, omega, L0)


def cf_other(omega, W: int, model: IntensityModel):
    """CF of the interference from non-hit PHs behind ``W`` walls (all losses)."""
    val = np.exp(log_cf_other(omega, W, model))
    if not np.all(np.isfinite(val)):
        log.warning("closed-form CF not finite for W=%d; using quadrature", W)
        val = np.vectorize(lambda w: cf_generic(w, 0.0, W, model))(omega)
    return _scalarize(val, omega)


# spec-facing alias
cf_nohit = cf_other


def cf_generic(omega: float, lower: float, W: int, model: IntensityModel,
               rtol: float = 1e-11) -> complex:
    """CF by adaptive quadrature of the loss-domain integral.

    ``exp( int_lower^inf  j omega/(alpha - j omega) dLambda_W(alpha) )``, in
    the variable ``log alpha``.
    """
    if lower < 0:
        raise ValueError("lower must be non-negative")
    if omega == 0.0:
        return 1.0 + 0.0j
    A = model.saturation(W)
    if lower >= A:
        return 1.0 + 0.0j
    w = abs(float(omega))
    # below alpha_lo the remaining mass is < 1e-24 of the total
    u_lo = math.log(lower) if lower > 0 else math.log(A) - 30.0 * model.params.beta
    u_hi = math.log(A)

    def kern(u):
        a = math.exp(u)
        return complex(1j * w / (a - 1j * w)) * model.derivative(W, a) * a

    pts = [math.log(w)] if u_lo < math.log(w) < u_hi else None
    opts = dict(points=pts, limit=500, epsabs=0.0, epsrel=rtol)
    re, e1 = integrate.quad(lambda u: kern(u).real, u_lo, u_hi, **opts)
    im, e2 = integrate.quad(lambda u: kern(u).imag, u_lo, u_hi, **opts)
    if not (np.isfinite(re) and np.isfinite(im)):
        raise QuadratureError(f"CF quadrature failed (W={W}, omega={omega})")
    if e1 > 1e-6 * max(abs(re), 1e-12) or e2 > 1e-6 * max(abs(im), 1e-12):
        log.debug("CF quadrature error estimate %.3g/%.3g", e1, e2)
    val = complex(math.exp(re) * complex(math.cos(im), math.sin(im)))
    return val.conjugate() if omega < 0 else val


def log_cf_grid(omega, y, hit: IntensityModel, other: IntensityModel):
    """``log prod_W Phi_W(omega; y)`` on the outer product of ``y`` and ``omega``.

    Returns an array of shape ``(len(y), len(omega))`` for ``omega >= 0``.  The
    hypergeometric factor depends on ``omega/y`` and ``n`` only, so it is
    evaluated once per ``n`` and shared by every wall count.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    prm = hit.params
    w2 = omega[None, :]
    y2 = y[:, None]
    out = np.zeros((len(y), len(omega)), dtype=complex)
    if other.q > 0:
        for W in range(prm.W_max + 1):
            out += log_cf_other(omega, W, other)[None, :]
    if hit.q == 0:
        return out
    by_n = {}
    for W in range(prm.W_max + 1):
        for n, c in zip(*hit.series(W)):
            if c != 0.0:
                by_n.setdefault(int(n), []).append((W, c))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(w2 > 0, w2 / y2, 0.0)
    for n, terms in sorted(by_n.items()):
        p = (n + 2) / prm.beta
        # only the region below the largest saturation and omega <= 2 A needs g
        g = None
        if not _is_integer(p):
            A_max = max(prm.saturation(W) for W, _ in terms)
            need = (y2 < A_max) & (w2 <= _LARGE_OMEGA * A_max)
            g = np.zeros(out.shape, dtype=complex)
            g[need] = g_hit(p, np.broadcast_to(ratio, out.shape)[need])
        for W, c in terms:
            out += c * delta_hit(n, w2, y2, W, hit, g_cache=g)
    return out


def log_cf_total(omega, L0, hit: IntensityModel, other: IntensityModel):
    """``log prod_W Phi_W(omega; L0)`` for the full interference."""
    acc = 0.0
    for W in range(hit.params.W_max + 1):
        if hit.q > 0:
            acc = acc + log_cf_hit(omega, L0, W, hit)
        if other.q > 0:
            acc = acc + log_cf_other(omega, W, other)
    return np.asarray(acc) + np.zeros(np.broadcast(omega, L0).shape)


def cf_total(omega, L0, hit: IntensityModel, other: IntensityModel):
    return _scalarize(np.exp(log_cf_total(omega, L0, hit, other)), omega, L0)


# ---------------------------------------------------------------------------
# Gil-Pelaez inversion
# ---------------------------------------------------------------------------


def omega_panels(lo: float, hi: float, per_decade: int = 8, order: int = 16,
                 head_order: int = 12, max_width: float | None = None):
    """Quadrature nodes/weights on ``[0, hi]``: one linear panel on ``[0, lo]``
    followed by log-spaced Gauss-Legendre panels, each split further so that
    no panel is wider than ``max_width``."""
    x, w = np.polynomial.legendre.leggauss(order)
    xh, wh = np.polynomial.legendre.leggauss(head_order)
    nodes = [0.5 * lo * (xh + 1.0)]
    weights = [0.5 * lo * wh]
    for a, b in zip(*_log_edges(lo, hi, per_decade)):
        k = 1 if max_width is None else max(1, int(math.ceil((b - a) / max_width)))
        sub = np.linspace(a, b, k + 1)
        for sa, sb in zip(sub[:-1], sub[1:]):
            nodes.append(0.5 * (sb - sa) * x + 0.5 * (sb + sa))
            weights.append(0.5 * (sb - sa) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _log_edges(lo, hi, per_decade):
    n_pan = max(1, int(math.ceil(per_decade * math.log10(hi / lo))))
    edges = np.geomspace(lo, hi, n_pan + 1)
    return edges[:-1], edges[1:]


def _bary_weights(x):
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, 1.0)
    return 1.0 / d.prod(axis=1)


def subpanel_interpolation(x, level: int, start: int = 0, count: int | None = None):
    """Barycentric weights mapping values at Gauss nodes ``x`` on [-1, 1] to the
    same rule on subpanels ``start .. start+count-1`` of a ``2^level`` split.

    Returns ``(t, M)`` with ``t`` the new reference nodes and ``M @ f(x) ~ f(t)``.
    """
    k = 2**level
    count = k - start if count is None else count
    i = np.arange(start, start + count)[:, None]
    t = (-1.0 + (2.0 * i + 1.0 + x[None, :]) / k).ravel()
    d = t[:, None] - x[None, :]
    exact = d == 0.0
    m = _bary_weights(x)[None, :] / np.where(exact, 1.0, d)
    m /= m.sum(axis=1, keepdims=True)
    hit = exact.any(axis=1)
    if np.any(hit):
        m[hit] = exact[hit]
    return t, m


def cf_horizon(logcf, start: float = 1.0, floor: float = CF_FLOOR, cap: float = 1e16):
    """Smallest decade point where ``|cf|`` drops below ``floor``.

    ``logcf`` maps an array of omegas to log CF values.
    """
    w = start
    target = math.log(floor)
    while w <= cap:
        if float(np.real(logcf(np.array([w]))[0])) < target:
            return w
        w *= 10.0
    raise InversionError(f"|CF| stays above {floor} up to omega={cap:g}")


def cf_onset(logcf, start: float, tol: float = 1e-7):
    """Decade point below which ``|log cf|`` is under ``tol``."""
    w = start
    for _ in range(60):
        if abs(complex(logcf(np.array([w]))[0])) < tol:
            return w
        w /= 10.0
    return w


def tail_bound(logcf, hi: float) -> float:
    """Bound on ``int_hi^inf |cf|/(pi omega)`` from the decay over the last decade."""
    l_hi = float(np.real(logcf(np.array([hi]))[0]))
    l_prev = float(np.real(logcf(np.array([hi / 10.0]))[0]))
    slope = (l_prev - l_hi) / math.log(10.0)
    if slope <= 0:
        return math.inf
    return math.exp(l_hi) / (math.pi * slope)


class CdfInverter:
    """Gil-Pelaez inversion of a fixed characteristic function.

    The CF is sampled once on log panels between the onset and the horizon.
    For a level ``z`` whose oscillation ``exp(-j omega z)`` is not resolved by
    a panel, the panel is bisected until it is; refined samples are cached so
    a grid of levels shares them.  Above the point where an integration by
    parts bound on the remaining oscillatory integral drops below ``tol`` the
    range is truncated, which keeps large levels affordable.
    """

    _PHASE = 6.0  # radians of exp(-j omega z) per panel
    _MAX_LEVEL = 20
    _CHUNK = 4096  # subpanels per interpolation block

    def __init__(self, logcf, per_decade: int = 8, order: int = 16, tol: float = 1e-8):
        self.logcf = logcf
        self.order = order
        self.tol = tol
        self.hi = cf_horizon(logcf)
        self.lo = cf_onset(logcf, self.hi / 10.0)
        self.tail = tail_bound(logcf, self.hi)
        if not self.tail < 1e-6:
            raise InversionError("CF tail too heavy for truncation", tail_bound=self.tail)
        self.a, self.b = _log_edges(self.lo, self.hi, per_decade)
        self._x, self._w = np.polynomial.legendre.leggauss(order)
        xh, wh = np.polynomial.legendre.leggauss(12)
        self.head_nodes = 0.5 * self.lo * (xh + 1.0)
        self.head_weights = 0.5 * self.lo * wh
        self.head_cf = np.exp(logcf(self.head_nodes))
        nodes = self._panel_nodes(self.a, self.b)
        self.coarse_log = logcf(nodes.ravel()).reshape(nodes.shape)
        self.coarse_cf = np.exp(self.coarse_log)
        vals = (self.coarse_cf / nodes).ravel()
        psi = np.abs(vals)
        # integration by parts: |psi(b)| + variation of cf/omega beyond b, where
        # beyond the horizon |cf|/omega is taken as monotone
        steps = np.abs(np.diff(vals))
        tv_after = np.concatenate([np.cumsum(steps[::-1])[::-1], [0.0]])
        start = np.arange(len(self.a)) * order
        self._ibp = psi[start] + tv_after[start] + psi[-1]

    def _panel_nodes(self, a, b):
        a = np.asarray(a)[:, None]
        b = np.asarray(b)[:, None]
        return 0.5 * (b - a) * self._x[None, :] + 0.5 * (b + a)

    def _refined_integral(self, idx: int, level: int, z: float) -> float:
        """Panel ``idx`` split ``2^level`` times, with log CF interpolated from
        its coarse nodes (the CF is smooth on the coarse panel; only the
        ``exp(-j omega z)`` factor needs the finer rule)."""
        a, b = self.a[idx], self.b[idx]
        k = 2**level
        acc = 0.0
        for start in range(0, k, self._CHUNK):
            t, m = subpanel_interpolation(self._x, level, start, min(self._CHUNK, k - start))
            nodes = 0.5 * (b - a) * t + 0.5 * (b + a)
            w = np.tile(0.5 * (b - a) / k * self._w, len(t) // self.order)
            cf = np.exp(m @ self.coarse_log[idx])
            acc += float(np.sum(w * np.imag(np.exp(-1j * nodes * z) * cf) / nodes))
        return acc

    def _integral(self, z: float) -> float:
        acc = np.sum(self.head_weights * np.imag(np.exp(-1j * self.head_nodes * z)
                                                 * self.head_cf) / self.head_nodes)
        # truncate where the integration-by-parts bound falls below tol
        stop = len(self.a)
        if z > 0:
            ok = np.nonzero(self._ibp / z < self.tol)[0]
            if len(ok):
                stop = int(ok[0])
        coarse_nodes = None
        for idx in range(stop):
            width = self.b[idx] - self.a[idx]
            level = max(0, int(math.ceil(math.log2(max(width * z / self._PHASE, 1.0)))))
            if level == 0:
                if coarse_nodes is None:
                    coarse_nodes = self._panel_nodes(self.a, self.b)
                nodes = coarse_nodes[idx]
                w = 0.5 * width * self._w
                cf = self.coarse_cf[idx]
                acc += np.sum(w * np.imag(np.exp(-1j * nodes * z) * cf) / nodes)
            else:
                if level > self._MAX_LEVEL:
                    raise InversionError(f"level z={z:g} needs too fine a panel split")
                acc += self._refined_integral(idx, level, z)
        return float(acc)

    def cdf(self, z):
        zs = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.empty(zs.shape)
        for idx, zv in enumerate(zs):
            if zv < 0:
                out[idx] = 0.0
                continue
            val = 0.5 - self._integral(zv) / math.pi
            resid = max(0.0, -val, val - 1.0)
            if resid > 1e-3:
                raise InversionError(f"inversion residual {resid:.3g} exceeds 1e-3",
                                     partial=val, tail_bound=self.tail)
            if resid > 0:
                log.debug("clamped inversion residual %.3g", resid)
            out[idx] = min(max(val, 0.0), 1.0)
        return float(out[0]) if np.ndim(z) == 0 else out


def interference_cdf(z, L0: float, hit: IntensityModel, other: IntensityModel, **kw):
    """CDF of the interference conditioned on the serving loss ``L0``.

    Gil-Pelaez inversion of the closed-form CF.  Returns 0 for ``z < 0``.
    Raises :class:`InversionError` when the CF does not decay or the result
    falls outside [0, 1] by more than 1e-3.
    """
    return interference_inverter(L0, hit, other, **kw).cdf(z)


def interference_inverter(L0: float, hit: IntensityModel, other: IntensityModel,
                          **kw) -> CdfInverter:
    """Reusable inverter for the interference CF at serving loss ``L0``."""
    if not L0 > 0:
        raise ValueError("L0 must be positive")

    def logcf(w):
        return log_cf_grid(w, [L0], hit, other)[0]

    return CdfInverter(logcf, **kw)
