"""Special functions used by the closed-form analysis.

Gauss hypergeometric function for real parameters and complex argument,
integer-order upper incomplete gamma with complex argument, and thin wrappers
around the real gamma function.

All routines accept scalars or numpy arrays for the complex argument and
return a value of matching shape.
"""

from __future__ import annotations

import math

import numpy as np

SERIES_TOL = 1e-12
MAX_TERMS = 10_000

# Region thresholds for the hypergeometric path selection.
_SERIES_RADIUS = 0.8
_INVERSE_RADIUS = 1.25
_ODE_TERMS = 90


class DomainError(ValueError):
    """Parameters or argument outside the domain of a special function."""


class ConvergenceError(RuntimeError):
    """A series failed to converge within the term cap.

    The partial sum reached at the cap is kept on ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def gamma(x: float) -> float:
    """Gamma function on the real line (poles raise DomainError)."""
    if _is_nonpositive_int(x):
        raise DomainError(f"gamma has a pole at {x!r}")
    return math.gamma(x)


def rgamma(x: float) -> float:
    """Reciprocal gamma, zero at the poles."""
    if _is_nonpositive_int(x):
        return 0.0
    return 1.0 / math.gamma(x)


def _is_nonpositive_int(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def _near_integer(x: float, tol: float = 1e-9) -> bool:
    return abs(x - round(x)) < tol


def _as_complex_array(z):
    scalar = np.ndim(z) == 0
    arr = np.atleast_1d(np.asarray(z, dtype=complex))
    return arr, scalar


def _finish(out, scalar):
    if scalar:
        return complex(out[0])
    return out


# ---------------------------------------------------------------------------
# Gauss hypergeometric 2F1
# ---------------------------------------------------------------------------


def _series(a, b, c, z, tol=SERIES_TOL, max_terms=MAX_TERMS):
    """Maclaurin series, vectorized. Valid (and used) for |z| < 1."""
    z = np.asarray(z, dtype=complex)
    total = np.ones_like(z)
    term = np.ones_like(z)
    if z.size == 0:
        return total
    for k in range(max_terms):
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1.0))) * z
        total = total + term
        scale = np.maximum(np.abs(total), 1e-300)
        if np.all(np.abs(term) <= tol * scale):
            # One more term guards against an accidental zero coefficient.
            nxt = term * ((a + k + 1) * (b + k + 1) / ((c + k + 1) * (k + 2.0))) * z
            if np.all(np.abs(nxt) <= tol * scale):
                return total + nxt
    raise ConvergenceError(
        f"2F1 series did not converge in {max_terms} terms", partial=total
    )


def _polynomial(a, b, c, z):
    """Terminating series when a or b is a non-positive integer."""
    n = int(round(-min(x for x in (a, b) if _is_nonpositive_int(x))))
    total = np.ones_like(z)
    term = np.ones_like(z)
    for k in range(n):
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1.0))) * z
        total = total + term
    return total


def _pfaff(a, b, c, z, tol=SERIES_TOL, max_terms=MAX_TERMS):
    """Pfaff transformation z -> z/(z-1)."""
    w = z / (z - 1.0)
    return (1.0 - z) ** (-a) * _series(a, c - b, c, w, tol, max_terms)


def _inverse(a, b, c, z, tol=SERIES_TOL, max_terms=MAX_TERMS):
    """Transformation z -> 1/z. Requires a - b not an integer."""
    w = 1.0 / z
    mz = -z
    g1 = gamma(c) * gamma(b - a) * rgamma(b) * rgamma(c - a)
    g2 = gamma(c) * gamma(a - b) * rgamma(a) * rgamma(c - b)
    out = np.zeros_like(z)
    if g1 != 0.0:
        out = out + g1 * mz ** (-a) * _series(a, a - c + 1, a - b + 1, w, tol, max_terms)
    if g2 != 0.0:
        out = out + g2 * mz ** (-b) * _series(b, b - c + 1, b - a + 1, w, tol, max_terms)
    return out


def _continuation(a, b, c, z, tol=SERIES_TOL, max_terms=MAX_TERMS):
    """Analytic continuation by stepping the hypergeometric ODE along a ray.

    The value and derivative are taken from the Maclaurin series at
    ``0.5 z/|z|`` and propagated by Taylor re-expansion, each step staying
    within half the distance to the singular points 0 and 1.  A ray from the
    origin never crosses the cut [1, inf), so the principal branch is kept.
    """
    z = np.asarray(z, dtype=complex)
    direction = z / np.abs(z)
    z0 = 0.5 * direction
    w = _series(a, b, c, z0, tol, max_terms)
    dw = (a * b / c) * _series(a + 1, b + 1, c + 1, z0, tol, max_terms)
    ab1 = a + b + 1.0
    for _ in range(10_000):
        rem = z - z0
        dist_rem = np.abs(rem)
        if np.all(dist_rem == 0):
            return w
        radius = np.minimum(np.abs(z0), np.abs(1.0 - z0))
        step = np.minimum(dist_rem, 0.5 * radius)
        h = np.where(dist_rem > 0, rem / np.where(dist_rem > 0, dist_rem, 1.0) * step, 0.0)
        q0 = z0 * (1.0 - z0)
        q1 = 1.0 - 2.0 * z0
        l0 = c - ab1 * z0
        # d_k = c_k h^k keeps every term on the scale of w
        d_prev, d_cur = w, dw * h
        new_w = w + d_cur
        new_dhw = d_cur.copy()  # sum k d_k
        for k in range(_ODE_TERMS):
            d_next = (-(q1 * k + l0) * (k + 1) * h * d_cur
                      + (k + a) * (k + b) * h * h * d_prev) / (q0 * (k + 2) * (k + 1))
            new_w = new_w + d_next
            new_dhw = new_dhw + (k + 2) * d_next
            d_prev, d_cur = d_cur, d_next
            if np.all(np.abs(d_next) <= 1e-17 * np.maximum(np.abs(new_w), 1e-300)):
                break
        safe_h = np.where(h != 0, h, 1.0)
        new_dw = np.where(h != 0, new_dhw / safe_h, dw)
        w, dw, z0 = new_w, new_dw, z0 + h
    raise ConvergenceError("2F1 continuation did not reach its target", partial=w)


_METHODS = {
    "series": _series,
    "pfaff": _pfaff,
    "inverse": _inverse,
    "continuation": _continuation,
}


def gauss_2f1(a: float, b: float, c: float, z, *, method: str = "auto",
              tol: float = SERIES_TOL, max_terms: int = MAX_TERMS):
    """Gauss hypergeometric function 2F1(a, b; c; z) for real a, b, c.

    Principal branch with the cut on [1, inf).  Path selection per element:

    * ``|z| <= 0.8``: Maclaurin series;
    * ``|z/(z-1)| <= 0.8``: Pfaff transformation;
    * ``|z| >= 1.25`` and ``a - b`` not an integer: the 1/z transformation;
    * otherwise: ODE continuation from the series disk.

    ``method`` forces one path (used for cross-checking the paths).
    """
    a, b, c = float(a), float(b), float(c)
    zz, scalar = _as_complex_array(z)
    if _is_nonpositive_int(c) and not any(
        _is_nonpositive_int(x) and x > c for x in (a, b)
    ):
        raise DomainError(f"2F1 undefined for non-positive integer c={c}")
    if not np.all(np.isfinite(zz)):
        raise DomainError("2F1 argument must be finite")
    if any(_is_nonpositive_int(x) for x in (a, b)):
        return _finish(_polynomial(a, b, c, zz), scalar)

    on_cut = (zz.imag == 0) & (zz.real >= 1.0)
    if np.any(on_cut):
        if np.any(zz[on_cut].real > 1.0) or c - a - b <= 0:
            raise DomainError("2F1 argument lies on the branch cut [1, inf)")

    out = np.empty_like(zz)
    if method != "auto":
        out[:] = _METHODS[method](a, b, c, zz, tol, max_terms)
        return _finish(out, scalar)

    if np.any(on_cut):
        out[on_cut] = gamma(c) * gamma(c - a - b) * rgamma(c - a) * rgamma(c - b)
    absz = np.abs(zz)
    todo = ~on_cut
    sel = todo & (absz <= _SERIES_RADIUS)
    if np.any(sel):
        out[sel] = _series(a, b, c, zz[sel], tol, max_terms)
    todo &= ~sel
    w_abs = np.abs(zz / (zz - 1.0))
    sel = todo & (w_abs <= _SERIES_RADIUS)
    if np.any(sel):
        out[sel] = _pfaff(a, b, c, zz[sel], tol, max_terms)
    todo &= ~sel
    if not _near_integer(a - b, 1e-3):
        sel = todo & (absz >= _INVERSE_RADIUS)
        if np.any(sel):
            out[sel] = _inverse(a, b, c, zz[sel], tol, max_terms)
        todo &= ~sel
    if np.any(todo):
        out[todo] = _continuation(a, b, c, zz[todo], tol, max_terms)
    return _finish(out, scalar)


# ---------------------------------------------------------------------------
# Incomplete gamma
# ---------------------------------------------------------------------------


def upper_incomplete_gamma_int(t: int, z):
    """Upper incomplete gamma Gamma(t+1, z) for integer ``t >= 0``.

    Uses ``t! exp(-z) sum_k z^k/k!`` for small |z| and the scaled form
    ``exp(-z + t log z) sum_j t!/(t-j)! z^-j`` otherwise, which avoids
    overflow of the partial powers.
    """
    if t < 0 or int(t) != t:
        raise DomainError(f"t must be a non-negative integer, got {t!r}")
    t = int(t)
    zz, scalar = _as_complex_array(z)
    out = np.empty_like(zz)
    small = np.abs(zz) < 1.0
    if np.any(small):
        zs = zz[small]
        acc = np.zeros_like(zs)
        term = np.ones_like(zs)
        for k in range(t + 1):
            acc += term
            term = term * zs / (k + 1)
        out[small] = math.factorial(t) * np.exp(-zs) * acc
    big = ~small
    if np.any(big):
        zb = zz[big]
        inv = 1.0 / zb
        acc = np.zeros_like(zb)
        coef = 1.0
        p = np.ones_like(zb)
        for j in range(t + 1):
            acc += coef * p
            coef *= t - j
            p = p * inv
        out[big] = np.exp(-zb + t * np.log(zb)) * acc
    return _finish(out, scalar)


def lower_incomplete_gamma_int(t: int, z):
    """Lower incomplete gamma gamma(t+1, z) = t! - Gamma(t+1, z)."""
    zz, scalar = _as_complex_array(z)
    out = math.factorial(int(t)) - np.atleast_1d(upper_incomplete_gamma_int(t, zz))
    return _finish(out, scalar)
