"""Serving-link gain under MRT/MRC: the largest eigenvalue of ``H H^H``.

For an uncorrelated central complex Wishart matrix with ``m = min(n_t, n_r)``
and ``n = max(n_t, n_r)`` the CDF of the largest eigenvalue is

    F(x) = K_mn det[ lower_gamma(n - m + i + j - 1, x) ]_{i,j = 1..m},
    K_mn = prod_i 1/((m - i)! (n - i)!).

Each entry is a finite sum of ``x^t exp(-s x)`` terms, so the determinant and
its derivative are expanded exactly with rational arithmetic, giving the
density ``K_mn sum_{s,t} a_{s,t} x^t exp(-s x)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .specfun import DomainError

MAX_MIN_ANTENNAS = 4

Poly = dict  # {(s, t): Fraction} standing for sum c x^t e^{-s x}


@dataclass(frozen=True)
class EigenPdfCoefficients:
    m: int
    n: int
    K_mn: Fraction
    a: dict  # {(s, t): Fraction}

    @property
    def terms(self):
        """``(s, t, K_mn * a_st)`` as floats, sorted by ``(s, t)``."""
        k = float(self.K_mn)
        return [(s, t, k * float(c)) for (s, t), c in sorted(self.a.items())]


def _mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for (s1, t1), c1 in p.items():
        for (s2, t2), c2 in q.items():
            key = (s1 + s2, t1 + t2)
            out[key] = out.get(key, 0) + c1 * c2
    return {k: v for k, v in out.items() if v != 0}


def _add(p: Poly, q: Poly, sign: int = 1) -> Poly:
    out = dict(p)
    for k, v in q.items():
        out[k] = out.get(k, 0) + sign * v
    return {k: v for k, v in out.items() if v != 0}


def _lower_gamma_poly(k: int) -> Poly:
    """``gamma(k, x) = (k-1)! (1 - e^{-x} sum_{l<k} x^l/l!)`` as a polynomial."""
    f = math.factorial(k - 1)
    out: Poly = {(0, 0): Fraction(f)}
    for l in range(k):
        out[(1, l)] = -Fraction(f, math.factorial(l))
    return out


def _det(mat) -> Poly:
    m = len(mat)
    total: Poly = {}
    for perm in itertools.permutations(range(m)):
        inv = sum(1 for i in range(m) for j in range(i + 1, m) if perm[i] > perm[j])
        term: Poly = {(0, 0): Fraction(1)}
        for i in range(m):
            term = _mul(term, mat[i][perm[i]])
        total = _add(total, term, -1 if inv % 2 else 1)
    return total


def _derivative(p: Poly) -> Poly:
    out: Poly = {}
    for (s, t), c in p.items():
        if t > 0:
            out[(s, t - 1)] = out.get((s, t - 1), 0) + c * t
        if s > 0:
            out[(s, t)] = out.get((s, t), 0) - c * s
    return {k: v for k, v in out.items() if v != 0}


def largest_eigen_cdf_poly(n_t: int, n_r: int):
    """``(K_mn, det)`` with ``F(x) = K_mn * det(x)`` in polynomial form."""
    m, n = _dims(n_t, n_r)
    K = Fraction(1)
    for i in range(1, m + 1):
        K /= math.factorial(m - i) * math.factorial(n - i)
    mat = [[_lower_gamma_poly(n - m + i + j - 1) for j in range(1, m + 1)]
           for i in range(1, m + 1)]
    return K, _det(mat)


def _dims(n_t, n_r):
    if n_t < 1 or n_r < 1:
        raise DomainError("antenna counts must be >= 1")
    m, n = min(n_t, n_r), max(n_t, n_r)
    if m > MAX_MIN_ANTENNAS:
        raise DomainError(f"min(n_t, n_r) = {m} exceeds the supported {MAX_MIN_ANTENNAS}")
    return m, n


def eigen_pdf_coefficients(n_t: int, n_r: int) -> EigenPdfCoefficients:
    """Exact density coefficients of the largest eigenvalue of ``H H^H``."""
    m, n = _dims(n_t, n_r)
    K, det = largest_eigen_cdf_poly(n_t, n_r)
    return EigenPdfCoefficients(m=m, n=n, K_mn=K, a=_derivative(det))


def eigen_pdf(coeffs: EigenPdfCoefficients, x):
    """Density ``K_mn sum a_st x^t e^{-s x}`` at ``x >= 0`` (zero below 0)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    xp = np.maximum(x, 0.0)
    for s, t, c in coeffs.terms:
        out = out + c * xp**t * np.exp(-s * xp)
    out = np.where(x >= 0, out, 0.0)
    return float(out) if out.ndim == 0 else out


def eigen_cdf(n_t: int, n_r: int, x):
    """CDF of the largest eigenvalue, from the same exact expansion."""
    K, det = largest_eigen_cdf_poly(n_t, n_r)
    x = np.asarray(x, dtype=float)
    xp = np.maximum(x, 0.0)
    out = np.zeros(x.shape)
    for (s, t), c in det.items():
        out = out + float(K * c) * xp**t * np.exp(-s * xp)
    out = np.where(x > 0, out, 0.0)
    return float(out) if out.ndim == 0 else out


# -- sampling --------------------------------------------------------------------


def hermitian_eigvals(A, sweeps: int = 30, tol: float = 1e-14):
    """Eigenvalues of a batch of small Hermitian matrices by cyclic Jacobi.

    ``A`` has shape ``(..., m, m)``; returns ``(..., m)`` in ascending order.
    """
    A = np.array(A, dtype=complex)
    batch = A.shape[:-2]
    m = A.shape[-1]
    A = A.reshape(-1, m, m)
    scale = np.maximum(np.sqrt(np.sum(np.abs(A) ** 2, axis=(1, 2))), 1e-300)
    for _ in range(sweeps):
        off = np.sqrt(np.maximum(
            np.sum(np.abs(A) ** 2, axis=(1, 2))
            - np.sum(np.abs(np.diagonal(A, axis1=1, axis2=2)) ** 2, axis=1), 0.0))
        if np.all(off <= tol * scale):
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[:, p, q]
                mag = np.abs(apq)
                live = mag > 1e-300
                if not np.any(live):
                    continue
                phase = np.where(live, apq / np.where(live, mag, 1.0), 1.0)
                app = A[:, p, p].real
                aqq = A[:, q, q].real
                tau = np.where(live, (aqq - app) / (2.0 * np.where(live, mag, 1.0)), 0.0)
                t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
                t = np.where(live, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # G = I except G_pp = c, G_qq = c, G_pq = s e^{j phi}, G_qp = -s e^{-j phi}
                sp = s * phase
                col_p = A[:, :, p].copy()
                col_q = A[:, :, q].copy()
                A[:, :, p] = c[:, None] * col_p - np.conj(sp)[:, None] * col_q
                A[:, :, q] = sp[:, None] * col_p + c[:, None] * col_q
                row_p = A[:, p, :].copy()
                row_q = A[:, q, :].copy()
                A[:, p, :] = c[:, None] * row_p - sp[:, None] * row_q
                A[:, q, :] = np.conj(sp)[:, None] * row_p + c[:, None] * row_q
    vals = np.sort(np.diagonal(A, axis1=1, axis2=2).real, axis=1)
    return vals.reshape(batch + (m,))


def _channel(rng, n_r, n_t, size):
    shape = (size, n_r, n_t)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def sample_gains(n_t: int, n_r: int, size: int, seed) -> np.ndarray:
    """Largest eigenvalues of ``H H^H`` for ``size`` i.i.d. Rayleigh channels."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if n_t < 1 or n_r < 1:
        raise DomainError("antenna counts must be >= 1")
    H = _channel(rng, n_r, n_t, size)
    # the smaller Gram matrix has the same non-zero spectrum
    if n_r <= n_t:
        G = H @ np.conj(np.swapaxes(H, 1, 2))
    else:
        G = np.conj(np.swapaxes(H, 1, 2)) @ H
    return hermitian_eigvals(G)[:, -1]


def sample_gain(n_t: int, n_r: int, seed) -> float:
    return float(sample_gains(n_t, n_r, 1, seed)[0])
