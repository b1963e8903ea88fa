"""Shared statistics for the simulation-vs-analysis tests."""

import numpy as np

from swiptmc.interference import interference_inverter
from swiptmc.propagation import serving_loss_cdf, serving_loss_pdf_weight


def ks_distance(samples, cdf):
    """Kolmogorov distance between an empirical sample and a (possibly
    defective, possibly atomic) CDF.  NaN samples count as mass at +inf."""
    x = np.sort(np.where(np.isnan(samples), np.inf, samples))
    n = len(x)
    u, first = np.unique(x[np.isfinite(x)], return_index=True)
    upper = np.searchsorted(x, u, side="right") / n
    lower = first / n
    F = np.asarray(cdf(u), dtype=float)
    F_left = np.asarray(cdf(u * (1.0 - 1e-12)), dtype=float)
    return float(max(np.abs(upper - F).max(), np.abs(lower - F_left).max()))


def conditional_interference_ks(batch, hit, other, quantiles=(0.4, 0.65), nodes=6):
    """KS distance of the interference among trials whose serving loss falls
    in a quantile bin, against the bin-averaged conditional CDF."""
    L = batch.serving_loss
    lo, hi = np.nanquantile(L, quantiles)
    sel = (L >= lo) & (L < hi)
    I = np.sort(batch.interference[sel])
    x, w = np.polynomial.legendre.leggauss(nodes)
    ua, ub = np.log(lo), np.log(hi)
    y = np.exp(0.5 * (ub - ua) * x + 0.5 * (ub + ua))
    wt = 0.5 * (ub - ua) * w * serving_loss_pdf_weight(hit, y) * y
    # the quadrature must carry the bin's serving mass
    mass = serving_loss_cdf(hit, hi) - serving_loss_cdf(hit, lo)
    assert abs(wt.sum() - mass) < 1e-6 * mass
    invs = [interference_inverter(float(v), hit, other) for v in y]
    z = np.quantile(I, np.linspace(0.002, 0.998, 250))
    F = sum(c * inv.cdf(z) for c, inv in zip(wt, invs)) / wt.sum()
    upper = np.searchsorted(I, z, side="right") / len(I)
    lower = np.searchsorted(I, z, side="left") / len(I)
    return float(max(np.abs(upper - F).max(), np.abs(lower - F).max())), int(sel.sum())
