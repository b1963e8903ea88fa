"""Trial-level network simulator.

Each trial draws a PH deployment, the wall lines, unit-mean exponential
fading for every interferer and a Rayleigh MIMO channel for the serving link,
then evaluates the instantaneous rate and harvested power.  Trial ``i`` of a
run with base seed ``b`` uses ``numpy.random.SeedSequence([b, i])``, so any
trial can be replayed on its own and results do not depend on scheduling.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .compute import required_power
from .geometry import (DiskRegion, PhDeployment, WallField, count_walls, sample_ph_deployment,
                       sample_walls)
from .mimo import hermitian_eigvals
from .propagation import PropagationParams, path_loss
from .scenario import ComputeProfile, NetworkScenario
from .tradeoff import LinkBudget, instantaneous_rate_energy

Z95 = 1.959963984540054


@dataclass(frozen=True)
class TrialOutcome:
    serving_loss: float | None
    interference: float
    gain: float
    R: float
    Q: float

    @property
    def served(self) -> bool:
        return self.serving_loss is not None


@dataclass
class TrialBatch:
    """Column arrays for many trials; ``serving_loss`` is NaN when absent."""

    serving_loss: np.ndarray
    interference: np.ndarray
    gain: np.ndarray
    R: np.ndarray
    Q: np.ndarray

    def __len__(self):
        return len(self.R)

    @property
    def served(self) -> np.ndarray:
        return ~np.isnan(self.serving_loss)

    def outcome(self, i: int) -> TrialOutcome:
        L = float(self.serving_loss[i])
        return TrialOutcome(serving_loss=None if math.isnan(L) else L,
                            interference=float(self.interference[i]), gain=float(self.gain[i]),
                            R=float(self.R[i]), Q=float(self.Q[i]))


def trial_rng(base_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), int(index)]))


BLOCKAGE_MODES = ("shared", "independent")


def link_losses(sc: NetworkScenario, params: PropagationParams, deployment: PhDeployment,
                walls, fading) -> tuple:
    """Serving loss (NaN without a hit PH) and the interference sum for one snapshot.

    ``walls`` is a :class:`WallField` whose lines every link crosses, or an
    array of per-PH wall counts.
    """
    if len(deployment) == 0:
        return math.nan, 0.0
    h = np.asarray(fading, dtype=float)
    if isinstance(walls, WallField):
        W = count_walls(walls, deployment.r, deployment.theta)
    else:
        W = np.asarray(walls)
    loss = np.asarray(path_loss(deployment.r, W, params), dtype=float)
    hits = np.nonzero(deployment.hit)[0]
    if len(hits) == 0:
        return math.nan, float(np.sum(h / loss))
    serve = hits[np.argmin(loss[hits])]
    mask = np.ones(len(deployment), dtype=bool)
    mask[serve] = False
    return float(loss[serve]), float(np.sum(h[mask] / loss[mask]))


def _geometry(sc: NetworkScenario, params: PropagationParams, region: DiskRegion, rng,
              blockage: str = "shared"):
    """Draw one snapshot: deployment, walls, interferer fading, serving channel.

    With ``blockage="independent"`` each link gets its own Poisson wall count
    of mean ``lambda_w (|x| + |y|)`` instead of crossing one shared wall field.
    """
    dep = sample_ph_deployment(region, sc.lambda_ph, sc.q_hit, rng)
    if blockage == "shared":
        walls = sample_walls(region, sc.lambda_w, rng)
    else:
        walls = rng.poisson(sc.lambda_w * (np.abs(dep.x) + np.abs(dep.y)))
    h = rng.exponential(1.0, len(dep))
    shape = (sc.n_r, sc.n_t)
    H = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    L0, I = link_losses(sc, params, dep, walls, h)
    return L0, I, H


def _check_blockage(blockage):
    if blockage not in BLOCKAGE_MODES:
        raise ValueError(f"blockage must be one of {BLOCKAGE_MODES}, got {blockage!r}")


def evaluate_snapshot(sc: NetworkScenario, deployment: PhDeployment, walls: WallField,
                      fading, H, ambient_harvest: bool = False) -> TrialOutcome:
    """Outcome of a fully specified snapshot (no randomness)."""
    params = PropagationParams.from_scenario(sc)
    L0, I = link_losses(sc, params, deployment, walls, fading)
    H = np.asarray(H, dtype=complex)
    batch = _finish(sc, np.array([L0]), np.array([I]), _gains(H[None]), ambient_harvest)
    return batch.outcome(0)


def _gains(H: np.ndarray) -> np.ndarray:
    if H.shape[1] <= H.shape[2]:
        G = H @ np.conj(np.swapaxes(H, 1, 2))
    else:
        G = np.conj(np.swapaxes(H, 1, 2)) @ H
    return hermitian_eigvals(G)[:, -1]


def _finish(sc, L0, I, gain, ambient_harvest):
    budget = LinkBudget.from_scenario(sc)
    served = ~np.isnan(L0)
    R = np.zeros(len(L0))
    Q = np.zeros(len(L0))
    if np.any(served):
        R[served], Q[served] = instantaneous_rate_energy(gain[served], L0[served], I[served],
                                                         budget)
    if ambient_harvest:
        Q[~served] = budget.rho * budget.zeta * budget.P * I[~served]
    return TrialBatch(serving_loss=L0, interference=I, gain=gain, R=R, Q=Q)


def simulate(sc: NetworkScenario, trials: int, base_seed: int = 0, start: int = 0,
             ambient_harvest: bool = False, blockage: str = "shared") -> TrialBatch:
    """Run trials ``start .. start+trials-1`` of the run seeded by ``base_seed``.

    Trials without a hit PH report ``R = Q = 0`` unless ``ambient_harvest``
    is set, in which case they harvest the interference.  ``blockage``
    selects a shared wall field (default) or independent per-link wall counts.
    """
    if trials < 0:
        raise ValueError("trials must be non-negative")
    _check_blockage(blockage)
    params = PropagationParams.from_scenario(sc)
    region = DiskRegion(sc.R_D)
    L0 = np.empty(trials)
    I = np.empty(trials)
    H = np.empty((trials, sc.n_r, sc.n_t), dtype=complex)
    for j in range(trials):
        L0[j], I[j], H[j] = _geometry(sc, params, region, trial_rng(base_seed, start + j),
                                      blockage)
    gain = _gains(H) if trials else np.empty(0)
    return _finish(sc, L0, I, gain, ambient_harvest)


def run_trial(sc: NetworkScenario, seed: int, ambient_harvest: bool = False,
              blockage: str = "shared") -> TrialOutcome:
    """One trial drawn from ``numpy.random.default_rng(seed)``."""
    _check_blockage(blockage)
    params = PropagationParams.from_scenario(sc)
    L0, I, H = _geometry(sc, params, DiskRegion(sc.R_D), np.random.default_rng(seed), blockage)
    batch = _finish(sc, np.array([L0]), np.array([I]), _gains(H[None]), ambient_harvest)
    return batch.outcome(0)


# -- estimators ---------------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalJccdf:
    grid: tuple  # ((R*, Q*), ...)
    values: np.ndarray
    half_widths: np.ndarray
    trials: int


def _half_width(p, n):
    return Z95 * np.sqrt(np.maximum(p * (1.0 - p), 0.0) / n)


def jccdf_from_batch(batch: TrialBatch, R_star, Q_star):
    """Fraction of served trials with ``R >= R_star`` and ``Q >= Q_star``."""
    ok = batch.served & (batch.R >= R_star) & (batch.Q >= Q_star)
    return float(np.mean(ok)) if len(batch) else math.nan


def estimate_jccdf(sc: NetworkScenario, grid, trials: int, base_seed: int = 0,
                   batch: TrialBatch | None = None) -> EmpiricalJccdf:
    """Counting estimator of the joint CCDF with binomial 95% half-widths.

    An absent serving link never meets a requirement, so the ``(0, 0)`` cell
    estimates the probability that a serving PH exists.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    batch = batch if batch is not None else simulate(sc, trials, base_seed)
    grid = tuple((float(r), float(q)) for r, q in grid)
    vals = np.array([jccdf_from_batch(batch, r, q) for r, q in grid])
    return EmpiricalJccdf(grid=grid, values=vals, half_widths=_half_width(vals, len(batch)),
                          trials=len(batch))


def empirical_outage(sc: NetworkScenario, profile: ComputeProfile, R_grid, trials: int,
                     base_seed: int = 0, batch: TrialBatch | None = None):
    """Per-rate outage ``1 - Pr{R >= r, Q >= required_power(r)}`` and half-widths."""
    batch = batch if batch is not None else simulate(sc, trials, base_seed)
    R_grid = np.asarray(R_grid, dtype=float)
    p = np.array([1.0 - jccdf_from_batch(batch, r, required_power(profile, r)) for r in R_grid])
    return p, _half_width(p, len(batch))


def empirical_level_power(batch: TrialBatch, level: float, R: float) -> float:
    """Largest ``Q`` with empirical ``Pr{R >= R, Q >= Q} >= level`` (0 if none)."""
    ok = batch.served & (batch.R >= R)
    n = len(batch)
    need = int(math.ceil(level * n - 1e-9))
    if need <= 0:
        return math.inf
    q = np.sort(batch.Q[ok])[::-1]
    if len(q) < need:
        return 0.0
    return float(q[need - 1])


def write_trace(path, batch: TrialBatch, base_seed: int = 0, start: int = 0):
    """Per-trial JSON lines: index, seed pair and the outcome fields."""
    with open(path, "w") as fh:
        for i in range(len(batch)):
            rec = {"trial": start + i, "seed": [int(base_seed), start + i]}
            rec.update(asdict(batch.outcome(i)))
            fh.write(json.dumps(rec) + "\n")
