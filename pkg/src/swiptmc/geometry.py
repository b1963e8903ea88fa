"""Random deployments: PH Poisson point process and Manhattan wall lines.

The typical LPD sits at the origin; every position is in polar coordinates
around it.  Walls are axis-aligned lines drawn on the disk's bounding square,
which is exact for counting crossings of links that stay inside the disk.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DiskRegion:
    R_D: float

    def __post_init__(self):
        if not self.R_D > 0:
            raise ValueError("R_D must be positive")

    @property
    def area(self) -> float:
        return math.pi * self.R_D**2


@dataclass
class WallField:
    vertical_lines: np.ndarray  # x-coordinates [m]
    horizontal_lines: np.ndarray  # y-coordinates [m]
    lambda_w: float

    def __eq__(self, other):
        return (
            isinstance(other, WallField)
            and self.lambda_w == other.lambda_w
            and np.array_equal(self.vertical_lines, other.vertical_lines)
            and np.array_equal(self.horizontal_lines, other.horizontal_lines)
        )


@dataclass
class PhDeployment:
    r: np.ndarray
    theta: np.ndarray
    hit: np.ndarray
    lambda_ph: float

    def __len__(self):
        return len(self.r)

    @property
    def x(self) -> np.ndarray:
        return self.r * np.cos(self.theta)

    @property
    def y(self) -> np.ndarray:
        return self.r * np.sin(self.theta)

    def __eq__(self, other):
        return (
            isinstance(other, PhDeployment)
            and self.lambda_ph == other.lambda_ph
            and np.array_equal(self.r, other.r)
            and np.array_equal(self.theta, other.theta)
            and np.array_equal(self.hit, other.hit)
        )


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_ph_deployment(region: DiskRegion, lambda_ph: float, q_hit: float,
                         seed) -> PhDeployment:
    """Homogeneous PPP of PHs in the disk with independent hit marks.

    ``seed`` may be an integer or an existing ``numpy.random.Generator``.
    """
    if lambda_ph < 0:
        raise ValueError("lambda_ph must be non-negative")
    if not 0.0 <= q_hit <= 1.0:
        raise ValueError("q_hit must lie in [0, 1]")
    rng = _rng(seed)
    n = rng.poisson(lambda_ph * region.area)
    r = region.R_D * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    hit = rng.random(n) < q_hit
    return PhDeployment(r=r, theta=theta, hit=hit, lambda_ph=lambda_ph)


def sample_walls(region: DiskRegion, lambda_w: float, seed) -> WallField:
    """Two independent 1-D Poisson line processes of rate ``lambda_w`` on [-R_D, R_D]."""
    if lambda_w < 0:
        raise ValueError("lambda_w must be non-negative")
    rng = _rng(seed)
    span = 2.0 * region.R_D
    nv = rng.poisson(lambda_w * span)
    vert = np.sort(rng.uniform(-region.R_D, region.R_D, nv))
    nh = rng.poisson(lambda_w * span)
    horiz = np.sort(rng.uniform(-region.R_D, region.R_D, nh))
    return WallField(vertical_lines=vert, horizontal_lines=horiz, lambda_w=lambda_w)


def _crossings(lines: np.ndarray, coord: np.ndarray) -> np.ndarray:
    """Lines strictly between 0 and each coordinate; ``lines`` must be sorted."""
    coord = np.asarray(coord, dtype=float)
    if len(lines) == 0:
        return np.zeros(coord.shape, dtype=int)
    # strictly between: open interval (min(0,c), max(0,c))
    lo = np.minimum(coord, 0.0)
    hi = np.maximum(coord, 0.0)
    return np.searchsorted(lines, hi, side="left") - np.searchsorted(lines, lo, side="right")


def count_walls(walls: WallField, r, theta):
    """Number of walls crossed by the segment from the origin to ``(r, theta)``.

    Vectorized over ``r`` and ``theta``.
    """
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    x = r * np.cos(theta)
    y = r * np.sin(theta)
    vert = np.sort(np.asarray(walls.vertical_lines, dtype=float))
    horiz = np.sort(np.asarray(walls.horizontal_lines, dtype=float))
    n = _crossings(vert, x) + _crossings(horiz, y)
    if n.ndim == 0:
        return int(n)
    return n


def blockage_mean(r, theta, lambda_w):
    return lambda_w * np.asarray(r) * (np.abs(np.cos(theta)) + np.abs(np.sin(theta)))


def blockage_probability(W: int, r, theta, lambda_w: float):
    """Probability that a PH at ``(r, theta)`` is behind exactly ``W`` walls."""
    if W < 0:
        return 0.0 * np.asarray(r, dtype=float)
    mu = blockage_mean(r, theta, lambda_w)
    log_fact = math.lgamma(W + 1)
    with np.errstate(divide="ignore"):
        out = np.where(mu > 0, np.exp(W * np.log(np.where(mu > 0, mu, 1.0)) - mu - log_fact),
                       1.0 if W == 0 else 0.0)
    if np.ndim(out) == 0:
        return float(out)
    return out


def dump_scenario(path, deployment: PhDeployment, walls: WallField, region: DiskRegion):
    """Write a deployment snapshot as JSON.

    Schema::

        {"R_D": float, "lambda_ph": float, "lambda_w": float,
         "ph": [{"r": float, "theta": float, "hit": bool}, ...],
         "vertical_lines": [float, ...], "horizontal_lines": [float, ...]}
    """
    doc = {
        "R_D": region.R_D,
        "lambda_ph": deployment.lambda_ph,
        "lambda_w": walls.lambda_w,
        "ph": [
            {"r": float(r), "theta": float(t), "hit": bool(h)}
            for r, t, h in zip(deployment.r, deployment.theta, deployment.hit)
        ],
        "vertical_lines": [float(v) for v in walls.vertical_lines],
        "horizontal_lines": [float(v) for v in walls.horizontal_lines],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_scenario(path):
    """Inverse of :func:`dump_scenario`; returns ``(region, deployment, walls)``."""
    with open(path) as fh:
        doc = json.load(fh)
    ph = doc["ph"]
    dep = PhDeployment(
        r=np.array([p["r"] for p in ph], dtype=float),
        theta=np.array([p["theta"] for p in ph], dtype=float),
        hit=np.array([p["hit"] for p in ph], dtype=bool),
        lambda_ph=float(doc["lambda_ph"]),
    )
    walls = WallField(
        vertical_lines=np.array(doc["vertical_lines"], dtype=float),
        horizontal_lines=np.array(doc["horizontal_lines"], dtype=float),
        lambda_w=float(doc["lambda_w"]),
    )
    return DiskRegion(float(doc["R_D"])), dep, walls
