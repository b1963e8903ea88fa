"""Experiment drivers producing plot-ready CSV curves and a JSON manifest.

Every curve is written to its own CSV with columns
``x, y, units, source, ci_low, ci_high``; ``source`` is ``analytic`` or
``mc``.  Confidence columns are empty for analytic rows.  Powers are reported
in dBm.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import compute as cm
from . import montecarlo as mc
from .config import ScenarioConfig
from .scenario import watt_to_dbm
from .tradeoff import engine_for, max_power_at

log = logging.getLogger(__name__)

NEG_INF_DBM = -300.0  # stands in for zero power in dBm columns


class SelfCheckError(RuntimeError):
    """An emitted curve violates a monotonicity it must satisfy."""


@dataclass
class Curve:
    name: str
    units: str
    source: str
    x: list = field(default_factory=list)
    y: list = field(default_factory=list)
    ci_low: list = field(default_factory=list)
    ci_high: list = field(default_factory=list)
    monotone: str = ""  # "increasing", "decreasing" or ""

    def add(self, x, y, lo=None, hi=None):
        self.x.append(float(x))
        self.y.append(float(y))
        self.ci_low.append(lo)
        self.ci_high.append(hi)

    def check(self, slack: float = 1e-6):
        y = np.asarray(self.y)
        if len(y) < 2 or not self.monotone:
            return
        d = np.diff(y)
        bad = d < -slack if self.monotone == "increasing" else d > slack
        if np.any(bad):
            i = int(np.argmax(bad))
            raise SelfCheckError(f"{self.name}: not {self.monotone} between x={self.x[i]:g} "
                                 f"and x={self.x[i + 1]:g}")


def _fmt(v):
    if v is None:
        return ""
    return f"{v:.10g}"


def write_curve(curve: Curve, out_dir: str) -> str:
    curve.check()
    path = os.path.join(out_dir, f"{curve.name}.csv")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "y", "units", "source", "ci_low", "ci_high"])
        for x, y, lo, hi in zip(curve.x, curve.y, curve.ci_low, curve.ci_high):
            wr.writerow([_fmt(x), _fmt(y), curve.units, curve.source, _fmt(lo), _fmt(hi)])
    return path


def _dbm(q):
    return watt_to_dbm(q) if q and q > 0 else NEG_INF_DBM


# -- individual experiments ----------------------------------------------------


def _validate(cfg: ScenarioConfig, trials, seed):
    """Level-set trade-off curves, analytic and simulated, for several hit rates."""
    level = cfg.solver.level
    R_grid = np.geomspace(1e3, 1e6, 13)
    curves = []
    for q in (0.2, 0.7, 1.0):
        sc = cfg.scenario.with_(q_hit=q)
        eng = engine_for(sc)
        an = Curve(f"validate_q{q:g}_analytic", "bit/s;dBm", "analytic", monotone="decreasing")
        emp = Curve(f"validate_q{q:g}_mc", "bit/s;dBm", "mc", monotone="decreasing")
        batch = mc.simulate(sc, trials, seed)
        hw = mc.Z95 * math.sqrt(level * (1.0 - level) / trials)
        for R in R_grid:
            Q = max_power_at(level, R, eng)
            if Q is not None:
                an.add(R, _dbm(Q))
            Qm = mc.empirical_level_power(batch, level, R)
            if Qm > 0:
                # a stricter level gives less power, a looser one more
                lo = mc.empirical_level_power(batch, min(level + hw, 1.0), R)
                hi = mc.empirical_level_power(batch, max(level - hw, 0.0), R)
                emp.add(R, _dbm(Qm), _dbm(lo), _dbm(min(hi, 1e30)))
        curves += [an, emp]
    return curves


def _required_power_curve(profile, tps_grid, name):
    c = Curve(name, "tasks/s;dBm", "analytic", monotone="increasing")
    for tps in tps_grid:
        R = tps * profile.M
        if R <= cm.max_rate(profile):
            c.add(tps, _dbm(cm.required_power(profile, R)))
    return c


def _operating_points(cfg: ScenarioConfig, trials, seed):
    """Required-power curves for several task loads against the level curve."""
    sc = cfg.scenario
    eng = engine_for(sc)
    level = cfg.solver.level
    tps_grid = np.arange(1, 21) * 500.0
    curves = []
    tr = Curve("operating_points_tradeoff", "tasks/s;dBm", "analytic", monotone="decreasing")
    for tps in tps_grid:
        Q = max_power_at(level, tps * cfg.profile.M, eng)
        if Q is not None:
            tr.add(tps, _dbm(Q))
    curves.append(tr)
    pts = Curve("operating_points", "tasks/s;dBm", "analytic")
    for k in (10, 20, 50, 100):
        prof = cfg.profile.with_(k=float(k), k_tasks=())
        curves.append(_required_power_curve(prof, tps_grid, f"operating_points_required_k{k}"))
        try:
            point, tps = cm.operating_point(prof, level, sc, eng)
            pts.add(tps, _dbm(point.Q))
        except cm.NoIntersection as exc:
            log.warning("k=%d: %s", k, exc)
    curves.append(pts)
    return curves


def _outage_curves(sc, profile, x_grid, x_to_rate, name, units, batch=None):
    eng = engine_for(sc)
    an = Curve(f"{name}_analytic", units, "analytic", monotone="increasing")
    emp = Curve(f"{name}_mc", units, "mc", monotone="increasing")
    feasible = [(x, x_to_rate(x)) for x in x_grid if x_to_rate(x) <= cm.max_rate(profile)]
    for x, R in feasible:
        an.add(x, cm.outage_probability(profile, R, sc, eng))
    if batch is not None and feasible:
        p, hw = mc.empirical_outage(sc, profile, [R for _, R in feasible], 0, batch=batch)
        for (x, _), pi, h in zip(feasible, p, hw):
            emp.add(x, pi, max(pi - h, 0.0), min(pi + h, 1.0))
        return [an, emp]
    return [an]


def _outage_tasks(cfg, trials, seed):
    sc = cfg.scenario
    batch = mc.simulate(sc, trials, seed)
    grid = np.arange(1, 16) * 1000.0
    out = []
    for k in (10, 20, 50):
        prof = cfg.profile.with_(k=float(k), k_tasks=())
        out += _outage_curves(sc, prof, grid, lambda x, p=prof: x * p.M,
                              f"outage_tasks_k{k}", "tasks/s;probability", batch)
    return out


def _outage_cycles(cfg, trials, seed):
    sc = cfg.scenario
    batch = mc.simulate(sc, trials, seed)
    grid = np.arange(1, 13) * 2.5e7
    out = []
    for k in (10, 20, 50):
        prof = cfg.profile.with_(k=float(k), k_tasks=())
        out += _outage_curves(sc, prof, grid, lambda x, p=prof: x * p.M / p.cycles,
                              f"outage_cycles_k{k}", "cycles/s;probability", batch)
    return out


def _outage_qhit(cfg, trials, seed):
    grid = np.arange(1, 16) * 1000.0
    prof = cfg.profile
    out = []
    for q in (0.2, 0.5, 0.7, 1.0):
        sc = cfg.scenario.with_(q_hit=q)
        batch = mc.simulate(sc, trials, seed)
        out += _outage_curves(sc, prof, grid, lambda x: x * prof.M,
                              f"outage_qhit_q{q:g}", "tasks/s;probability", batch)
    return out


def _densify(cfg, trials, seed):
    out = []
    for k, grid in ((20, np.arange(1, 13) * 2.5e7), (1, np.arange(1, 13) * 2.5e6)):
        prof = cfg.profile.with_(k=float(k), k_tasks=())
        for d in (3.0, 5.0, 7.0):
            sc = cfg.scenario.with_(q_hit=1.0, d_PH=d)
            batch = mc.simulate(sc, trials, seed)
            out += _outage_curves(sc, prof, grid, lambda x, p=prof: x * p.M / p.cycles,
                                  f"densify_k{k}_d{d:g}", "cycles/s;probability", batch)
    return out


EXPERIMENTS = {
    "validate": _validate,
    "operating-points": _operating_points,
    "outage-tasks": _outage_tasks,
    "outage-cycles": _outage_cycles,
    "outage-qhit": _outage_qhit,
    "densify": _densify,
}


def run_experiment(name: str, cfg: ScenarioConfig, out_dir: str, trials: int | None = None,
                   seed: int | None = None) -> dict:
    """Run one experiment, write its CSVs and ``manifest.json``; returns the manifest."""
    if name not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    trials = cfg.solver.trials if trials is None else int(trials)
    seed = cfg.solver.seed if seed is None else int(seed)
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.perf_counter()
    curves = EXPERIMENTS[name](cfg, trials, seed)
    files = [os.path.basename(write_curve(c, out_dir)) for c in curves]
    manifest = {
        "experiment": name,
        "config_sha256": cfg.digest(),
        "config": cfg.as_dict(),
        "seed": seed,
        "trials": trials,
        "files": files,
        "runtime_s": round(time.perf_counter() - t0, 3),
    }
    with open(os.path.join(out_dir, f"{name}_manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest
