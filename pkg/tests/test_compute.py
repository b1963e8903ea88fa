import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import Bounds, LinearConstraint, minimize

from swiptmc import compute as cm
from swiptmc import montecarlo as mc
from swiptmc.scenario import ComputeProfile, NetworkScenario, watt_to_dbm
from swiptmc.tradeoff import engine_for, max_power_at

DEFAULT = NetworkScenario()


def _exact_required(xi, k, N, M, R):
    """Cubic law in exact rational arithmetic."""
    return float(Fraction(xi) * (Fraction(k) * Fraction(N) * Fraction(R)) ** 3 / Fraction(M) ** 3)


@pytest.mark.parametrize("k,R,dbm", [(10, 192e3, -23.3), (100, 32e3, -16.7)])
def test_required_power_direct_values(k, R, dbm):
    prof = ComputeProfile(xi=1e-28, k=k, N=600, M=32)
    Q = cm.required_power(prof, R)
    assert Q == pytest.approx(_exact_required(1e-28, k, 600, 32, R), rel=1e-12)
    assert watt_to_dbm(Q) == pytest.approx(dbm, abs=0.05)


def test_required_power_magnitudes():
    assert cm.required_power(ComputeProfile(k=10), 192e3) == pytest.approx(4.67e-6, rel=2e-3)
    assert cm.required_power(ComputeProfile(k=100), 32e3) == pytest.approx(2.16e-5, rel=2e-3)
    assert cm.required_power(ComputeProfile(), 0.0) == 0.0
    arr = cm.required_power(ComputeProfile(), np.array([1e3, 2e3]))
    assert arr[1] / arr[0] == pytest.approx(8.0)


def test_optimal_frequencies_direct_and_boundary():
    prof = ComputeProfile(xi=1e-28, k=10, N=600, M=32)
    f, E = cm.optimal_frequencies(prof, 192e3)
    assert f == pytest.approx(10 * 600 * 192e3 / 32, rel=1e-15)
    assert E == pytest.approx(1e-28 * 192e3**2 * 6000**3 / 32**2, rel=1e-14)
    # energy per message times messages per second is the required power
    assert E * 192e3 / 32 == pytest.approx(cm.required_power(prof, 192e3), rel=1e-12)
    bound = cm.max_rate(prof)
    f_b, _ = cm.optimal_frequencies(prof, bound)
    assert f_b == prof.f_max
    assert cm.optimal_frequencies(prof.with_(k=0.0), 1e5) == (0.0, 0.0)


def test_infeasible_rate_reports_bound():
    prof = ComputeProfile(k=50, f_max=1e9)
    bound = cm.max_rate(prof)
    with pytest.raises(cm.InfeasibleRate) as err:
        cm.required_power(prof, bound * 1.01)
    assert err.value.bound == pytest.approx(1e9 * 32 / (50 * 600))
    with pytest.raises(cm.InfeasibleRate):
        cm.optimal_frequencies(prof, bound * 2)


def test_per_task_counts_are_summed():
    prof = ComputeProfile(k_tasks=(3.0, 5.0, 2.0))
    assert prof.k == 10.0
    assert cm.cycles_per_second(prof, 32.0) == pytest.approx(6000.0)
    assert cm.tasks_per_second(prof, 192e3) == pytest.approx(6000.0)


def _instances(seed, n=10):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        k, N = int(rng.integers(1, 5)), int(rng.integers(1, 6))
        if k * N > 20:
            continue
        M = float(rng.integers(1, 8))
        prof = ComputeProfile(xi=1.0, k=k, N=N, M=M, f_max=10.0)
        R = float(rng.uniform(0.05, 0.9)) * cm.max_rate(prof)
        out.append((prof, R))
    return out


def _solver_oracle(prof, R):
    """Direct minimisation over per-cycle durations tau_i = 1/f_i:
    sum tau_i^-2 subject to sum tau_i <= M/R and tau_i >= 1/f_max."""
    c = int(prof.cycles)
    T = prof.M / R
    x0 = np.linspace(0.5, 1.0, c)
    x0 *= 0.9 * T / x0.sum()
    x0 = np.maximum(x0, 1.0 / prof.f_max)
    res = minimize(lambda t: np.sum(t**-2.0), x0, jac=lambda t: -2.0 * t**-3.0,
                   hess=lambda t: np.diag(6.0 * t**-4.0), method="trust-constr",
                   bounds=Bounds(1.0 / prof.f_max, np.inf),
                   constraints=[LinearConstraint(np.ones((1, c)), -np.inf, T)],
                   options={"gtol": 1e-12, "xtol": 1e-14, "maxiter": 5000,
                            "initial_barrier_parameter": 1e-9})
    return prof.xi * res.fun


@pytest.mark.parametrize("prof,R", _instances(7))
def test_equal_frequencies_match_convex_solver(prof, R):
    _, E = cm.optimal_frequencies(prof, R)
    assert E == pytest.approx(_solver_oracle(prof, R), rel=1e-6)


@pytest.mark.parametrize("prof,R", _instances(11))
def test_equal_frequencies_beat_random_schedules(prof, R, rng):
    f_opt, E = cm.optimal_frequencies(prof, R)
    c = int(prof.cycles)
    T = prof.M / R
    # random splits of the deadline into per-cycle durations
    tau = rng.dirichlet(np.ones(c) * 30.0, size=1000) * T
    f = 1.0 / tau
    ok = f.max(axis=1) <= prof.f_max
    assert ok.sum() > 50
    energies = prof.xi * np.sum(f[ok] ** 2, axis=1)
    assert np.all(energies >= E * (1.0 - 1e-12))
    assert cm.cpu_energy(np.full(c, f_opt), prof.xi) == pytest.approx(E)


@given(k=st.floats(1.0, 200.0), N=st.floats(10.0, 2000.0))
def test_energy_and_power_strictly_increasing_convex(k, N):
    prof = ComputeProfile(k=k, N=N)
    R = np.linspace(0.0, cm.max_rate(prof), 40)
    Q = cm.required_power(prof, R)
    E = np.array([cm.optimal_frequencies(prof, r)[1] for r in R])
    for y in (Q, E):
        assert np.all(np.diff(y) > 0)
        assert np.all(np.diff(y, 2) > 0)


def test_outage_monotone_in_rate_k_and_N():
    eng = engine_for(DEFAULT)
    R = [2e4, 6e4, 1.5e5]
    base = ComputeProfile()
    p = {}
    for k in (10.0, 20.0):
        for N in (600.0, 900.0):
            prof = base.with_(k=k, N=N)
            p[k, N] = np.array([cm.outage_probability(prof, r, DEFAULT, eng) for r in R])
    for v in p.values():
        assert np.all((v >= 0) & (v <= 1))
        assert np.all(np.diff(v) >= -1e-7)
    assert np.all(p[20.0, 600.0] >= p[10.0, 600.0] - 1e-7)
    assert np.all(p[10.0, 900.0] >= p[10.0, 600.0] - 1e-7)
    assert np.all(p[20.0, 900.0] >= p[20.0, 600.0] - 1e-7)


def test_outage_at_vanishing_rate():
    eng = engine_for(DEFAULT)
    p0 = cm.outage_probability(ComputeProfile(), 1e-3, DEFAULT, eng)
    assert p0 == pytest.approx(1.0 - eng.serving_mass, abs=1e-6)


@pytest.fixture(scope="module")
def k20_point():
    prof = ComputeProfile(k=20)
    point, tps = cm.operating_point(prof, 0.75, DEFAULT)
    return prof, point, tps


def test_operating_point_contract(k20_point):
    prof, point, tps = k20_point
    assert point.jccdf == pytest.approx(0.75, abs=1e-3)
    assert point.Q == pytest.approx(cm.required_power(prof, point.R), rel=1e-12)
    assert tps == pytest.approx(point.R / 32)
    # the point also sits on the level curve
    Q_level = max_power_at(0.75, point.R, engine_for(DEFAULT))
    assert watt_to_dbm(Q_level) == pytest.approx(watt_to_dbm(point.Q), abs=0.05)


def test_operating_point_against_simulation(k20_point):
    _, point, _ = k20_point
    batch = mc.simulate(DEFAULT, 40_000, base_seed=3)
    emp = mc.jccdf_from_batch(batch, point.R, point.Q)
    assert abs(emp - 0.75) <= 0.03


def test_operating_point_errors():
    sparse = NetworkScenario(q_hit=0.003)
    with pytest.raises(cm.NoIntersection):
        cm.operating_point(ComputeProfile(), 0.95, sparse)
    with pytest.raises(ValueError):
        cm.operating_point(ComputeProfile(), 1.5, sparse)


def test_rate_at_outage_inverts_outage(k20_point):
    prof, point, _ = k20_point
    R = cm.rate_at_outage(prof, 0.25, DEFAULT)
    assert R == pytest.approx(point.R, rel=1e-5)
    assert cm.outage_probability(prof, R, DEFAULT) == pytest.approx(0.25, abs=1e-3)
    assert math.isfinite(R)
