import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import dblquad

from swiptmc.geometry import DiskRegion, sample_ph_deployment
from swiptmc.propagation import (
    IntensityModel,
    PropagationParams,
    angular_moment,
    intensity,
    intensity_derivative,
    models_for,
    path_loss,
    serving_loss_cdf,
    serving_loss_pdf_weight,
    serving_probability,
)
from swiptmc.scenario import NetworkScenario

SC = NetworkScenario()
PARAMS = PropagationParams.from_scenario(SC)
HIT, OTHER = models_for(SC)


def defining_integral(params, q, W, alpha):
    """q lambda int int P_W(r, theta) r dr dtheta over {loss < alpha} by 2-D quadrature."""
    rho = min((alpha * params.K**W / params.kappa) ** (1 / params.beta), params.R_D)

    def f(r, th):
        mu = params.lambda_w * r * (abs(math.cos(th)) + abs(math.sin(th)))
        if mu == 0.0:
            return r if W == 0 else 0.0
        return r * math.exp(W * math.log(mu) - mu - math.lgamma(W + 1))

    val, _ = dblquad(f, 0.0, math.pi / 4, 0.0, rho, epsabs=0, epsrel=1e-11)
    return 8.0 * q * params.lambda_ph * val


def test_kappa_and_near_field_radius():
    kappa = (4 * math.pi * 2.1e9 / 299_792_458.0) ** 2
    assert PARAMS.kappa == pytest.approx(kappa, rel=1e-15)
    assert PARAMS.near_field_radius == pytest.approx(kappa ** -0.4, rel=1e-14)
    # 0.0279 m with c0 rounded to 3e8
    assert PARAMS.near_field_radius == pytest.approx(0.0279, rel=5e-3)


def test_path_loss_scalar():
    kappa = (4 * math.pi * 2.1e9 / 299_792_458.0) ** 2
    assert path_loss(10.0, 2, PARAMS) == pytest.approx(kappa * 10**2.5 / 0.01, rel=1e-14)
    assert path_loss(0.01, 0, PARAMS) == 1.0
    assert path_loss(0.01, 3, PARAMS) == 1.0


def test_path_loss_vectorized():
    r = np.array([0.01, 1.0, 10.0])
    W = np.array([0, 1, 2])
    got = path_loss(r, W, PARAMS)
    assert got[0] == 1.0
    assert got[2] == pytest.approx(path_loss(10.0, 2, PARAMS))


def test_angular_moment_quadrature():
    from scipy.integrate import quad
    for n in (0, 1, 2, 5, 9):
        ref = quad(lambda t: (abs(math.cos(t)) + abs(math.sin(t))) ** n, 0, 2 * math.pi,
                   limit=200, epsabs=0, epsrel=1e-13)[0]
        assert angular_moment(n) == pytest.approx(ref, rel=1e-11)


ALPHAS = np.geomspace(10.0, 1e9, 7)


@pytest.mark.parametrize("W", range(7))
def test_series_matches_defining_integral(W):
    for a in ALPHAS:
        ref = defining_integral(PARAMS, SC.q_hit, W, a)
        got = intensity(HIT, W, a)
        assert got == pytest.approx(ref, rel=1e-6, abs=1e-300)


@pytest.mark.parametrize("W", [0, 2, 5])
def test_derivative_matches_finite_difference(W):
    for a in np.geomspace(100.0, 0.5 * PARAMS.saturation(W), 5):
        h = a * 1e-5
        fd = (intensity(HIT, W, a + h) - intensity(HIT, W, a - h)) / (2 * h)
        assert intensity_derivative(HIT, W, a) == pytest.approx(fd, rel=1e-6)


def test_intensity_saturates():
    for W in range(7):
        A = PARAMS.saturation(W)
        assert intensity(HIT, W, A) == pytest.approx(intensity(HIT, W, 10 * A), rel=1e-14)
        assert intensity_derivative(HIT, W, 2 * A) == 0.0


def test_total_mass_over_all_wall_counts():
    params = PropagationParams.from_scenario(SC.with_(W_max=60))
    model = IntensityModel(params, 1.0)
    total = model.total(10 * params.saturation(60))
    assert total == pytest.approx(SC.lambda_ph * math.pi * SC.R_D**2, rel=1e-9)


def test_void_probability_matches_simulation():
    sc = SC.with_(d_PH=30.0, q_hit=0.5)
    hit, _ = models_for(sc)
    p_serv = serving_probability(hit)
    region = DiskRegion(sc.R_D)
    rng = np.random.default_rng(4)
    n = 20_000
    empty = sum(not sample_ph_deployment(region, sc.lambda_ph, sc.q_hit, rng).hit.any()
                for _ in range(n))
    se = math.sqrt(p_serv * (1 - p_serv) / n)
    assert empty / n == pytest.approx(1.0 - p_serv, abs=4 * se + 1e-3)
    assert p_serv < 1.0


def test_cdf_and_weight_consistent():
    # integral of the density weight reproduces the CDF increment
    from scipy.integrate import quad
    a, b = 1e3, 1e6
    inc = quad(lambda u: serving_loss_pdf_weight(HIT, math.exp(u)) * math.exp(u),
               math.log(a), math.log(b), epsrel=1e-10, limit=200)[0]
    assert inc == pytest.approx(serving_loss_cdf(HIT, b) - serving_loss_cdf(HIT, a), rel=1e-7)


def test_quadrature_fallback_agrees_with_series():
    for W in (0, 3, 6):
        rho = np.array([0.5, 5.0, 40.0])
        series = HIT.intensity(W, PARAMS.kappa * rho**2.5 / PARAMS.K**W)
        quad_route = HIT._intensity_quadrature(W, rho)
        assert np.allclose(series, quad_route, rtol=1e-9)


@given(q=st.floats(0.01, 0.5), W=st.integers(0, 6), la=st.floats(0.0, 9.0))
def test_intensity_linear_in_q(q, W, la):
    m1 = IntensityModel(PARAMS, q)
    m2 = IntensityModel(PARAMS, 2 * q)
    a = 10.0**la
    assert m2.intensity(W, a) == pytest.approx(2 * m1.intensity(W, a), rel=1e-12, abs=1e-300)


@given(la=st.floats(0.0, 9.0), lb=st.floats(0.0, 9.0))
def test_serving_cdf_monotone_in_unit_interval(la, lb):
    a, b = sorted((10.0**la, 10.0**lb))
    fa, fb = serving_loss_cdf(HIT, a), serving_loss_cdf(HIT, b)
    assert 0.0 <= fa <= fb <= 1.0


def test_wmax_choice_is_converged():
    grid = np.geomspace(1.0, 1e12, 200)
    f6 = serving_loss_cdf(HIT, grid)
    hit7, _ = models_for(SC.with_(W_max=7))
    f7 = serving_loss_cdf(hit7, grid)
    assert np.max(np.abs(f7 - f6)) < 1e-4


def test_invalid_params():
    with pytest.raises(ValueError):
        PropagationParams(beta=2.0, K=0.1, f_c=2e9, lambda_w=0.03, lambda_ph=0.03, R_D=60)
    with pytest.raises(ValueError):
        IntensityModel(PARAMS, 1.5)
