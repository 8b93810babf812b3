import numpy as np
import pytest

from mfcrl.benchmarks import (
    BENCHMARKS,
    CosineModel,
    CosineModelParams,
    SystemicRiskModel,
    SystemicRiskParams,
    TradingModel,
    TradingParams,
    VolatilityModel,
    VolatilityModelParams,
    cosine_F,
    cosine_F_direct,
    cosine_optimal_control,
    cosine_trig_inputs,
    cosine_value,
    get_benchmark,
    master_equation_residual,
    multid_lq_value,
    systemic_expected_value,
    systemic_K,
    systemic_optimal_control,
    systemic_R,
    systemic_value,
    trading_K,
    trading_optimal_control,
    trading_R,
    volatility_F,
    volatility_F_direct,
    volatility_optimal_control,
)

P = SystemicRiskParams()


def test_systemic_terminal_values():
    assert systemic_K(P.horizon, P) == pytest.approx(1.0, abs=1e-15)
    assert systemic_R(P.horizon, P) == pytest.approx(0.0, abs=1e-15)


def test_systemic_tabulated_values():
    assert systemic_R(0.0, P) == pytest.approx(0.3870, abs=5e-5)
    assert systemic_K(0.0, P) == pytest.approx((0.4095 - 0.3870) / 0.1, abs=1e-3)
    assert systemic_expected_value(0.0, 0.5, P) == pytest.approx(0.4997, abs=5e-5)
    assert systemic_expected_value(0.0, 0.9, P) == pytest.approx(0.5900, abs=5e-5)


def test_systemic_control_symmetry():
    assert systemic_optimal_control(0.3, 1.5, 1.5, P) == 0.0


def test_systemic_riccati_structure():
    # K' = 2K^2 + 2(kappa + q)K + (q^2 - p)/2, from matching (x - mean)^2 terms in the HJB
    t = np.linspace(0.1, 0.9, 9)
    h = 1e-5
    dK = (systemic_K(t + h, P) - systemic_K(t - h, P)) / (2 * h)
    K = systemic_K(t, P)
    np.testing.assert_allclose(dK, 2 * K**2 + 2 * (P.kappa + P.q) * K + 0.5 * (P.q**2 - P.p), atol=1e-8)
    grid = systemic_K(np.linspace(0, 1, 201), P)
    assert np.max(np.abs(np.diff(grid, 2))) < 1e-3


def test_systemic_R_is_sigma2_integral_of_K():
    params = SystemicRiskParams(sigma=1.7)
    s = np.linspace(0.0, 1.0, 20001)
    k = systemic_K(s, params)
    integral = np.sum(0.5 * (k[1:] + k[:-1]) * np.diff(s))
    assert systemic_R(0.0, params) == pytest.approx(params.sigma**2 * integral, rel=1e-7)


def test_systemic_params_validation():
    with pytest.raises(ValueError):
        SystemicRiskParams(q=2.0, p=1.0)


def test_trading_values():
    tp = TradingParams()
    assert trading_K(0.5, tp) == 3.0 and trading_R(0.5, tp) == 0.0
    assert trading_R(0.0, tp) == pytest.approx(np.log(2.5) - 4.5, abs=1e-12)
    assert trading_K(0.0, tp) == pytest.approx(1.2)
    assert trading_optimal_control(0.1, 0.4, 0.4, tp) == -3.0


def test_cosine_F_dirac_at_horizon():
    cp = CosineModelParams()
    for x in (-1.3, 0.0, 0.4, 2.2):
        cloud = np.full((1, 5), x)
        F = cosine_F(cp.horizon, np.array([[x]]), cosine_trig_inputs(cloud, cp), cp)
        assert F[0, 0] == pytest.approx(1 + cp.sigma**2, abs=1e-13)


def test_cosine_F_matches_raw_form(rng):
    cp = CosineModelParams(kappa=0.7, sigma=1.3)
    for _ in range(20):
        cloud = rng.standard_normal((2, 30))
        x = rng.uniform(-3, 3, size=(2, 4))
        t = rng.uniform(0, cp.horizon)
        np.testing.assert_allclose(
            cosine_F(t, x, cosine_trig_inputs(cloud, cp), cp), cosine_F_direct(t, x, cloud, cp), atol=1e-10
        )


def test_cosine_kappa_zero_removes_beta_terms(rng):
    cloud = rng.standard_normal((1, 20))
    x = rng.standard_normal((1, 3))
    cp0 = CosineModelParams(kappa=1e-300)
    trig = cosine_trig_inputs(cloud, cp0)
    trig_nob = dict(trig, beta_cos=0.0 * trig["beta_cos"], beta_sin=0.0 * trig["beta_sin"])
    np.testing.assert_array_equal(cosine_F(0.1, x, trig, cp0), cosine_F(0.1, x, trig_nob, cp0))


def test_cosine_value_facts(rng):
    T = 0.4
    assert cosine_value(T, np.array([[0.3]]), np.full((1, 4), 0.3), T)[0, 0] == pytest.approx(1.0)
    assert cosine_optimal_control(0.1, np.array([[0.3]]), np.full((1, 4), 0.3), T)[0, 0] == 0.0
    cloud = rng.standard_normal((3, 50))
    x = rng.uniform(-4, 4, size=(3, 20))
    for t in (0.0, 0.2, 0.4):
        assert np.all(cosine_value(t, x, cloud, T) <= np.exp(T - t) + 1e-15)


def test_cosine_control_is_twice_x_derivative(rng):
    T = 0.4
    cloud = rng.standard_normal((1, 40))
    x = rng.uniform(-2, 2, size=(1, 6))
    h = 1e-5
    dv = (cosine_value(0.1, x + h, cloud, T) - cosine_value(0.1, x - h, cloud, T)) / (2 * h)
    # alpha* = -U with U = 2 d_x V
    np.testing.assert_allclose(cosine_optimal_control(0.1, x, cloud, T), -2 * dv, atol=1e-6)


def test_volatility_control_at_dirac():
    vp = VolatilityModelParams()
    a = volatility_optimal_control(vp.horizon, np.array([[0.2]]), np.full((1, 3), 0.2), vp)
    assert a[0, 0] == pytest.approx(1 / (2.2 * np.exp(0.4) - 2), rel=1e-12)
    assert a[0, 0] == pytest.approx(0.780, abs=5e-4)


def test_volatility_control_positive(rng):
    vp = VolatilityModelParams()
    for _ in range(20):
        cloud = rng.standard_normal((1, 30))
        x = rng.uniform(-5, 5, size=(1, 10))
        assert np.all(volatility_optimal_control(rng.uniform(0, vp.horizon), x, cloud, vp) > 0)


def test_volatility_penalty_validation():
    with pytest.raises(ValueError):
        VolatilityModelParams(penalty=1.0)


def test_volatility_F_matches_raw_form(rng):
    vp = VolatilityModelParams(kappa=0.5)
    for _ in range(20):
        cloud = rng.standard_normal((2, 25))
        x = rng.uniform(-3, 3, size=(2, 5))
        t = rng.uniform(0, vp.horizon)
        np.testing.assert_allclose(volatility_F(t, x, cloud, vp), volatility_F_direct(t, x, cloud, vp), atol=1e-10)


def test_multid_additivity(rng):
    for d in (1, 2, 3):
        x = rng.standard_normal((4, d))
        means = rng.standard_normal(d)
        ref = sum(systemic_value(0.2, x[:, i], means[i], P) for i in range(d))
        np.testing.assert_array_equal(multid_lq_value(0.2, x, means, P), ref)
    x = np.zeros((1, 2))
    assert multid_lq_value(0.0, x, np.zeros(2), P)[0] == pytest.approx(0.7740, abs=1e-4)
    model = get_benchmark("multid_lq3").model()
    assert model.expected_value(0.0, 0.0, [0.3, 0.6, 0.0]) == pytest.approx(
        systemic_expected_value(0, 0.3, P) + systemic_expected_value(0, 0.6, P) + systemic_R(0, P), abs=1e-15
    )


@pytest.mark.parametrize("key", sorted(BENCHMARKS))
def test_terminal_consistency(key, rng):
    model = get_benchmark(key).model()
    cloud = rng.standard_normal((2, 30, model.d))
    np.testing.assert_allclose(
        model.value(model.horizon, cloud, cloud), model.terminal_cost(cloud, cloud), atol=1e-12
    )


def _random_point(rng, particles=200):
    t = rng.uniform(0.0, 0.35)
    x = rng.uniform(-2, 2, size=3)
    cloud = rng.uniform(-1, 1) + rng.uniform(0.2, 1.0) * rng.standard_normal(particles)
    return t, x, cloud


@pytest.mark.parametrize(
    "model,tol",
    [
        (CosineModel(), 1e-8),
        (VolatilityModel(), 1e-8),
        (SystemicRiskModel(), 1e-8),
        (SystemicRiskModel(SystemicRiskParams(sigma=2.0)), 1e-8),
        # K = gamma / (1 + gamma tau) is steep, so the time differences are noisier
        (TradingModel(TradingParams(sigma=1.5)), 1e-7),
    ],
    ids=["cosine", "volatility", "systemic", "systemic-sigma2", "trading"],
)
def test_master_residual_vanishes(model, tol, rng):
    for _ in range(10):
        t, x, cloud = _random_point(rng)
        assert np.max(np.abs(master_equation_residual(model, t, x, cloud))) <= tol


def test_sigma_convention_discriminates(rng):
    # the alternative reading V = K (x - m)^2 + sigma^2 R leaves a visible residual at sigma = 2
    params = SystemicRiskParams(sigma=2.0)
    model = SystemicRiskModel(params)

    def alt(t, x, cloud):
        m = cloud.mean(axis=1, keepdims=True)
        return (systemic_K(t, params) * (x - m) ** 2 + params.sigma**2 * systemic_R(t, params))[..., 0]

    t, x, cloud = _random_point(rng)
    assert np.max(np.abs(master_equation_residual(model, t, x, cloud, value_fn=alt))) > 0.1


class _ShiftedCosine(CosineModel):
    def running_cost(self, t, x, cloud, a):
        return super().running_cost(t, x, cloud, a) + 0.1


def test_residual_sees_forcing_perturbation(rng):
    t, x, cloud = _random_point(rng)
    res = master_equation_residual(_ShiftedCosine(), t, x, cloud)
    np.testing.assert_allclose(res, 0.1, atol=1e-8)


def test_residual_step_validation():
    with pytest.raises(ValueError):
        master_equation_residual(CosineModel(), 0.1, np.zeros(1), np.zeros(3), steps=(1e-6, 1e-3))
    with pytest.raises(ValueError):
        master_equation_residual(get_benchmark("multid_lq2").model(), 0.1, np.zeros(1), np.zeros(3))


def test_registry():
    assert {"systemic", "trading", "cosine", "volatility", "multid_lq2", "multid_lq3"} <= set(BENCHMARKS)
    with pytest.raises(KeyError):
        get_benchmark("nope")
    with pytest.raises(ValueError):
        get_benchmark("systemic").model(bogus=1.0)
    assert get_benchmark("systemic").model(sigma=2.0).params.sigma == 2.0
    desk = get_benchmark("systemic").desk
    assert (desk.batch, desk.particles, desk.steps, desk.epochs) == (5, 1000, 20, 2000)


def test_gaussian_expected_values_match_monte_carlo(rng):
    for key in sorted(BENCHMARKS):
        model = get_benchmark(key).model()
        cloud = 0.1 + np.sqrt(0.3) * rng.standard_normal((1, 3000, model.d))
        mc = model.value(0.0, cloud, cloud).mean()
        assert model.expected_value(0.0, 0.1, 0.3) == pytest.approx(mc, abs=0.03), key
