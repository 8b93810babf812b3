"""Benchmark mean-field control problems with closed-form solutions.

Each model is usable two ways: as a blackbox environment (coefficients and
costs evaluated on particle clouds) and as an analytic oracle (value
function and optimal feedback control).

Array conventions follow :mod:`mfcrl.environment`: query points ``x`` are
(N, K, d), clouds are (N, M, d), and the n-th cloud defines the measure for
the n-th batch of query points.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .environment import DriftControl, GaussianCloudSampler, MeanFieldModel, VolatilityControl


def _cloud_mean(cloud):
    return cloud.mean(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# systemic risk (linear-quadratic)


@dataclass(frozen=True)
class SystemicRiskParams:
    kappa: float = 0.6
    sigma: float = 1.0
    p: float = 2.0
    q: float = 0.8
    c: float = 2.0
    horizon: float = 1.0

    def __post_init__(self):
        if self.q**2 > self.p:
            raise ValueError("need q^2 <= p")
        if self.delta <= 0:
            raise ValueError("need (kappa + q)^2 + p - q^2 > 0")

    @property
    def delta(self):
        return (self.kappa + self.q) ** 2 + self.p - self.q**2


def systemic_K(t, params):
    """Riccati coefficient of (x - mean)^2; equals c/2 at the horizon."""
    sd = np.sqrt(params.delta)
    kq = params.kappa + params.q
    tau = params.horizon - np.asarray(t, dtype=float)
    sh, ch = np.sinh(sd * tau), np.cosh(sd * tau)
    ratio = (sd * sh + (kq + params.c) * ch) / (sd * ch + (kq + params.c) * sh)
    return -0.5 * (kq - sd * ratio)


def systemic_R(t, params):
    """Variance-driven part of the value; already carries the sigma^2 factor.

    R(t) = sigma^2 * int_t^T K(s) ds, so the value is K (x - mean)^2 + R with
    no further sigma^2 (the two readings coincide at sigma = 1).
    """
    sd = np.sqrt(params.delta)
    kq = params.kappa + params.q
    tau = params.horizon - np.asarray(t, dtype=float)
    s2 = params.sigma**2
    inner = np.cosh(sd * tau) + (kq + params.c) / sd * np.sinh(sd * tau)
    return 0.5 * s2 * np.log(inner) - 0.5 * s2 * kq * tau


def systemic_value(t, x, mean, params):
    return systemic_K(t, params) * (np.asarray(x) - mean) ** 2 + systemic_R(t, params)


def systemic_expected_value(t, variance, params):
    """E[V(t, X, mu)] for X ~ mu with the given variance."""
    return systemic_K(t, params) * variance + systemic_R(t, params)


def systemic_optimal_control(t, x, mean, params):
    return (2.0 * systemic_K(t, params) + params.q) * (mean - np.asarray(x))


def multid_lq_value(t, x, means, params):
    """Sum of one-dimensional systemic values over independent coordinates.

    ``x`` and ``means`` have the coordinate axis last.
    """
    x = np.asarray(x, dtype=float)
    return np.sum(systemic_value(t, x, np.asarray(means, dtype=float), params), axis=-1)


class SystemicRiskModel(DriftControl, MeanFieldModel):
    """Interbank lending model; d > 1 stacks independent copies coordinate-wise."""

    name = "systemic"

    def __init__(self, params=None, d=1):
        self.params = params or SystemicRiskParams()
        self.d = self.p = int(d)
        self.horizon = self.params.horizon

    def drift(self, t, x, cloud):
        return self.params.kappa * (_cloud_mean(cloud) - x)

    def diffusion(self, t, x, cloud, a):
        return np.full(x.shape, self.params.sigma)

    def running_cost(self, t, x, cloud, a):
        pr = self.params
        gap = _cloud_mean(cloud) - x
        return np.sum(0.5 * a * a - pr.q * a * gap + 0.5 * pr.p * gap * gap, axis=-1)

    def terminal_cost(self, x, cloud):
        return np.sum(0.5 * self.params.c * (x - _cloud_mean(cloud)) ** 2, axis=-1)

    def value(self, t, x, cloud):
        return multid_lq_value(t, x, _cloud_mean(cloud), self.params)

    def optimal_control(self, t, x, cloud):
        return systemic_optimal_control(t, x, _cloud_mean(cloud), self.params)

    def expected_value(self, t, mean, variance):
        """E[V(t, X, mu)] for mu Gaussian with per-coordinate variances."""
        var = np.broadcast_to(np.asarray(variance, dtype=float), (self.d,))
        return float(np.sum(systemic_expected_value(t, var, self.params)))

    def lions_derivatives(self, t, x, cloud):
        """d_mu V(t, x, mu)(xi) and d_xi d_mu V for d = 1, shapes (N, K, M)."""
        K = systemic_K(t, self.params)
        gap = (x - _cloud_mean(cloud))[..., 0]
        dmu = np.broadcast_to(-2.0 * K * gap[..., None], gap.shape + (cloud.shape[1],))
        return dmu, np.zeros_like(dmu)

    def describe(self):
        return {"name": self.name, "d": self.d, **asdict(self.params)}


# ---------------------------------------------------------------------------
# optimal trading (linear-quadratic)


@dataclass(frozen=True)
class TradingParams:
    price: float = 3.0
    gamma: float = 3.0
    sigma: float = 1.0
    horizon: float = 0.5

    def __post_init__(self):
        if self.price <= 0 or self.gamma <= 0:
            raise ValueError("need positive transaction price and risk aversion")


def trading_K(t, params):
    tau = params.horizon - np.asarray(t, dtype=float)
    return params.gamma / (1.0 + params.gamma * tau)


def trading_R(t, params):
    tau = params.horizon - np.asarray(t, dtype=float)
    return params.sigma**2 * np.log1p(params.gamma * tau) - params.price**2 * tau


def trading_value(t, x, mean, params):
    return trading_K(t, params) * (np.asarray(x) - mean) ** 2 + trading_R(t, params)


def trading_optimal_control(t, x, mean, params):
    return -trading_K(t, params) * (np.asarray(x) - mean) - params.price


class TradingModel(DriftControl, MeanFieldModel):
    name = "trading"
    d = p = 1

    def __init__(self, params=None):
        self.params = params or TradingParams()
        self.horizon = self.params.horizon

    def drift(self, t, x, cloud):
        return np.zeros_like(x)

    def diffusion(self, t, x, cloud, a):
        return np.full(x.shape, self.params.sigma)

    def running_cost(self, t, x, cloud, a):
        return np.sum(a * a + 2.0 * self.params.price * a, axis=-1)

    def terminal_cost(self, x, cloud):
        return np.sum(self.params.gamma * (x - _cloud_mean(cloud)) ** 2, axis=-1)

    def value(self, t, x, cloud):
        return trading_value(t, x, _cloud_mean(cloud), self.params)[..., 0]

    def optimal_control(self, t, x, cloud):
        return trading_optimal_control(t, x, _cloud_mean(cloud), self.params)

    def expected_value(self, t, mean, variance):
        return float(trading_K(t, self.params) * float(variance) + trading_R(t, self.params))

    def lions_derivatives(self, t, x, cloud):
        K = trading_K(t, self.params)
        gap = (x - _cloud_mean(cloud))[..., 0]
        dmu = np.broadcast_to(-2.0 * K * gap[..., None], gap.shape + (cloud.shape[1],))
        return dmu, np.zeros_like(dmu)

    def describe(self):
        return {"name": self.name, **asdict(self.params)}


# ---------------------------------------------------------------------------
# cosine kernel models: V(t, x, mu) = e^{T-t} E[cos(x - xi)]


def trig_moments(cloud, beta):
    """Trigonometric functionals of each cloud (N, M) with drift values ``beta`` (N, M).

    Returns a dict of (N, 1) arrays keyed cos, sin, sincos, sin2, cos2,
    beta_cos, beta_sin.
    """
    c, s = np.cos(cloud), np.sin(cloud)

    def avg(v):
        return v.mean(axis=1, keepdims=True)

    return {
        "cos": avg(c),
        "sin": avg(s),
        "sincos": avg(s * c),
        "sin2": avg(s * s),
        "cos2": avg(c * c),
        "beta_cos": avg(beta * c),
        "beta_sin": avg(beta * s),
    }


def cosine_value(t, x, cloud, horizon):
    """``x`` (N, K), ``cloud`` (N, M) -> (N, K)."""
    diff = x[..., :, None] - cloud[..., None, :]
    return np.exp(horizon - t) * np.cos(diff).mean(axis=-1)


def cosine_gaussian_value(t, variance, horizon):
    """E[V] when X and xi are i.i.d. N(m, v): E[cos(X - xi)] = e^{-v}."""
    return float(np.exp(horizon - t) * np.exp(-float(variance)))


def cosine_optimal_control(t, x, cloud, horizon):
    diff = x[..., :, None] - cloud[..., None, :]
    return 2.0 * np.exp(horizon - t) * np.sin(diff).mean(axis=-1)


def _mean_reverting_drift(kappa, x, cloud):
    return kappa * (cloud.mean(axis=-1, keepdims=True) - x)


@dataclass(frozen=True)
class CosineModelParams:
    kappa: float = 1.0
    sigma: float = 1.0
    horizon: float = 0.4

    def __post_init__(self):
        if min(self.kappa, self.sigma, self.horizon) <= 0:
            raise ValueError("kappa, sigma and horizon must be positive")


def cosine_F(t, x, trig, params):
    """Forcing term of the drift-controlled cosine model, trigonometric expansion.

    ``x`` (N, K); ``trig`` from :func:`cosine_trig_inputs`.
    """
    tau = params.horizon - t
    e1, e2 = np.exp(tau), np.exp(2.0 * tau)
    s2 = params.sigma**2
    C, S = trig["cos"], trig["sin"]
    beta_x = params.kappa * (trig["mean"] - x)
    a_cos = e1 * ((1 + s2) * C + trig["beta_sin"] - beta_x * S) - 2 * e2 * (
        trig["sincos"] * S - trig["sin2"] * C
    )
    a_sin = e1 * ((1 + s2) * S - trig["beta_cos"] + beta_x * C) - 2 * e2 * (
        trig["sincos"] * C - trig["cos2"] * S
    )
    return np.cos(x) * a_cos + np.sin(x) * a_sin


def cosine_trig_inputs(cloud, params):
    """trig_moments of (N, M) clouds plus the cloud mean, for :func:`cosine_F`."""
    beta = _mean_reverting_drift(params.kappa, cloud, cloud)
    trig = trig_moments(cloud, beta)
    trig["mean"] = cloud.mean(axis=1, keepdims=True)
    return trig


def cosine_F_direct(t, x, cloud, params):
    """Same forcing term from the raw expectations (pairwise, O(K M + M^2))."""
    tau = params.horizon - t
    e1, e2 = np.exp(tau), np.exp(2.0 * tau)
    s2 = params.sigma**2
    beta_x = _mean_reverting_drift(params.kappa, x, cloud)
    beta_xi = _mean_reverting_drift(params.kappa, cloud, cloud)
    diff = x[..., :, None] - cloud[..., None, :]
    w = np.cos(diff)
    w_pp = -np.cos(diff)
    w_p = -np.sin(diff)
    first = e1 * np.mean((w - s2 * w_pp) + (beta_xi[..., None, :] - beta_x[..., :, None]) * w_p, axis=-1)
    # E_{xi'}[w'(xi - xi')] for each xi
    inner = np.mean(-np.sin(cloud[..., :, None] - cloud[..., None, :]), axis=-1)
    second = 2 * e2 * np.mean(w_p * inner[..., None, :], axis=-1)
    return first - second


class CosineModel(DriftControl, MeanFieldModel):
    """Non-LQ model with drift control built to have V = e^{T-t} E[cos(x - xi)]."""

    name = "cosine"
    d = p = 1

    def __init__(self, params=None):
        self.params = params or CosineModelParams()
        self.horizon = self.params.horizon

    def drift(self, t, x, cloud):
        return _mean_reverting_drift(self.params.kappa, x[..., 0], cloud[..., 0])[..., None]

    def diffusion(self, t, x, cloud, a):
        return np.full(x.shape, self.params.sigma)

    def forcing(self, t, x, cloud):
        trig = cosine_trig_inputs(cloud[..., 0], self.params)
        return cosine_F(t, x[..., 0], trig, self.params)

    def running_cost(self, t, x, cloud, a):
        return self.forcing(t, x, cloud) + 0.5 * np.sum(a * a, axis=-1)

    def terminal_cost(self, x, cloud):
        return cosine_value(self.horizon, x[..., 0], cloud[..., 0], self.horizon)

    def value(self, t, x, cloud):
        return cosine_value(t, x[..., 0], cloud[..., 0], self.horizon)

    def optimal_control(self, t, x, cloud):
        return cosine_optimal_control(t, x[..., 0], cloud[..., 0], self.horizon)[..., None]

    def expected_value(self, t, mean, variance):
        return cosine_gaussian_value(t, variance, self.horizon)

    def lions_derivatives(self, t, x, cloud):
        # d_mu V(x)(xi) = -e^{T-t} w'(x - xi); d_xi d_mu V(x)(xi) = e^{T-t} w''(x - xi)
        diff = x[..., 0][..., :, None] - cloud[..., 0][..., None, :]
        e1 = np.exp(self.horizon - t)
        return e1 * np.sin(diff), -e1 * np.cos(diff)

    def describe(self):
        return {"name": self.name, **asdict(self.params)}


@dataclass(frozen=True)
class VolatilityModelParams:
    kappa: float = 1.0
    horizon: float = 0.4
    penalty: float = field(default=None)

    def __post_init__(self):
        if self.penalty is None:
            object.__setattr__(self, "penalty", float(2.2 * np.exp(self.horizon)))
        if self.penalty <= 2.0 * np.exp(self.horizon):
            raise ValueError("penalty must exceed 2 e^T to keep the optimal control bounded")


def _vol_denominator(t, x, cloud, params):
    # P + d_x U(t, x, mu) with d_x U = -2 e^{T-t} E[cos(x - xi)]
    return params.penalty - 2.0 * np.exp(params.horizon - t) * np.mean(
        np.cos(x[..., :, None] - cloud[..., None, :]), axis=-1
    )


def volatility_optimal_control(t, x, cloud, params):
    den = _vol_denominator(t, x, cloud, params)
    if np.any(np.abs(den) < 1e-6):
        raise ValueError("near-singular optimal-control denominator")
    return 1.0 / den


def volatility_value(t, x, cloud, params):
    return cosine_value(t, x, cloud, params.horizon)


def volatility_F(t, x, cloud, params):
    """Forcing term of the controlled-volatility model, trigonometric form.

    ``x`` (N, K), ``cloud`` (N, M). The last two terms use
    (e^{T-t}/2) E[cos(xi) / D(xi)^2], the coefficient implied by the
    raw-expectation form of F.
    """
    tau = params.horizon - t
    e1 = np.exp(tau)
    P = params.penalty
    mean = cloud.mean(axis=-1, keepdims=True)
    cc, ss = np.cos(cloud), np.sin(cloud)
    Cb, Sb = cc.mean(axis=-1, keepdims=True), ss.mean(axis=-1, keepdims=True)
    cx, sx = np.cos(x), np.sin(x)
    proj_x = cx * Cb + sx * Sb  # E[cos(x - xi)]
    den_x = P - 2 * e1 * proj_x
    beta_x = params.kappa * (mean - x)
    beta_xi = params.kappa * (mean - cloud)
    bc = np.mean(beta_xi * cc, axis=-1, keepdims=True)
    bs = np.mean(beta_xi * ss, axis=-1, keepdims=True)
    den_xi = P - 2 * e1 * (cc * Cb + ss * Sb)
    wc = np.mean(cc / den_xi**2, axis=-1, keepdims=True)
    ws = np.mean(ss / den_xi**2, axis=-1, keepdims=True)
    return (
        -0.5 * P / den_x**2
        + 1.0 / den_x
        + e1 * proj_x * (1.0 + 0.5 / den_x**2)
        + e1 * (beta_x * sx * Cb - beta_x * cx * Sb - bc * sx + bs * cx)
        + 0.5 * e1 * (cx * wc + sx * ws)
    )


def volatility_F_direct(t, x, cloud, params):
    """Same forcing term from raw expectations (pairwise)."""
    tau = params.horizon - t
    e1 = np.exp(tau)
    P = params.penalty
    diff = x[..., :, None] - cloud[..., None, :]
    ecos = np.mean(np.cos(diff), axis=-1)
    den_x = P - 2 * e1 * ecos
    beta_x = params.kappa * (cloud.mean(axis=-1, keepdims=True) - x)
    beta_xi = params.kappa * (cloud.mean(axis=-1, keepdims=True) - cloud)
    den_xi = _vol_denominator(t, cloud, cloud, params)
    return (
        -P / (2 * den_x**2)
        + 1.0 / den_x
        + ecos * e1 * (1 + 0.5 / den_x**2)
        + e1 * np.mean((beta_x[..., :, None] - beta_xi[..., None, :]) * np.sin(diff), axis=-1)
        + e1 * np.mean(np.cos(diff) * 0.5 / den_xi[..., None, :] ** 2, axis=-1)
    )


class VolatilityModel(VolatilityControl, MeanFieldModel):
    """Non-LQ model with sigma = a, built to have V = e^{T-t} E[cos(x - xi)]."""

    name = "volatility"
    d = p = 1

    def __init__(self, params=None):
        self.params = params or VolatilityModelParams()
        self.horizon = self.params.horizon

    def drift(self, t, x, cloud):
        return _mean_reverting_drift(self.params.kappa, x[..., 0], cloud[..., 0])[..., None]

    def diffusion(self, t, x, cloud, a):
        return np.asarray(a, dtype=float)

    def forcing(self, t, x, cloud):
        return volatility_F(t, x[..., 0], cloud[..., 0], self.params)

    def running_cost(self, t, x, cloud, a):
        a1 = a[..., 0]
        return self.forcing(t, x, cloud) + 0.5 * self.params.penalty * a1 * a1 - a1

    def terminal_cost(self, x, cloud):
        return cosine_value(self.horizon, x[..., 0], cloud[..., 0], self.horizon)

    def value(self, t, x, cloud):
        return cosine_value(t, x[..., 0], cloud[..., 0], self.horizon)

    def optimal_control(self, t, x, cloud):
        return volatility_optimal_control(t, x[..., 0], cloud[..., 0], self.params)[..., None]

    def expected_value(self, t, mean, variance):
        return cosine_gaussian_value(t, variance, self.horizon)

    def lions_derivatives(self, t, x, cloud):
        diff = x[..., 0][..., :, None] - cloud[..., 0][..., None, :]
        e1 = np.exp(self.horizon - t)
        return e1 * np.sin(diff), -e1 * np.cos(diff)

    def describe(self):
        return {"name": self.name, **asdict(self.params)}


# ---------------------------------------------------------------------------
# Master equation residual


def _fd_first(fn, z, h):
    return (-fn(z + 2 * h) + 8 * fn(z + h) - 8 * fn(z - h) + fn(z - 2 * h)) / (12 * h)


def _fd_second(fn, z, h):
    return (-fn(z + 2 * h) + 16 * fn(z + h) - 30 * fn(z) + 16 * fn(z - h) - fn(z - 2 * h)) / (
        12 * h * h
    )


def master_equation_residual(model, t, x, cloud, steps=(1e-3, 1e-3), value_fn=None):
    """Left-hand side of the Master Bellman equation along the optimal control.

    One-dimensional models only. ``x`` is (K,), ``cloud`` (M,). Time and
    space derivatives of the value oracle use fourth-order central
    differences with steps ``(h_t, h_x)``; the Lions derivatives come from
    ``model.lions_derivatives``. Coefficients and the running cost are the
    model's blackbox callables evaluated at the oracle's optimal control, so
    a transcription error in the forcing term shows up as a nonzero residual.
    """
    h_t, h_x = steps
    if not (1e-4 <= h_t <= 1e-2 and 1e-4 <= h_x <= 1e-2):
        raise ValueError("finite-difference steps must lie in [1e-4, 1e-2]")
    if model.d != 1:
        raise ValueError("master_equation_residual supports d = 1")
    value = value_fn or model.value
    xq = np.asarray(x, dtype=float).reshape(1, -1, 1)
    cl = np.asarray(cloud, dtype=float).reshape(1, -1, 1)
    t = float(t)

    def v_t(s):
        return value(s, xq, cl)

    def v_x(z):
        return value(t, z, cl)

    dt_v = _fd_first(v_t, t, h_t)
    dx_v = _fd_first(v_x, xq, h_x)
    dxx_v = _fd_second(v_x, xq, h_x)

    a_x = model.optimal_control(t, xq, cl)
    a_xi = model.optimal_control(t, cl, cl)
    b_x = (model.drift(t, xq, cl) + model.action_drift(t, a_x))[..., 0]
    b_xi = (model.drift(t, cl, cl) + model.action_drift(t, a_xi))[..., 0]
    s_x = model.diffusion(t, xq, cl, a_x)[..., 0]
    s_xi = model.diffusion(t, cl, cl, a_xi)[..., 0]
    dmu, dxidmu = model.lions_derivatives(t, xq, cl)
    lions = np.mean(b_xi[..., None, :] * dmu + 0.5 * (s_xi**2)[..., None, :] * dxidmu, axis=-1)
    f = model.running_cost(t, xq, cl, a_x)
    res = dt_v + b_x * dx_v + 0.5 * s_x**2 * dxx_v + lions + f
    return res[0]


# ---------------------------------------------------------------------------
# preset registry


@dataclass(frozen=True)
class TrainingPreset:
    batch: int
    particles: int
    steps: int
    order: int
    epochs: int
    actor_lr: float
    critic_lr: float


@dataclass(frozen=True)
class Benchmark:
    """A registered problem: model factory, initial-law family, eval grid and presets."""

    key: str
    description: str
    model_cls: type
    params_cls: type
    mean_scale: tuple
    var_scale: tuple
    eval_grid: tuple  # (mean, variance) pairs, per-coordinate broadcast
    full: TrainingPreset
    desk: TrainingPreset
    dim: int = 1

    def params(self, **overrides):
        try:
            return self.params_cls(**overrides)
        except TypeError as exc:
            raise ValueError(f"bad parameter override for {self.key}: {exc}") from None

    def model(self, **overrides):
        params = self.params(**overrides)
        if self.dim != 1:
            return self.model_cls(params, d=self.dim)
        return self.model_cls(params)

    def preset(self, desk=True):
        return self.desk if desk else self.full

    def sampler(self, batch, particles, mean_scale=None, var_scale=None):
        return GaussianCloudSampler(
            self.dim,
            batch,
            particles,
            self.mean_scale if mean_scale is None else mean_scale,
            self.var_scale if var_scale is None else var_scale,
        )


def _grid_1d(variances, mean=0.0):
    return tuple((mean, float(v)) for v in variances)


_TENTHS = [round(0.1 * k, 1) for k in range(10)]

BENCHMARKS = {}


def register(bench):
    BENCHMARKS[bench.key] = bench
    return bench


register(
    Benchmark(
        "systemic",
        "1-D systemic risk LQ model, kappa=0.6 sigma=1 p=c=2 q=0.8 T=1",
        SystemicRiskModel,
        SystemicRiskParams,
        mean_scale=(0.0,),
        var_scale=(1.0,),
        eval_grid=_grid_1d(_TENTHS),
        full=TrainingPreset(10, 10000, 100, 2, 6000, 5e-4, 1e-2),
        desk=TrainingPreset(5, 1000, 20, 2, 2000, 5e-4, 1e-2),
    )
)
register(
    Benchmark(
        "trading",
        "1-D optimal trading LQ model, P=3 gamma=3 sigma=1 T=0.5",
        TradingModel,
        TradingParams,
        mean_scale=(0.4,),
        var_scale=(0.5,),
        eval_grid=tuple((m, v) for m in (0.0, 0.16, 0.32) for v in (0.0, 0.1, 0.25, 0.4)),
        full=TrainingPreset(10, 10000, 100, 2, 9000, 5e-4, 1e-2),
        desk=TrainingPreset(5, 1000, 20, 2, 2000, 5e-4, 1e-2),
    )
)
register(
    Benchmark(
        "cosine",
        "1-D non-LQ drift-controlled model with cosine kernel, kappa=sigma=1 T=0.4",
        CosineModel,
        CosineModelParams,
        mean_scale=(0.2,),
        var_scale=(0.5,),
        eval_grid=tuple((m, v) for m in (0.0, 0.1, 0.2) for v in (0.0, 0.1, 0.25, 0.4)),
        full=TrainingPreset(10, 20000, 40, 3, 9000, 5e-4, 2e-2),
        desk=TrainingPreset(5, 1000, 20, 3, 2000, 5e-4, 2e-2),
    )
)
register(
    Benchmark(
        "volatility",
        "1-D non-LQ model with controlled volatility, kappa=1 T=0.4 P=2.2e^T",
        VolatilityModel,
        VolatilityModelParams,
        mean_scale=(0.2,),
        var_scale=(0.5,),
        eval_grid=tuple((m, v) for m in (0.0, 0.04, 0.2) for v in (0.0, 0.1, 0.25, 0.4)),
        full=TrainingPreset(10, 20000, 40, 3, 9000, 5e-4, 2.5e-2),
        desk=TrainingPreset(5, 1000, 20, 3, 2000, 5e-4, 2.5e-2),
    )
)
for _d in (2, 3):
    register(
        Benchmark(
            f"multid_lq{_d}",
            f"{_d}-D systemic risk LQ model, independent coordinates",
            SystemicRiskModel,
            SystemicRiskParams,
            mean_scale=(0.0,) * _d,
            var_scale=(1.0,) * _d,
            eval_grid=_grid_1d([0.0, 0.1, 0.5, 0.9]),
            full=TrainingPreset(10, 10000, 50, 2, 6000, 1e-3, 1e-2),
            desk=TrainingPreset(5, 1000, 20, 2, 2000, 1e-3, 1e-2),
            dim=_d,
        )
    )


def get_benchmark(key):
    try:
        return BENCHMARKS[key]
    except KeyError:
        raise KeyError(f"unknown benchmark {key!r}; known: {sorted(BENCHMARKS)}") from None
