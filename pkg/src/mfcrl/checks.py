"""Oracle and gradient invariants, runnable without any training.

Each check returns a :class:`CheckResult` with the worst observed error and
its tolerance. ``run_all`` is what ``mfcrl check`` prints.
"""

from dataclasses import dataclass

import numpy as np

from .actor_critic import (
    GaussianPolicy,
    MomentNetwork,
    critic_loss,
    exploration_lambda,
    ExplorationSchedule,
    h_operator_term,
    moment_gradients,
    policy_gradient,
    surrogate_objective,
)
from .benchmarks import (
    CosineModelParams,
    VolatilityModelParams,
    cosine_F,
    cosine_F_direct,
    cosine_trig_inputs,
    get_benchmark,
    master_equation_residual,
    volatility_F,
    volatility_F_direct,
)
from .environment import TimeGrid, rollout
from .moments import build_multi_index_set
from .nn import Mlp, finite_difference_check

TABLE1_ANAL = (0.3870, 0.4095, 0.4321, 0.4546, 0.4772, 0.4997, 0.5223, 0.5448, 0.5674, 0.5900)


@dataclass
class CheckResult:
    name: str
    error: float
    tol: float

    @property
    def passed(self):
        return bool(np.isfinite(self.error) and self.error <= self.tol)

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: error={self.error:.3e} tol={self.tol:.1e}"


def systemic_table(variances=None):
    model = get_benchmark("systemic").model()
    variances = [0.1 * k for k in range(10)] if variances is None else variances
    return np.array([model.expected_value(0.0, 0.0, v) for v in variances])


def check_table1():
    err = np.max(np.abs(systemic_table() - np.array(TABLE1_ANAL)))
    return CheckResult("systemic oracle vs tabulated Anal row", float(err), 5e-4)


def random_residual_points(model, count, particles, rng):
    for _ in range(count):
        t = rng.uniform(0.0, model.horizon)
        x = rng.uniform(-2.0, 2.0, size=1)
        cloud = rng.uniform(-1.0, 1.0) + np.sqrt(rng.uniform(0.05, 1.0)) * rng.standard_normal(particles)
        yield t, x, cloud


def check_master_residual(key, count=50, particles=200, seed=0):
    model = get_benchmark(key).model()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t, x, cloud in random_residual_points(model, count, particles, rng):
        res = master_equation_residual(model, t, x, cloud)
        worst = max(worst, float(np.max(np.abs(res))))
    return CheckResult(f"master-equation residual ({key})", worst, 1e-6)


def check_F_expansion(count=100, particles=50, seed=0):
    rng = np.random.default_rng(seed)
    cp, vp = CosineModelParams(), VolatilityModelParams()
    worst_c = worst_v = 0.0
    for _ in range(count):
        cloud = (rng.uniform(-1, 1) + rng.uniform(0.1, 1.5) * rng.standard_normal(particles))[None]
        x = rng.uniform(-3, 3, size=(1, 7))
        t = rng.uniform(0.0, cp.horizon)
        fc = cosine_F(t, x, cosine_trig_inputs(cloud, cp), cp)
        worst_c = max(worst_c, float(np.max(np.abs(fc - cosine_F_direct(t, x, cloud, cp)))))
        fv = volatility_F(t, x, cloud, vp)
        worst_v = max(worst_v, float(np.max(np.abs(fv - volatility_F_direct(t, x, cloud, vp)))))
    return [
        CheckResult("F expansion vs raw form (cosine)", worst_c, 1e-10),
        CheckResult("F expansion vs raw form (volatility)", worst_v, 1e-10),
    ]


def check_network_gradients(cases=100, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        n_in = int(rng.integers(1, 6))
        hidden = [int(h) for h in rng.integers(2, 8, size=int(rng.integers(1, 4)))]
        n_out = int(rng.integers(1, 4))
        net = Mlp(n_in, hidden, n_out, rng=rng)
        net.params = net.params + 0.1 * rng.standard_normal(net.num_params)
        x = rng.standard_normal((int(rng.integers(1, 5)), n_in))
        cot = rng.standard_normal((x.shape[0], n_out))
        worst = max(worst, finite_difference_check(net, x, 1e-5, cot))
    return CheckResult(f"network gradients vs central differences ({cases} nets)", worst, 1e-4)


def fd_relative_error(fun, theta, grad, step=1e-5):
    """max_k |grad_k - fd_k| / (|grad_k| + step) with central differences of ``fun``."""
    worst = 0.0
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = step
        fd = (fun(theta + e) - fun(theta - e)) / (2 * step)
        worst = max(worst, abs(grad[k] - fd) / (abs(grad[k]) + step))
    return float(worst)


def tiny_instance(key="systemic", batch=2, particles=3, steps=3, order=2, lam=0.05, seed=0, hidden=(5, 5)):
    """A small rollout with random actor/critic, for gradient checks."""
    rng = np.random.default_rng(seed)
    bench = get_benchmark(key)
    model = bench.model()
    idx = build_multi_index_set(model.d, order)
    n_in = 1 + model.d + idx.size
    actor = Mlp(n_in, hidden, model.p, rng=rng)
    critic = Mlp(n_in, hidden, 1, rng=rng)
    policy = GaussianPolicy(actor, idx, model.horizon, lam)
    J = MomentNetwork(critic, idx, model.horizon)
    grid = TimeGrid(model.horizon, steps)
    clouds = bench.sampler(batch, particles).sample(rng)
    record = rollout(policy, model, grid, clouds, lam, rng)
    return model, policy, J, record


def check_critic_gradient(key="systemic", seed=0):
    model, policy, J, record = tiny_instance(key, seed=seed)
    _, grad = critic_loss(record, J)
    err = fd_relative_error(lambda th: critic_loss(record, J, th)[0], J.net.params.copy(), grad)
    return CheckResult(f"critic-loss gradient vs finite differences ({key})", err, 1e-4)


def check_policy_gradient(key="systemic", seed=0):
    model, policy, J, record = tiny_instance(key, seed=seed)
    grad = policy_gradient(record, J, policy, model)
    err = fd_relative_error(
        lambda th: surrogate_objective(record, J, policy, model, params=th),
        policy.net.params.copy(),
        grad,
    )
    return CheckResult(f"policy gradient vs finite differences ({key})", err, 1e-4)


def brute_force_h(record, critic, policy, model, dt_weight=True):
    """Operator term with per-sample parameter Jacobians, no reverse-mode sharing.

    For every (k, i, j) the Jacobian of m_theta is built one output at a time,
    the per-sample bracket D1 dC/dtheta + 1/2 D2 : dvartheta/dtheta is formed
    in full, averaged over particles and contracted with Gbar.
    """
    from ._kernels import d1_d2

    n, dt = record.grid.steps, record.grid.dt
    N, M, d = record.states.shape[1:]
    P = policy.net.num_params
    gbar = moment_gradients(record, critic)
    times = record.grid.times
    total = np.zeros(P)
    for k in range(n):
        for i in range(N):
            avg = np.zeros((policy.idx.size, P))
            for j in range(M):
                x = record.states[k, i, j]
                feats = policy.features(times[k], x[None, None, :], record.moments[k, i][None])[0, 0]
                m, acts = policy.net.forward(feats[None], keep=True)
                jac = np.stack(
                    [policy.net.backward(acts, np.eye(policy.p)[q][None])[0] for q in range(policy.p)]
                )  # (p, P)
                _, dC = model.gaussian_action_drift(times[k], m[0], record.lam)
                _, dV = model.gaussian_action_diffusion(times[k], m[0], record.lam)
                D1, D2 = d1_d2(x, policy.idx.exponents)
                per = np.einsum("li,ip,pq->lq", D1, dC, jac)
                per += 0.5 * np.einsum("lij,ijp,pq->lq", D2, dV, jac)
                avg += per / M
            total += gbar[k, i] @ avg
    return total * ((dt if dt_weight else 1.0) / N)


class _FrozenActionModel:
    """Wraps a model so its Gaussian action maps no longer depend on m."""

    def __init__(self, model):
        self._model = model
        self.controls_drift = True
        self.controls_volatility = True

    def __getattr__(self, name):
        return getattr(self._model, name)

    def gaussian_action_drift(self, t, m, lam):
        C, dC = self._model.gaussian_action_drift(t, m, lam)
        return np.ones_like(C), np.zeros_like(dC)

    def gaussian_action_diffusion(self, t, m, lam):
        V, dV = self._model.gaussian_action_diffusion(t, m, lam)
        return np.ones_like(V), np.zeros_like(dV)


def check_h_operator(seed=0):
    out = []
    for key in ("systemic", "volatility", "multid_lq2"):
        model, policy, J, record = tiny_instance(key, seed=seed)
        fast = h_operator_term(record, J, policy, model)
        slow = brute_force_h(record, J, policy, model)
        err = float(np.max(np.abs(fast - slow)) / max(1.0, float(np.max(np.abs(slow)))))
        out.append(CheckResult(f"averaged H term vs per-sample form ({key})", err, 1e-10))
    model, policy, J, record = tiny_instance("systemic", seed=seed)
    frozen = h_operator_term(record, J, policy, _FrozenActionModel(model))
    out.append(CheckResult("H term with theta-independent action maps", float(np.max(np.abs(frozen))), 0.0))
    return out


def sigmoid_reference(epoch, epochs, lam_max=0.1, lam_min=1e-4):
    z = (20.0 * epoch - 10.0 * epochs) / epochs
    return (lam_max - lam_min) * (1.0 - 1.0 / (1.0 + np.exp(-z))) + lam_min


def check_schedule(epochs=2000):
    sched = ExplorationSchedule(epochs)
    err = max(abs(exploration_lambda(e, sched) - sigmoid_reference(e, epochs)) for e in (0, epochs // 2, epochs))
    return CheckResult("exploration schedule at 0, N/2, N", float(err), 1e-6)


def run_all(quick=False):
    results = [check_table1(), check_schedule()]
    results += check_F_expansion(count=20 if quick else 100)
    for key in ("cosine", "volatility"):
        results.append(check_master_residual(key, count=10 if quick else 50))
    results.append(check_network_gradients(cases=20 if quick else 100))
    for key in ("systemic", "volatility"):
        results.append(check_critic_gradient(key))
        results.append(check_policy_gradient(key))
    results += check_h_operator()
    return results
