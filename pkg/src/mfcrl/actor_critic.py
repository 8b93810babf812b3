"""Actor-critic learning with moment networks.

The actor is a Gaussian policy N(m_theta(t, x, moments), lam I_p); the
critic J_eta(t, x, moments) is fit to realized cost-to-go. The policy
gradient is the score-function term plus the mean-field operator term,
which is differentiated after averaging over particles: per cloud and time
step, the moment-space gradient of the particle-averaged critic is
contracted with D1/D2 at every particle, and one reverse pass through the
actor turns the result into a parameter gradient.
"""

import logging
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .environment import TimeGrid, rollout
from .moments import build_multi_index_set, lions_weights
from .nn import AdamState, DivergenceError, Mlp, adam_step

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExplorationSchedule:
    """Sigmoid decay of the exploration variance from ``lam_max`` to ``lam_min``."""

    epochs: int
    lam_max: float = 0.1
    lam_min: float = 1e-4

    def __call__(self, epoch):
        return exploration_lambda(epoch, self)


def exploration_lambda(epoch, sched):
    if sched.epochs <= 0:
        return sched.lam_min
    z = (20.0 * epoch - 10.0 * sched.epochs) / sched.epochs
    s = 1.0 / (1.0 + np.exp(-z))
    return float((sched.lam_max - sched.lam_min) * (1.0 - s) + sched.lam_min)


def moment_features(t, x, moments, horizon):
    """Network input rows ``(t / T, x, moments)``.

    ``x`` is (..., M, d); ``moments`` (..., L) is broadcast over particles;
    ``t`` is a scalar or an array matching the leading axes of ``x``.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float) / horizon
    lead = x.shape[:-1]
    tt = np.broadcast_to(t.reshape(t.shape + (1,) * (x.ndim - t.ndim)), lead + (1,))
    mom = np.asarray(moments, dtype=float)[..., None, :]
    mom = np.broadcast_to(mom, lead + (mom.shape[-1],))
    return np.concatenate([tt, x, mom], axis=-1)


class MomentNetwork:
    """A network of (t, x, moments) with a fixed multi-index set."""

    def __init__(self, net, idx, horizon):
        self.net = net
        self.idx = idx
        self.horizon = float(horizon)
        if net.n_in != 1 + idx.d + idx.size:
            raise ValueError("network input width must be 1 + d + L_d")

    @property
    def d(self):
        return self.idx.d

    @property
    def moment_slice(self):
        return slice(1 + self.idx.d, None)

    def features(self, t, x, moments):
        return moment_features(t, x, moments, self.horizon)

    def __call__(self, t, x, moments, params=None):
        feats = self.features(t, x, moments)
        out = self.net.forward(feats.reshape(-1, feats.shape[-1]), params)
        return out.reshape(feats.shape[:-1] + (self.net.n_out,))


class GaussianPolicy(MomentNetwork):
    """Gaussian policy N(m(t, x, moments), lam I_p).

    With ``tape=True`` every call to ``mean`` keeps its activations so the
    policy gradient can reuse the rollout's forward passes.
    """

    def __init__(self, net, idx, horizon, lam, tape=False):
        super().__init__(net, idx, horizon)
        if lam < 0:
            raise ValueError("exploration variance must be non-negative")
        self.lam = float(lam)
        self.tape = [] if tape else None

    @property
    def p(self):
        return self.net.n_out

    def mean(self, t, x, moments):
        if self.tape is None:
            return self(t, x, moments)
        feats = self.features(t, x, moments)
        out, acts = self.net.forward(feats.reshape(-1, feats.shape[-1]), keep=True)
        self.tape.append((self.net.params.copy(), out, acts))
        return out.reshape(feats.shape[:-1] + (self.p,))

    def replay(self, steps):
        """Stacked (m, activations) of the last ``steps`` taped calls, or None.

        Only valid while the network parameters are unchanged.
        """
        if self.tape is None or len(self.tape) < steps:
            return None
        tail = self.tape[-steps:]
        if any(not np.array_equal(p, self.net.params) for p, _, _ in tail):
            return None
        m = np.concatenate([o for _, o, _ in tail])
        acts = [np.concatenate(layer) for layer in zip(*(a for _, _, a in tail))]
        return m, acts

    def log_density(self, t, x, moments, a, params=None):
        """``-(p/2) log(2 pi lam) - |a - m|^2 / (2 lam)``, one value per particle."""
        if self.lam <= 0:
            raise ValueError("log-density needs lam > 0")
        m = self(t, x, moments, params)
        sq = np.sum((np.asarray(a, dtype=float) - m) ** 2, axis=-1)
        return -0.5 * self.p * np.log(2 * np.pi * self.lam) - sq / (2 * self.lam)

    def sample(self, t, x, moments, rng):
        m = self.mean(t, x, moments)
        return m + np.sqrt(self.lam) * rng.standard_normal(m.shape)


def log_density(policy, t, x, moments, a):
    return policy.log_density(t, x, moments, a)


def _flat_eval(moment_net, times, states, moments, params=None, keep=False):
    feats = moment_features(times, states, moments, moment_net.horizon)
    rows = feats.reshape(-1, feats.shape[-1])
    out = moment_net.net.forward(rows, params, keep=keep)
    shape = feats.shape[:-1] + (moment_net.net.n_out,)
    if keep:
        return out[0].reshape(shape), out[1]
    return out.reshape(shape)


def critic_loss(record, critic, params=None):
    """Martingale regression loss on realized cost-to-go and its eta-gradient.

    ``(1/MN) sum_{i,j} sum_{k<n} |G_k - J(t_k, X_k, moments_k)|^2 dt`` with
    ``G_k = g + sum_{l>=k} f_l dt``.
    """
    n, dt = record.grid.steps, record.grid.dt
    N, M = record.batch, record.particles
    targets = record.cost_to_go()
    values, acts = _flat_eval(
        critic, record.grid.times[:n], record.states[:n], record.moments[:n], params, keep=True
    )
    resid = targets - values[..., 0]
    loss = float(np.sum(resid * resid) * dt / (M * N))
    cot = (-2.0 * dt / (M * N)) * resid.reshape(-1, 1)
    grad, _ = critic.net.backward(acts, cot, params)
    return loss, grad


def moment_gradients(record, critic):
    """``grad_y (1/M) sum_j J(t_k, X_k^{ij}, y)`` at y = moments, shape (n, N, L)."""
    n = record.grid.steps
    M = record.particles
    _, acts = _flat_eval(critic, record.grid.times[:n], record.states[:n], record.moments[:n], keep=True)
    cot = np.full((acts[0].shape[0], 1), 1.0 / M)
    _, gx = critic.net.backward(acts, cot)
    gx = gx.reshape(record.states[:n].shape[:-1] + (gx.shape[-1],))
    return gx[..., critic.moment_slice].sum(axis=2)


def averaged_bracket(record, policy, model, params=None):
    """Particle average of ``D1(X) C_theta + 1/2 D2^T(X) o vartheta_theta``, (n, N, L).

    Dense reference form, used to build surrogate objectives in checks.
    """
    from ._kernels import d1_d2

    n = record.grid.steps
    states = record.states[:n]
    m = _flat_eval(policy, record.grid.times[:n], states, record.moments[:n], params)
    t = _time_column(record)
    C, _ = model.gaussian_action_drift(t, m, record.lam)
    V, _ = model.gaussian_action_diffusion(t, m, record.lam)
    D1, D2 = d1_d2(states, policy.idx.exponents)
    per = np.einsum("...li,...i->...l", D1, C) + 0.5 * np.einsum("...lij,...ij->...l", D2, V)
    return per.mean(axis=2)


def _time_column(record):
    return record.grid.times[: record.grid.steps, None, None, None]


def _h_cotangent(record, policy, model, gbar, m, weight):
    n = record.grid.steps
    N, M, d = record.states.shape[1:]
    L = policy.idx.size
    states = record.states[:n].reshape(n * N, M, d)
    w1, w2 = lions_weights(states, policy.idx, gbar.reshape(n * N, L))
    w1 = w1.reshape(n, N, M, d)
    w2 = w2.reshape(n, N, M, d, d)
    cot = np.zeros(m.shape)
    if model.controls_drift:
        _, dC = model.gaussian_action_drift(_time_column(record), m, record.lam)
        cot += np.einsum("...i,...ip->...p", w1, dC)
    if model.controls_volatility:
        _, dV = model.gaussian_action_diffusion(_time_column(record), m, record.lam)
        cot += 0.5 * np.einsum("...ij,...ijp->...p", w2, dV)
    return cot * (weight / (N * M))


def h_operator_term(record, critic, policy, model, dt_weight=True):
    """theta-gradient of ``(1/N) sum_i sum_k A_k^i(theta) . Gbar_k^i`` (times dt).

    Both particle averages are formed before differentiating: Gbar comes
    from one reverse pass through the critic, and the gradient of the
    bracket from one reverse pass through the actor with per-particle
    cotangents ``D1^T Gbar . dC_theta/dm + 1/2 (D2 o Gbar) . dvartheta_theta/dm``.
    """
    if not (hasattr(model, "gaussian_action_drift") and hasattr(model, "gaussian_action_diffusion")):
        raise NotImplementedError("model does not expose closed-form Gaussian action maps")
    n = record.grid.steps
    if not (model.controls_drift or model.controls_volatility):
        return np.zeros(policy.net.num_params)
    gbar = moment_gradients(record, critic)
    m, acts = _flat_eval(policy, record.grid.times[:n], record.states[:n], record.moments[:n], keep=True)
    weight = record.grid.dt if dt_weight else 1.0
    cot = _h_cotangent(record, policy, model, gbar, m, weight)
    grad, _ = policy.net.backward(acts, cot.reshape(-1, policy.p))
    return grad


def _critic_sweep(record, critic, terminal, with_gbar):
    # one critic forward over all n+1 steps; the reverse pass for the moment
    # gradients reuses the activations of the first n steps
    n, dt = record.grid.steps, record.grid.dt
    out = _flat_eval(critic, record.grid.times, record.states, record.moments, keep=with_gbar)
    J, acts = out if with_gbar else (out, None)
    J = J[..., 0]
    if terminal == "cost":
        J[n] = record.terminal_costs
    elif terminal != "critic":
        raise ValueError(f"unknown terminal mode {terminal!r}")
    td = J[1:] - J[:-1] + record.running_costs * dt
    if not with_gbar:
        return td, None
    rows = n * record.batch * record.particles
    head = [a[:rows] for a in acts]
    cot = np.full((rows, 1), 1.0 / record.particles)
    _, gx = critic.net.backward(head, cot)
    gx = gx.reshape(record.states[:n].shape[:-1] + (gx.shape[-1],))
    return td, gx[..., critic.moment_slice].sum(axis=2)


def temporal_differences(record, critic, terminal="critic"):
    """``J(t_{k+1}) - J(t_k) + f_k dt`` along every path, (n, N, M).

    ``terminal="cost"`` replaces the critic at the horizon by the observed
    terminal cost.
    """
    return _critic_sweep(record, critic, terminal, False)[0]


def policy_gradient(record, critic, policy, model, dt_weight=True, terminal="critic"):
    """Empirical policy gradient: score term plus mean-field operator term."""
    if record.lam != policy.lam:
        raise ValueError(f"record lam {record.lam} != policy lam {policy.lam}")
    if policy.lam <= 0:
        raise ValueError("policy gradient needs lam > 0")
    n = record.grid.steps
    N, M = record.batch, record.particles
    with_h = model.controls_drift or model.controls_volatility
    td, gbar = _critic_sweep(record, critic, terminal, with_h)
    taped = policy.replay(n)
    if taped is None:
        m, acts = _flat_eval(policy, record.grid.times[:n], record.states[:n], record.moments[:n], keep=True)
    else:
        m, acts = taped[0].reshape(record.actions.shape), taped[1]
    cot = (record.actions - m) * (td[..., None] / (policy.lam * M * N))
    if with_h:
        cot += _h_cotangent(record, policy, model, gbar, m, record.grid.dt if dt_weight else 1.0)
    grad, _ = policy.net.backward(acts, cot.reshape(-1, policy.p))
    return grad


def surrogate_objective(record, critic, policy, model, params=None, dt_weight=True, terminal="critic"):
    """Scalar whose theta-gradient is the policy gradient.

    Score part with the temporal differences frozen, plus the averaged
    operator bracket contracted with the frozen moment gradients. Forward
    passes only, for finite-difference checks.
    """
    n, dt = record.grid.steps, record.grid.dt
    N, M = record.batch, record.particles
    td = temporal_differences(record, critic, terminal)
    logp = policy.log_density(
        record.grid.times[:n], record.states[:n], record.moments[:n], record.actions, params
    )
    score_part = np.sum(logp * td) / (M * N)
    gbar = moment_gradients(record, critic)
    A = averaged_bracket(record, policy, model, params)
    w = dt if dt_weight else 1.0
    return float(score_part + w * np.sum(A * gbar) / N)


@dataclass
class TrainerConfig:
    actor_lr: float = 5e-4
    critic_lr: float = 1e-2
    batch: int = 5
    particles: int = 1000
    steps: int = 20
    order: int = 2
    epochs: int = 2000
    seed: int = 0
    hidden: tuple = (20, 20, 20)
    lam_max: float = 0.1
    lam_min: float = 1e-4
    clip_norm: float = 10.0
    h_dt_weight: bool = True
    terminal: str = "critic"
    checkpoint_every: int = 100

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.actor_lr < 0 or self.critic_lr < 0:
            raise ValueError("learning rates must be non-negative")
        if self.actor_lr > 0 and self.critic_lr < 10 * self.actor_lr:
            warnings.warn(
                f"critic_lr={self.critic_lr} is less than 10x actor_lr={self.actor_lr}; "
                "the critic may not track the policy",
                stacklevel=2,
            )

    def to_dict(self):
        out = asdict(self)
        out["hidden"] = list(self.hidden)
        return out


@dataclass
class TrainState:
    actor: Mlp
    critic: Mlp
    actor_opt: AdamState
    critic_opt: AdamState
    epoch: int = 0
    history: list = field(default_factory=list, repr=False)


def init_state(config, model):
    """Fresh actor/critic networks seeded from ``config.seed``."""
    idx = build_multi_index_set(model.d, config.order)
    n_in = 1 + model.d + idx.size
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x5EED]))
    actor = Mlp(n_in, config.hidden, model.p, rng=rng)
    critic = Mlp(n_in, config.hidden, 1, rng=rng)
    return TrainState(
        actor,
        critic,
        AdamState(config.actor_lr, actor.num_params),
        AdamState(config.critic_lr, critic.num_params),
    )


def epoch_rng(seed, epoch):
    """Independent random stream for one epoch, so resuming reproduces a run."""
    return np.random.default_rng(np.random.SeedSequence([seed, 1 + epoch]))


def _clip(grad, limit):
    if limit is None:
        return grad
    norm = np.linalg.norm(grad)
    return grad * (limit / norm) if norm > limit else grad


class Trainer:
    """Two-timescale actor-critic loop over epochs."""

    def __init__(self, config, model, sampler, state=None):
        self.config = config
        self.model = model
        self.sampler = sampler
        self.idx = build_multi_index_set(model.d, config.order)
        self.grid = TimeGrid(model.horizon, config.steps)
        self.schedule = ExplorationSchedule(config.epochs, config.lam_max, config.lam_min)
        self.state = state or init_state(config, model)

    def policy(self, lam):
        return GaussianPolicy(self.state.actor, self.idx, self.model.horizon, lam)

    def critic(self):
        return MomentNetwork(self.state.critic, self.idx, self.model.horizon)

    def train_epoch(self):
        cfg, st = self.config, self.state
        t0 = time.perf_counter()
        rng = epoch_rng(cfg.seed, st.epoch)
        lam = self.schedule(st.epoch)
        initial = self.sampler.sample(rng)
        policy = GaussianPolicy(st.actor, self.idx, self.model.horizon, lam, tape=True)
        record = rollout(policy, self.model, self.grid, initial, lam, rng)

        critic = self.critic()
        loss, g_critic = critic_loss(record, critic)
        if not np.isfinite(loss):
            raise DivergenceError(f"critic loss is not finite at epoch {st.epoch}")
        g_critic = _clip(g_critic, cfg.clip_norm)
        st.critic.params = adam_step(st.critic_opt, st.critic.params, g_critic)

        g_actor = policy_gradient(
            record, critic, policy, self.model, dt_weight=cfg.h_dt_weight, terminal=cfg.terminal
        )
        g_actor = _clip(g_actor, cfg.clip_norm)
        st.actor.params = adam_step(st.actor_opt, st.actor.params, g_actor)

        metrics = {
            "epoch": st.epoch,
            "lam": lam,
            "critic_loss": loss,
            "critic_grad_norm": float(np.linalg.norm(g_critic)),
            "actor_grad_norm": float(np.linalg.norm(g_actor)),
            "mean_cost": float(record.realized_cost().mean()),
            "wall_time": time.perf_counter() - t0,
        }
        st.epoch += 1
        return metrics

    def run(self, until=None, callback=None):
        until = self.config.epochs if until is None else until
        out = []
        while self.state.epoch < until:
            metrics = self.train_epoch()
            out.append(metrics)
            if callback is not None:
                callback(metrics)
        return out


def train_epoch(trainer):
    return trainer.train_epoch()


def evaluate_converged(actor, critic, model, clouds, grid, rng):
    """Run the deterministic-mean policy and compare realized cost with the critic.

    ``clouds`` is (N, M, d). Returns per-cloud simulated costs, critic values
    at t=0, and the absolute and relative gaps.
    """
    policy = GaussianPolicy(actor.net, actor.idx, actor.horizon, 0.0)
    record = rollout(policy, model, grid, clouds, 0.0, rng)
    cost = record.realized_cost().mean(axis=1)
    value = critic(0.0, record.states[0], record.moments[0])[..., 0].mean(axis=1)
    gap = value - cost
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(cost != 0, gap / np.abs(cost), 0.0)
    return {"cost": cost, "critic_value": value, "gap": gap, "rel_gap": rel}
