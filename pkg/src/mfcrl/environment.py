"""Particle simulation of a controlled McKean-Vlasov SDE.

The law of the state is represented by a batch of N particle clouds of M
particles each. Model coefficients are blackboxes evaluated on query points
``x`` of shape (N, K, d) against the clouds ``cloud`` of shape (N, M, d)
that define the N measures; usually ``x is cloud``.

Drift and diffusion are separable in the control: ``b = beta(t, x, mu) +
C(t, a)`` and ``sigma sigma^T = Sigma(t, x, mu) + vartheta(t, a)``. The
learner may call the known action maps ``C``, ``vartheta`` and their
Gaussian averages, and otherwise only sees rollout outputs.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .moments import empirical_moments
from .nn import DivergenceError


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    steps: int

    def __post_init__(self):
        if self.horizon <= 0 or self.steps < 1:
            raise ValueError(f"bad time grid: T={self.horizon}, n={self.steps}")

    @property
    def dt(self):
        return self.horizon / self.steps

    @property
    def times(self):
        return np.arange(self.steps + 1) * self.dt


class MeanFieldModel:
    """Blackbox contract for a mean-field control problem.

    Subclasses set ``d``, ``p``, ``horizon`` and implement the coefficient
    methods. Control-map mixins (:class:`DriftControl`,
    :class:`VolatilityControl`) supply the known parts.
    """

    name = "model"
    d = 1
    p = 1
    horizon = 1.0
    # flags used to skip structurally zero terms of the mean-field operator
    controls_drift = False
    controls_volatility = False

    def drift(self, t, x, cloud):
        """Unknown drift part beta, shape (N, K, d)."""
        raise NotImplementedError

    def diffusion(self, t, x, cloud, a):
        """Volatility applied to the Brownian increment.

        Either (N, K, d) for a diagonal sigma or (N, K, d, d).
        """
        raise NotImplementedError

    def running_cost(self, t, x, cloud, a):
        raise NotImplementedError

    def terminal_cost(self, x, cloud):
        raise NotImplementedError

    def action_drift(self, t, a):
        raise NotImplementedError

    def action_diffusion(self, t, a):
        raise NotImplementedError

    def gaussian_action_drift(self, t, m, lam):
        """Mean of C(t, a) under a ~ N(m, lam I) and its Jacobian in m.

        Shapes (..., d) and (..., d, p).
        """
        raise NotImplementedError

    def gaussian_action_diffusion(self, t, m, lam):
        """Mean of vartheta(t, a) under a ~ N(m, lam I) and its Jacobian in m.

        Shapes (..., d, d) and (..., d, d, p).
        """
        raise NotImplementedError

    def describe(self):
        return {"name": self.name}


class DriftControl:
    """C(t, a) = a and vartheta = 0, so C_theta = m and vartheta_theta = 0."""

    controls_drift = True
    controls_volatility = False

    def action_drift(self, t, a):
        return np.asarray(a, dtype=float)

    def action_diffusion(self, t, a):
        a = np.asarray(a, dtype=float)
        return np.zeros(a.shape[:-1] + (self.d, self.d))

    def gaussian_action_drift(self, t, m, lam):
        m = np.asarray(m, dtype=float)
        jac = np.broadcast_to(np.eye(self.d, self.p), m.shape[:-1] + (self.d, self.p))
        return m.copy(), jac

    def gaussian_action_diffusion(self, t, m, lam):
        m = np.asarray(m, dtype=float)
        shape = m.shape[:-1] + (self.d, self.d)
        return np.zeros(shape), np.zeros(shape + (self.p,))


class VolatilityControl:
    """One-dimensional sigma = a: C = 0, vartheta = a^2, vartheta_theta = m^2 + lam."""

    controls_drift = False
    controls_volatility = True

    def action_drift(self, t, a):
        return np.zeros_like(np.asarray(a, dtype=float))

    def action_diffusion(self, t, a):
        a = np.asarray(a, dtype=float)
        return (a * a)[..., None]

    def gaussian_action_drift(self, t, m, lam):
        m = np.asarray(m, dtype=float)
        return np.zeros_like(m), np.zeros(m.shape + (1,))

    def gaussian_action_diffusion(self, t, m, lam):
        m = np.asarray(m, dtype=float)
        return (m * m + lam)[..., None], (2.0 * m)[..., None, None]


def _apply_diffusion(sig, z):
    if sig.ndim == z.ndim:
        return sig * z
    return np.einsum("...ij,...j->...i", sig, z)


def euler_step(x, t, cloud, action, noise, model, dt):
    """Advance one particle by one Euler-Maruyama step.

    ``x`` (d,), ``action`` (p,), ``noise`` (d,) standard normals; ``cloud``
    (M, d) is the empirical measure the coefficients see.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    xb = np.asarray(x, dtype=float).reshape(1, 1, -1)
    cb = np.asarray(cloud, dtype=float).reshape(1, -1, xb.shape[-1])
    ab = np.asarray(action, dtype=float).reshape(1, 1, -1)
    zb = np.asarray(noise, dtype=float).reshape(1, 1, -1)
    out = _advance(model, t, xb, cb, ab, zb, dt)
    if not np.all(np.isfinite(out)):
        raise DivergenceError(f"non-finite state after Euler step at t={t}")
    return out[0, 0]


def _advance(model, t, x, cloud, a, z, dt):
    b = model.drift(t, x, cloud) + model.action_drift(t, a)
    sig = model.diffusion(t, x, cloud, a)
    return x + b * dt + _apply_diffusion(sig, z) * np.sqrt(dt)


@dataclass
class RolloutRecord:
    """Everything one forward pass over the grid produced.

    Shapes: states (n+1, N, M, d), actions (n, N, M, p), running_costs
    (n, N, M), terminal_costs (N, M), moments (n+1, N, L).
    """

    grid: TimeGrid
    lam: float
    states: np.ndarray
    actions: np.ndarray
    running_costs: np.ndarray
    terminal_costs: np.ndarray
    moments: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def batch(self):
        return self.states.shape[1]

    @property
    def particles(self):
        return self.states.shape[2]

    def cost_to_go(self):
        """``g + sum_{l >= k} f_l dt`` for k = 0..n-1, one backward sweep, (n, N, M)."""
        dt = self.grid.dt
        out = np.empty_like(self.running_costs)
        acc = self.terminal_costs.copy()
        for k in range(self.grid.steps - 1, -1, -1):
            acc = acc + self.running_costs[k] * dt
            out[k] = acc
        return out

    def realized_cost(self):
        """Per-particle total cost ``sum_k f_k dt + g``, (N, M)."""
        return self.cost_to_go()[0]


def rollout(policy, model, grid, initial, lam, rng=None, noise=None):
    """Simulate N clouds forward in time under the Gaussian policy.

    ``policy`` provides ``idx`` (a MultiIndexSet) and ``mean(t, x, moments)``
    returning (N, M, p). Actions are drawn as ``m + sqrt(lam) * z``. Noise is
    drawn from ``rng`` step by step (action noise, then state noise), or
    taken from ``noise = (action_noise (n, N, M, p), state_noise (n, N, M, d))``.
    """
    if lam < 0:
        raise ValueError("exploration variance must be non-negative")
    initial = np.asarray(initial, dtype=float)
    N, M, d = initial.shape
    if d != model.d:
        raise ValueError(f"cloud dimension {d} != model dimension {model.d}")
    n, dt, times = grid.steps, grid.dt, grid.times
    p = model.p
    if noise is None and rng is None:
        raise ValueError("need either rng or explicit noise")

    states = np.empty((n + 1, N, M, d))
    actions = np.empty((n, N, M, p))
    running = np.empty((n, N, M))
    moments = np.empty((n + 1, N, policy.idx.size))
    states[0] = initial
    sqrt_lam = np.sqrt(lam)
    for k in range(n):
        x = states[k]
        moments[k] = empirical_moments(x, policy.idx)
        m = policy.mean(times[k], x, moments[k])
        if noise is not None:
            za, zx = noise[0][k], noise[1][k]
        else:
            za = rng.standard_normal((N, M, p)) if lam > 0 else np.zeros((N, M, p))
            zx = rng.standard_normal((N, M, d))
        a = m + sqrt_lam * za
        actions[k] = a
        running[k] = model.running_cost(times[k], x, x, a)
        nxt = _advance(model, times[k], x, x, a, zx, dt)
        if not np.all(np.isfinite(nxt)):
            bad = np.argwhere(~np.isfinite(nxt))[0]
            raise DivergenceError(
                f"state blew up at step k={k + 1}, batch i={bad[0]}, particle j={bad[1]}"
            )
        states[k + 1] = nxt
    moments[n] = empirical_moments(states[n], policy.idx)
    terminal = model.terminal_cost(states[n], states[n])
    if not (np.all(np.isfinite(running)) and np.all(np.isfinite(terminal))):
        raise DivergenceError("non-finite cost observed during rollout")
    return RolloutRecord(grid, float(lam), states, actions, running, terminal, moments)


@dataclass
class GaussianCloudSampler:
    """Batches of Gaussian clouds with randomly drawn means and variances.

    For each of the N batch elements, coordinate i gets mean
    ``mean_scale[i] * U[0,1]`` and variance ``var_scale[i] * U[0,1]``
    (independent coordinates); then M particles are drawn.
    """

    d: int
    batch: int
    particles: int
    mean_scale: tuple = (0.0,)
    var_scale: tuple = (1.0,)

    def __post_init__(self):
        self.mean_scale = tuple(np.broadcast_to(np.asarray(self.mean_scale, float), (self.d,)))
        self.var_scale = tuple(np.broadcast_to(np.asarray(self.var_scale, float), (self.d,)))
        if self.particles < 2:
            raise ValueError("need at least two particles per cloud")

    def draw_laws(self, rng):
        u = rng.uniform(size=(self.batch, 2, self.d))
        means = u[:, 0] * np.asarray(self.mean_scale)
        variances = u[:, 1] * np.asarray(self.var_scale)
        return means, variances

    def sample(self, rng):
        means, variances = self.draw_laws(rng)
        z = rng.standard_normal((self.batch, self.particles, self.d))
        return means[:, None, :] + np.sqrt(variances)[:, None, :] * z

    def cloud(self, mean, variance, particles, rng):
        """One (particles, d) cloud with fixed per-coordinate mean and variance."""
        mean = np.broadcast_to(np.asarray(mean, float), (self.d,))
        variance = np.broadcast_to(np.asarray(variance, float), (self.d,))
        return mean + np.sqrt(variance) * rng.standard_normal((particles, self.d))

    def describe(self):
        return {
            "family": "gaussian",
            "mean_scale": list(self.mean_scale),
            "var_scale": list(self.var_scale),
        }


ROLLOUT_SCHEMA = "mfcrl.rollout/1"


def write_rollout_csv(record, path):
    """One row per (k, i, j); the last time step carries the terminal cost.

    Columns: k, t, batch, particle, x0..x{d-1}, a0..a{p-1}, running_cost,
    terminal_cost. Fields that do not apply at a row are left empty.
    """
    n1, N, M, d = record.states.shape
    p = record.actions.shape[-1]
    times = record.grid.times
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={ROLLOUT_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(
            ["k", "t", "batch", "particle"]
            + [f"x{i}" for i in range(d)]
            + [f"a{i}" for i in range(p)]
            + ["running_cost", "terminal_cost"]
        )
        for k in range(n1):
            last = k == n1 - 1
            for i in range(N):
                for j in range(M):
                    x = [repr(float(v)) for v in record.states[k, i, j]]
                    if last:
                        a = [""] * p
                        tail = ["", repr(float(record.terminal_costs[i, j]))]
                    else:
                        a = [repr(float(v)) for v in record.actions[k, i, j]]
                        tail = [repr(float(record.running_costs[k, i, j])), ""]
                    w.writerow([k, repr(float(times[k])), i, j, *x, *a, *tail])
