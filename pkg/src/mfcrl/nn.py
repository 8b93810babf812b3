"""Small tanh feedforward networks with hand-written reverse mode, and Adam.

Parameters live in one flat float64 vector. Layer ``k`` occupies a
contiguous block: its weight matrix (fan_out x fan_in, row-major) followed
by its bias. Every forward/backward works on a batch of rows.
"""

from dataclasses import dataclass, field

import numpy as np


class DivergenceError(FloatingPointError):
    """Raised when a state, loss or gradient stops being finite."""


class Mlp:
    """Affine-tanh chain with an affine output layer.

    >>> net = Mlp(3, [20, 20, 20], 1)
    >>> net.num_params
    941
    """

    block_rows = 2048

    def __init__(self, n_in, hidden, n_out, params=None, rng=None):
        self.n_in = int(n_in)
        self.hidden = [int(h) for h in hidden]
        self.n_out = int(n_out)
        widths = [self.n_in, *self.hidden, self.n_out]
        self._shapes = list(zip(widths[1:], widths[:-1]))
        self._slices = []
        offset = 0
        for fan_out, fan_in in self._shapes:
            w = slice(offset, offset + fan_out * fan_in)
            offset = w.stop
            b = slice(offset, offset + fan_out)
            offset = b.stop
            self._slices.append((w, b))
        self.num_params = offset
        if params is None:
            params = self.init_params(rng if rng is not None else np.random.default_rng(0))
        self.params = np.array(params, dtype=float)
        if self.params.shape != (self.num_params,):
            raise ValueError(f"expected {self.num_params} parameters, got {self.params.shape}")

    @property
    def layout(self):
        return {"n_in": self.n_in, "hidden": list(self.hidden), "n_out": self.n_out}

    def init_params(self, rng):
        # Glorot-uniform weights, zero biases
        theta = np.zeros(self.num_params)
        for (fan_out, fan_in), (w, _) in zip(self._shapes, self._slices):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            theta[w] = rng.uniform(-bound, bound, size=fan_out * fan_in)
        return theta

    def layers(self, params=None):
        theta = self.params if params is None else params
        return [
            (theta[w].reshape(shape), theta[b])
            for shape, (w, b) in zip(self._shapes, self._slices)
        ]

    def forward(self, x, params=None, keep=False):
        """Evaluate the network on rows of ``x``.

        A 1-D ``x`` is treated as a single row and a 1-D output returned. With
        ``keep=True`` the layer activations are returned too, for ``backward``.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.shape[-1] != self.n_in:
            raise ValueError(f"input width {h.shape[-1]} != {self.n_in}")
        acts = [h]
        layers = self.layers(params)
        for W, b in layers[:-1]:
            h = h @ W.T
            h += b
            np.tanh(h, out=h)
            acts.append(h)
        W, b = layers[-1]
        y = h @ W.T
        y += b
        if single:
            y = y[0]
        return (y, acts) if keep else y

    def backward(self, acts, cotangent, params=None):
        """Reverse-mode pass for ``sum_rows <cotangent, forward(x)>``.

        ``acts`` comes from ``forward(..., keep=True)``. Returns the
        parameter gradient summed over rows (length ``num_params``) and the
        per-row input gradient.
        """
        cot = np.asarray(cotangent, dtype=float)
        single = cot.ndim == 1
        if single:
            cot = cot[None, :]
        if cot.shape[-1] != self.n_out:
            raise ValueError(f"cotangent width {cot.shape[-1]} != {self.n_out}")
        layers = self.layers(params)
        rows = cot.shape[0]
        grad = np.zeros(self.num_params)
        gx = np.empty((rows, self.n_in))
        # row blocks keep the working set in cache; the sums are associative
        # up to rounding
        for start in range(0, rows, self.block_rows):
            stop = min(rows, start + self.block_rows)
            delta = cot[start:stop]
            for k in range(len(layers) - 1, -1, -1):
                W, _ = layers[k]
                w_sl, b_sl = self._slices[k]
                a = acts[k][start:stop]
                grad[w_sl] += (delta.T @ a).ravel()
                grad[b_sl] += delta.sum(axis=0)
                delta = delta @ W
                if k > 0:
                    # tanh' = 1 - a^2, applied in place
                    delta -= delta * a * a
            gx[start:stop] = delta
        return grad, (gx[0] if single else gx)

    def value_and_grad(self, x, cotangent, params=None):
        y, acts = self.forward(x, params, keep=True)
        g, gx = self.backward(acts, cotangent, params)
        return y, g, gx

    def copy(self):
        return Mlp(self.n_in, self.hidden, self.n_out, params=self.params.copy())


@dataclass
class AdamState:
    lr: float
    size: int
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.m is None:
            self.m = np.zeros(self.size)
        if self.v is None:
            self.v = np.zeros(self.size)


def adam_step(state, params, grad):
    """Bias-corrected Adam update; returns new parameters and mutates ``state``.

    A non-finite gradient leaves ``state`` untouched and raises
    ``DivergenceError``.
    """
    grad = np.asarray(grad, dtype=float)
    if grad.shape != params.shape:
        raise ValueError(f"gradient shape {grad.shape} != params shape {params.shape}")
    if not np.all(np.isfinite(grad)):
        raise DivergenceError("non-finite gradient passed to Adam")
    state.step_count += 1
    t = state.step_count
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1**t)
    v_hat = state.v / (1.0 - state.beta2**t)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def finite_difference_check(net, x, step=1e-5, cotangent=None):
    """Worst relative error of reverse-mode gradients against central differences.

    Covers the parameter gradient and the input gradient of
    ``<cotangent, net(x)>`` (default cotangent: ones). The error of each
    coordinate is ``|analytic - numeric| / (|analytic| + step)``.
    """
    if not 1e-7 <= step <= 1e-3:
        raise ValueError("step must lie in [1e-7, 1e-3]")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    cot = np.ones((x.shape[0], net.n_out)) if cotangent is None else np.atleast_2d(cotangent)

    def objective(params, inputs):
        return float(np.sum(cot * net.forward(inputs, params)))

    _, g_theta, g_x = net.value_and_grad(x, cot)
    theta = net.params
    num_theta = np.empty_like(theta)
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = step
        num_theta[k] = (objective(theta + e, x) - objective(theta - e, x)) / (2 * step)
    num_x = np.empty_like(x)
    for idx in np.ndindex(*x.shape):
        e = np.zeros_like(x)
        e[idx] = step
        num_x[idx] = (objective(theta, x + e) - objective(theta, x - e)) / (2 * step)
    err_theta = np.abs(g_theta - num_theta) / (np.abs(g_theta) + step)
    err_x = np.abs(g_x - num_x) / (np.abs(g_x) + step)
    return float(max(err_theta.max(), err_x.max()))
