"""Evaluation tables, trajectory dumps, metrics logs and run manifests.

Every text artifact starts with a ``# schema=...`` line followed by a CSV
header row, or carries a ``schema`` field when it is JSON. Floats are
written with ``repr`` so files round-trip exactly.
"""

import csv
import io
import platform
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .actor_critic import GaussianPolicy, MomentNetwork, evaluate_converged
from .checkpoint import dumps, write_atomic
from .environment import TimeGrid, rollout
from .moments import build_multi_index_set, empirical_moments

TABLE_SCHEMA = "mfcrl.table/1"
TRAJECTORY_SCHEMA = "mfcrl.trajectories/1"
METRICS_SCHEMA = "mfcrl.metrics/1"
MANIFEST_SCHEMA = "mfcrl.manifest/1"

METRIC_COLUMNS = [
    "epoch",
    "lam",
    "critic_loss",
    "critic_grad_norm",
    "actor_grad_norm",
    "mean_cost",
    "wall_time",
]


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _csv_text(schema, header, rows):
    buf = io.StringIO()
    buf.write(f"# schema={schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def read_csv(path):
    """(schema, header, rows as lists of strings)."""
    with open(path) as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema="):
            raise ValueError(f"{path}: missing schema line")
        reader = csv.reader(fh)
        header = next(reader)
        return first.split("=", 1)[1], header, list(reader)


def relative_error(calc, anal):
    """(Calc - Anal) / Anal: positive when the critic overestimates."""
    return (calc - anal) / anal


# ---------------------------------------------------------------------------
# evaluation table


@dataclass
class EvaluationRow:
    mean: float
    variance: float
    anal: float
    calc: float
    mse: float
    rel_error: float
    sim_cost: float = float("nan")
    gap: float = float("nan")

    @property
    def rel_gap(self):
        return self.gap / abs(self.sim_cost) if self.sim_cost else 0.0


@dataclass
class EvaluationTable:
    benchmark: str
    particles: int
    rows: list = field(default_factory=list)

    COLUMNS = ["mean", "variance", "Anal", "Calc", "MSE", "RelError", "SimCost", "Gap", "RelGap"]

    def row_for(self, variance, mean=0.0):
        for r in self.rows:
            if np.isclose(r.variance, variance) and np.isclose(r.mean, mean):
                return r
        raise KeyError((mean, variance))

    def aggregate_gap(self):
        """|sum of gaps| / |sum of simulated costs| over all rows."""
        cost = sum(r.sim_cost for r in self.rows)
        gap = sum(r.gap for r in self.rows)
        return abs(gap) / abs(cost) if cost else 0.0

    def to_csv(self):
        rows = [
            [_fmt(r.mean), _fmt(r.variance), _fmt(r.anal), _fmt(r.calc), _fmt(r.mse),
             _fmt(r.rel_error), _fmt(r.sim_cost), _fmt(r.gap), _fmt(r.rel_gap)]
            for r in self.rows
        ]
        return _csv_text(TABLE_SCHEMA, self.COLUMNS, rows)

    def write(self, path):
        write_atomic(path, self.to_csv())

    def pretty(self):
        lines = [f"{self.benchmark}: M_eval={self.particles}"]
        lines.append(f"{'mean':>6} {'var':>6} {'Anal':>9} {'Calc':>9} {'MSE':>10} {'RelErr':>8} {'RelGap':>8}")
        for r in self.rows:
            lines.append(
                f"{r.mean:6.3f} {r.variance:6.3f} {r.anal:9.4f} {r.calc:9.4f} "
                f"{r.mse:10.3e} {100 * r.rel_error:7.2f}% {100 * r.rel_gap:7.2f}%"
            )
        return "\n".join(lines)


def evaluate_table(actor, critic, model, grid, particles, steps, seed, benchmark="", with_gap=True):
    """Anal/Calc/MSE/RelError per (mean, variance) grid point.

    ``actor``/``critic`` are Mlp networks of a checkpoint (or anything with
    the same ``forward``). Anal is the model's closed-form Gaussian
    expectation; Calc averages the critic at t=0 over one sampled cloud;
    MSE compares critic and oracle particle by particle on that cloud. With
    ``with_gap`` the mean policy is simulated from the same cloud and its
    realized cost compared with Calc.
    """
    idx = build_multi_index_set(model.d, _order_of(critic, model.d))
    J = MomentNetwork(critic, idx, model.horizon)
    pi = MomentNetwork(actor, idx, model.horizon)
    tgrid = TimeGrid(model.horizon, steps)
    table = EvaluationTable(benchmark or getattr(model, "name", "model"), int(particles))
    for row_id, (mean, var) in enumerate(grid):
        rng = np.random.default_rng(np.random.SeedSequence([seed, row_id]))
        mu = np.broadcast_to(np.asarray(mean, float), (model.d,))
        sd = np.sqrt(np.broadcast_to(np.asarray(var, float), (model.d,)))
        cloud = (mu + sd * rng.standard_normal((particles, model.d)))[None]
        mom = empirical_moments(cloud, idx)
        values = J(0.0, cloud, mom)[0, :, 0]
        oracle = np.asarray(model.value(0.0, cloud, cloud))[0]
        anal = model.expected_value(0.0, mean, var)
        calc = float(values.mean())
        row = EvaluationRow(
            float(np.mean(mean)), float(np.mean(var)), anal, calc,
            float(np.mean((values - oracle) ** 2)), relative_error(calc, anal),
        )
        if with_gap:
            out = evaluate_converged(pi, J, model, cloud, tgrid, rng)
            row.sim_cost = float(out["cost"][0])
            row.gap = float(out["gap"][0])
        table.rows.append(row)
    return table


def _order_of(net, d):
    # recover the moment order from the input width 1 + d + L_d
    L = net.n_in - 1 - d
    order = 1
    while build_multi_index_set(d, order).size < L:
        order += 1
    if build_multi_index_set(d, order).size != L:
        raise ValueError(f"input width {net.n_in} does not match any moment order in d={d}")
    return order


# ---------------------------------------------------------------------------
# trajectories


def trajectory_dump(actor, model, steps, mean, variance, particles, count, seed):
    """Learned-policy paths with the analytic control evaluated along them.

    One cloud of ``particles`` is simulated under the mean policy (lam = 0);
    the first ``count`` particles are reported at every grid time, so both
    control columns see the same state path and the same noise. No control
    acts at the horizon, so the control columns of the k=n rows are empty.
    Returns (header, rows, record).
    """
    if count > particles:
        raise ValueError("count cannot exceed the number of simulated particles")
    idx = build_multi_index_set(model.d, _order_of(actor, model.d))
    policy = GaussianPolicy(actor, idx, model.horizon, 0.0)
    grid = TimeGrid(model.horizon, steps)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x7A]))
    mu = np.broadcast_to(np.asarray(mean, float), (model.d,))
    sd = np.sqrt(np.broadcast_to(np.asarray(variance, float), (model.d,)))
    cloud = (mu + sd * rng.standard_normal((particles, model.d)))[None]
    record = rollout(policy, model, grid, cloud, 0.0, rng)
    has_oracle = hasattr(model, "optimal_control")
    d, p = model.d, model.p
    header = (
        ["path", "k", "t"]
        + [f"x{i}" for i in range(d)]
        + [f"alpha{i}" for i in range(p)]
        + [f"m{i}" for i in range(p)]
        + ["analytic"]
    )
    rows = []
    for k, t in enumerate(grid.times):
        x = record.states[k]
        acting = k < grid.steps
        learned = policy.mean(t, x, record.moments[k])[0]
        alpha = model.optimal_control(t, x, x)[0] if has_oracle else None
        for j in range(count):
            a_cols = [_fmt(v) for v in alpha[j]] if has_oracle and acting else [""] * p
            m_cols = [_fmt(v) for v in learned[j]] if acting else [""] * p
            rows.append(
                [str(j), str(k), _fmt(t)]
                + [_fmt(v) for v in x[0, j]]
                + a_cols
                + m_cols
                + ["1" if has_oracle else "0"]
            )
    return header, rows, record


def write_trajectories(path, header, rows):
    write_atomic(path, _csv_text(TRAJECTORY_SCHEMA, header, rows))


def control_gap(header, rows):
    """Mean |alpha* - m| over all rows with a control and all control coordinates."""
    a_cols = [i for i, h in enumerate(header) if h.startswith("alpha")]
    m_cols = [i for i, h in enumerate(header) if h.startswith("m") and h[1:].isdigit()]
    rows = [r for r in rows if r[a_cols[0]] != ""]
    a = np.array([[float(r[i]) for i in a_cols] for r in rows])
    m = np.array([[float(r[i]) for i in m_cols] for r in rows])
    return float(np.mean(np.abs(a - m)))


# ---------------------------------------------------------------------------
# metrics log and manifest


class MetricsLog:
    """Append-only CSV of per-epoch metrics, truncated on resume.

    ``wall_time`` is the only column that is not a deterministic function of
    the run manifest.
    """

    def __init__(self, path):
        self.path = path

    def start(self, first_epoch):
        """Keep only records with epoch < first_epoch (all of them on a fresh run)."""
        kept = []
        if first_epoch > 0:
            try:
                _, _, old = read_csv(self.path)
                kept = [r for r in old if int(r[0]) < first_epoch]
            except (OSError, ValueError, StopIteration):
                kept = []
        write_atomic(self.path, _csv_text(METRICS_SCHEMA, METRIC_COLUMNS, kept))
        self._fh = open(self.path, "a", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")

    def append(self, metrics):
        self._writer.writerow([_fmt(metrics[c]) for c in METRIC_COLUMNS])

    def flush(self):
        self._fh.flush()

    def close(self):
        self._fh.close()


def read_metrics(path):
    _, header, rows = read_csv(path)
    return [{h: float(v) for h, v in zip(header, r)} for r in rows]


def run_manifest(resolved, command):
    return {
        "schema": MANIFEST_SCHEMA,
        "command": command,
        "config": resolved,
        "software": {
            "mfcrl": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
            "kernel_backend": BACKEND,
        },
    }


def write_manifest(path, resolved, command):
    write_atomic(path, dumps(run_manifest(resolved, command)))
