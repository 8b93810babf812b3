import json

import numpy as np
import pytest

from mfcrl.actor_critic import TrainerConfig, init_state
from mfcrl.benchmarks import SystemicRiskParams, get_benchmark, systemic_K, systemic_R
from mfcrl.checkpoint import CHECKPOINT_SCHEMA, CheckpointError, load_checkpoint, save_checkpoint
from mfcrl.cli import main
from mfcrl.config import ConfigError, RunConfig
from mfcrl.reporting import (
    METRICS_SCHEMA,
    TABLE_SCHEMA,
    TRAJECTORY_SCHEMA,
    evaluate_table,
    read_csv,
    read_metrics,
    relative_error,
    control_gap,
    trajectory_dump,
)

SMALL = {"batch": 2, "particles": 30, "steps": 4, "hidden": [6, 6]}


def write_config(tmp_path, name="cfg.json", **over):
    blob = {"benchmark": "systemic", "seed": 1, "trainer": dict(SMALL, epochs=5)}
    blob.update(over)
    path = tmp_path / name
    path.write_text(json.dumps(blob))
    return str(path)


class OracleNet:
    """Stands in for a trained network: evaluates the systemic closed forms on feature rows."""

    def __init__(self, kind, params=SystemicRiskParams()):
        self.kind, self.params = kind, params
        self.n_in, self.n_out = 4, 1  # (t/T, x, E x, E x^2)

    def forward(self, rows, params=None, keep=False):
        t = rows[:, 0] * self.params.horizon
        x, mean = rows[:, 1], rows[:, 2]
        K = systemic_K(t, self.params)
        if self.kind == "value":
            out = K * (x - mean) ** 2 + systemic_R(t, self.params)
        else:
            out = (2 * K + self.params.q) * (mean - x)
        return out[:, None]


# ---------------------------------------------------------------------------
# config


def test_config_resolution(tmp_path):
    cfg = RunConfig.load(write_config(tmp_path, params={"sigma": 1.5}))
    tc = cfg.trainer_config()
    assert (tc.batch, tc.particles, tc.epochs, tc.seed) == (2, 30, 5, 1)
    assert tc.actor_lr == 5e-4 and tc.critic_lr == 1e-2
    resolved = cfg.resolved()
    assert resolved["model"]["sigma"] == 1.5
    assert resolved["initial"]["var_scale"] == [1.0]
    json.dumps(resolved)


@pytest.mark.parametrize(
    "blob",
    [
        {"benchmark": "nope"},
        {"benchmark": "systemic", "colour": 1},
        {"benchmark": "systemic", "trainer": {"speed": 3}},
        {"benchmark": "systemic", "trainer": {"seed": 3}},
        {"benchmark": "systemic", "params": {"q": 5.0}},
        {"benchmark": "systemic", "initial": {"var_scale": [1.0, 2.0]}},
        {"benchmark": "systemic", "trainer": {"particles": 1}},
        {"seed": 0},
    ],
)
def test_config_errors(blob):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(blob)


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        RunConfig.load(str(bad))
    with pytest.raises(ConfigError):
        RunConfig.load(str(tmp_path / "missing.json"))


# ---------------------------------------------------------------------------
# checkpoint


def test_checkpoint_roundtrip_bit_exact(tmp_path):
    cfg = TrainerConfig(hidden=(5,), seed=2)
    st = init_state(cfg, get_benchmark("systemic").model())
    st.actor.params += np.pi * 1e-17
    st.actor_opt.m += 1 / 3
    st.epoch = 17
    path = tmp_path / "c.json"
    save_checkpoint(path, st, cfg, {"key": "systemic"})
    st2, cfg2, bench, _ = load_checkpoint(path)
    np.testing.assert_array_equal(st2.actor.params, st.actor.params)
    np.testing.assert_array_equal(st2.actor_opt.m, st.actor_opt.m)
    assert st2.epoch == 17 and cfg2 == cfg and bench == {"key": "systemic"}
    path2 = tmp_path / "c2.json"
    save_checkpoint(path2, st2, cfg2, bench)
    assert path.read_bytes() == path2.read_bytes()
    assert json.loads(path.read_text())["schema"] == CHECKPOINT_SCHEMA


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"schema": "other"}')
    with pytest.raises(CheckpointError):
        load_checkpoint(p)


# ---------------------------------------------------------------------------
# train command


def test_train_zero_epochs_writes_initial_checkpoint(tmp_path):
    out = tmp_path / "run"
    assert main(["train", "--config", write_config(tmp_path), "--output", str(out), "--epochs", "0"]) == 0
    st, tc, _, _ = load_checkpoint(out / "checkpoint.json")
    fresh = init_state(tc, get_benchmark("systemic").model())
    assert st.epoch == 0
    np.testing.assert_array_equal(st.actor.params, fresh.actor.params)
    assert read_metrics(out / "metrics.csv") == []
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["schema"].startswith("mfcrl.manifest/")
    assert manifest["config"]["trainer"]["epochs"] == 0


def test_train_metrics_count_and_schema(tmp_path):
    out = tmp_path / "run"
    assert main(["train", "--config", write_config(tmp_path), "--output", str(out)]) == 0
    schema, header, rows = read_csv(out / "metrics.csv")
    assert schema == METRICS_SCHEMA
    assert header[0] == "epoch" and "wall_time" in header
    assert [int(r[0]) for r in rows] == list(range(5))


def _strip_wall_time(path):
    _, header, rows = read_csv(path)
    w = header.index("wall_time")
    return [r[:w] + r[w + 1:] for r in rows]


def test_runs_are_byte_identical_and_resumable(tmp_path):
    cfg = write_config(tmp_path)
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["train", "--config", cfg, "--output", str(a)]) == 0
    assert main(["train", "--config", cfg, "--output", str(b)]) == 0
    assert main(["train", "--config", cfg, "--output", str(c), "--stop-at", "2"]) == 0
    assert load_checkpoint(c / "checkpoint.json")[0].epoch == 2
    assert main(["train", "--config", cfg, "--output", str(c)]) == 0
    for other in (b, c):
        assert (a / "checkpoint.json").read_bytes() == (other / "checkpoint.json").read_bytes()
        assert _strip_wall_time(a / "metrics.csv") == _strip_wall_time(other / "metrics.csv")
    ta, tb = tmp_path / "ta.csv", tmp_path / "tb.csv"
    for run, table in ((a, ta), (b, tb)):
        assert main(["evaluate", "--checkpoint", str(run / "checkpoint.json"), "--particles", "500",
                     "--output", str(table)]) == 0
    assert ta.read_bytes() == tb.read_bytes()


def test_resume_with_other_config_is_config_error(tmp_path):
    out = tmp_path / "run"
    assert main(["train", "--config", write_config(tmp_path), "--output", str(out), "--stop-at", "1"]) == 0
    assert main(["train", "--config", write_config(tmp_path), "--output", str(out), "--seed", "9"]) == 2
    assert main(["train", "--config", write_config(tmp_path), "--output", str(out), "--seed", "9", "--fresh"]) == 0


def test_exit_codes(tmp_path, capsys):
    assert main(["train", "--benchmark", "nope", "--output", str(tmp_path / "x")]) == 2
    assert main(["train", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["train"]) == 2
    assert main(["bogus-command"]) == 2
    assert main(["evaluate", "--checkpoint", str(tmp_path / "missing.json")]) == 2


def test_divergence_exit_code_and_crash_checkpoint(tmp_path):
    out = tmp_path / "run"
    cfg = write_config(tmp_path, params={"kappa": 1e100})
    assert main(["train", "--config", cfg, "--output", str(out)]) == 3
    st, _, _, extra = load_checkpoint(out / "crash_checkpoint.json")
    assert extra["diverged_at_epoch"] == 0 and st.epoch == 0
    assert "step" in extra["error"] or "non-finite" in extra["error"]


# ---------------------------------------------------------------------------
# evaluate / trajectories


def test_table_with_oracle_critic():
    model = get_benchmark("systemic").model()
    grid = [(0.0, 0.0), (0.0, 0.5)]
    table = evaluate_table(OracleNet("control"), OracleNet("value"), model, grid, 4000, 20, seed=0)
    for row in table.rows:
        assert row.mse == pytest.approx(0.0, abs=1e-24)
    assert table.rows[0].anal == pytest.approx(0.3870, abs=5e-5)
    assert table.rows[0].rel_error == pytest.approx(0.0, abs=1e-14)
    assert abs(table.rows[1].rel_error) < 0.02  # sampling error of one 4000-particle cloud


def test_anal_column_ignores_checkpoint(tmp_path):
    model = get_benchmark("systemic").model()
    grid = [(0.0, v) for v in (0.1, 0.5, 0.9)]
    tc = TrainerConfig(hidden=(4,))
    s1 = init_state(tc, model)
    s2 = init_state(TrainerConfig(hidden=(4,), seed=5), model)
    t1 = evaluate_table(s1.actor, s1.critic, model, grid, 200, 5, 0, with_gap=False)
    t2 = evaluate_table(s2.actor, s2.critic, model, grid, 200, 5, 0, with_gap=False)
    assert [r.anal for r in t1.rows] == [r.anal for r in t2.rows]
    assert [r.calc for r in t1.rows] != [r.calc for r in t2.rows]


def test_relative_error_sign():
    assert relative_error(0.3958, 0.3870) == pytest.approx(0.0227, abs=1e-4)


def test_table_csv(tmp_path):
    model = get_benchmark("systemic").model()
    st = init_state(TrainerConfig(hidden=(4,)), model)
    table = evaluate_table(st.actor, st.critic, model, [(0.0, 0.2)], 100, 4, 0)
    table.write(tmp_path / "t.csv")
    schema, header, rows = read_csv(tmp_path / "t.csv")
    assert schema == TABLE_SCHEMA
    assert header[:6] == ["mean", "variance", "Anal", "Calc", "MSE", "RelError"]
    assert float(rows[0][3]) == table.rows[0].calc


def test_trajectories_with_oracle_actor():
    model = get_benchmark("systemic").model()
    header, rows, rec = trajectory_dump(OracleNet("control"), model, 10, 0.0, 0.5, 200, 4, seed=0)
    assert len(rows) == 4 * 11
    acting = [r for r in rows if r[1] != "10"]
    assert all(r[header.index("alpha0")] == r[header.index("m0")] == "" for r in rows if r[1] == "10")
    a = np.array([float(r[header.index("alpha0")]) for r in acting])
    m = np.array([float(r[header.index("m0")]) for r in acting])
    np.testing.assert_allclose(a, m, atol=1e-12)
    assert control_gap(header, rows) < 1e-12
    assert rec.states.shape == (11, 1, 200, 1)


def test_trajectories_cli(tmp_path):
    out = tmp_path / "run"
    assert main(["train", "--config", write_config(tmp_path), "--output", str(out), "--epochs", "1"]) == 0
    traj, roll = tmp_path / "traj.csv", tmp_path / "roll.csv"
    assert main(["trajectories", "--checkpoint", str(out / "checkpoint.json"), "--count", "3",
                 "--particles", "50", "--output", str(traj), "--rollout-csv", str(roll)]) == 0
    schema, header, rows = read_csv(traj)
    assert schema == TRAJECTORY_SCHEMA and len(rows) == 3 * 5
    assert roll.read_text().startswith("# schema=mfcrl.rollout/")


def test_list_and_check(capsys):
    assert main(["list-benchmarks"]) == 0
    out = capsys.readouterr().out
    assert "systemic" in out and "multid_lq2" in out
    assert main(["list-benchmarks", "--json"]) == 0
    blob = json.loads(capsys.readouterr().out)
    assert blob["systemic"]["desk"]["particles"] == 1000
    assert main(["check", "--quick"]) == 0
    assert "FAIL" not in capsys.readouterr().out
