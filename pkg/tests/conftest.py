import numpy as np
import pytest

from mfcrl import _kernels
from mfcrl._kernels import _py

BACKENDS = ["numpy"] + (["cython"] if _kernels.BACKEND == "cython" else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    if request.param == "numpy":
        monkeypatch.setattr(_kernels, "batched_moments", _py.batched_moments)
        monkeypatch.setattr(_kernels, "lions_weights", _py.lions_weights)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


DESK_SEEDS = (0, 1, 2)
EVAL_PARTICLES = 10_000
EVAL_SEED = 777


class DeskRuns:
    """Desk-scale training runs driven through the CLI, trained on first use.

    Set MFCRL_ACCEPTANCE_RUNS to a directory to keep runs between sessions;
    an existing finished run with the same configuration is reused as is
    (the trainer resumes from its checkpoint and has nothing left to do).
    """

    def __init__(self, root):
        self.root = root

    def run_dir(self, benchmark, seed):
        return self.root / f"{benchmark}-s{seed}"

    def train(self, benchmark, seed):
        from mfcrl.cli import main

        out = self.run_dir(benchmark, seed)
        code = main(["train", "--benchmark", benchmark, "--scale", "desk", "--seed", str(seed), "--output", str(out)])
        assert code == 0, f"training {benchmark} seed {seed} exited with {code}"
        return out

    def table(self, benchmark, seed):
        from mfcrl.checkpoint import load_checkpoint
        from mfcrl.reporting import evaluate_table
        from mfcrl.benchmarks import get_benchmark

        out = self.train(benchmark, seed)
        st, tc, _, _ = load_checkpoint(out / "checkpoint.json")
        bench = get_benchmark(benchmark)
        return evaluate_table(
            st.actor, st.critic, bench.model(), bench.eval_grid, EVAL_PARTICLES, tc.steps, EVAL_SEED, benchmark
        )


@pytest.fixture(scope="session")
def desk_runs(tmp_path_factory):
    import os
    from pathlib import Path

    root = os.environ.get("MFCRL_ACCEPTANCE_RUNS")
    path = Path(root) if root else tmp_path_factory.mktemp("desk_runs")
    path.mkdir(parents=True, exist_ok=True)
    return DeskRuns(path)
