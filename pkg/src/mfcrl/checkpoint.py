"""Checkpoint files: the full training state as deterministic JSON.

Arrays are stored as base64 of their little-endian float64 bytes, so a
save/load round trip is bit-exact and two identical states always produce
byte-identical files (keys are sorted, no timestamps).
"""

import base64
import json
import os

import numpy as np

from .actor_critic import TrainerConfig, TrainState
from .nn import AdamState, Mlp

CHECKPOINT_SCHEMA = "mfcrl.checkpoint/1"


class CheckpointError(ValueError):
    pass


def encode_array(a):
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "f8le": base64.b64encode(a.tobytes()).decode("ascii")}


def decode_array(blob):
    raw = base64.b64decode(blob["f8le"])
    return np.frombuffer(raw, dtype="<f8").reshape(blob["shape"]).astype(float)


def _net_blob(net):
    return {"layout": net.layout, "params": encode_array(net.params)}


def _net_from(blob):
    lay = blob["layout"]
    return Mlp(lay["n_in"], lay["hidden"], lay["n_out"], params=decode_array(blob["params"]))


def _adam_blob(st):
    return {
        "lr": st.lr,
        "beta1": st.beta1,
        "beta2": st.beta2,
        "eps": st.eps,
        "step_count": st.step_count,
        "m": encode_array(st.m),
        "v": encode_array(st.v),
    }


def _adam_from(blob):
    m, v = decode_array(blob["m"]), decode_array(blob["v"])
    return AdamState(
        blob["lr"], m.size, blob["beta1"], blob["beta2"], blob["eps"], blob["step_count"], m, v
    )


def checkpoint_dict(state, config, benchmark=None, extra=None):
    return {
        "schema": CHECKPOINT_SCHEMA,
        "epoch": state.epoch,
        "config": config.to_dict(),
        "benchmark": benchmark or {},
        "actor": _net_blob(state.actor),
        "critic": _net_blob(state.critic),
        "actor_opt": _adam_blob(state.actor_opt),
        "critic_opt": _adam_blob(state.critic_opt),
        "extra": extra or {},
    }


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def write_atomic(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def save_checkpoint(path, state, config, benchmark=None, extra=None):
    write_atomic(path, dumps(checkpoint_dict(state, config, benchmark, extra)))


def load_checkpoint(path):
    """Returns (TrainState, TrainerConfig, benchmark dict, extra dict)."""
    try:
        with open(path) as fh:
            blob = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    if blob.get("schema") != CHECKPOINT_SCHEMA:
        raise CheckpointError(f"{path}: unsupported schema {blob.get('schema')!r}")
    state = TrainState(
        _net_from(blob["actor"]),
        _net_from(blob["critic"]),
        _adam_from(blob["actor_opt"]),
        _adam_from(blob["critic_opt"]),
        epoch=int(blob["epoch"]),
    )
    config = TrainerConfig(**blob["config"])
    return state, config, blob.get("benchmark", {}), blob.get("extra", {})
