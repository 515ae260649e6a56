"""JSON checkpoint encoding with hex floats, so round trips are bit-exact."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .mlp import Mlp, MlpSpec
from .optim import AdamState

FORMAT_VERSION = 1


def encode_array(a) -> dict:
    a = np.asarray(a, dtype=np.float64)
    return {"shape": list(a.shape), "hex": [float(x).hex() for x in a.ravel()]}


def decode_array(d: dict) -> np.ndarray:
    flat = np.array([float.fromhex(h) for h in d["hex"]], dtype=np.float64)
    return flat.reshape(d["shape"])


def encode_mlp(net: Mlp) -> dict:
    return {"spec": net.spec.to_dict(), "params": {k: encode_array(v) for k, v in net.params.items()}}


def decode_mlp(d: dict) -> Mlp:
    return Mlp(MlpSpec.from_dict(d["spec"]), {k: decode_array(v) for k, v in d["params"].items()})


def encode_adam(state: AdamState) -> dict:
    return {
        "learning_rate": float(state.learning_rate).hex(),
        "beta1": float(state.beta1).hex(),
        "beta2": float(state.beta2).hex(),
        "epsilon_stab": float(state.epsilon_stab).hex(),
        "step_count": state.step_count,
        "first_moment": {k: encode_array(v) for k, v in state.first_moment.items()},
        "second_moment": {k: encode_array(v) for k, v in state.second_moment.items()},
    }


def decode_adam(d: dict) -> AdamState:
    return AdamState(
        float.fromhex(d["learning_rate"]), float.fromhex(d["beta1"]), float.fromhex(d["beta2"]),
        float.fromhex(d["epsilon_stab"]), d["step_count"],
        {k: decode_array(v) for k, v in d["first_moment"].items()},
        {k: decode_array(v) for k, v in d["second_moment"].items()},
    )


def save_json(obj: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps({"format_version": FORMAT_VERSION, **obj}))
    tmp.replace(path)


def load_json(path) -> dict:
    d = json.loads(Path(path).read_text())
    if d.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint format {d.get('format_version')!r}")
    return d
