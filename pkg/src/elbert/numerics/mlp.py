"""Multilayer perceptrons on top of the autodiff engine."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .tensor import ShapeError, Tensor

ACTIVATIONS = ("tanh", "relu", "identity")


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int
    activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if not self.hidden_dims:
            raise ValueError("MlpSpec needs at least one hidden layer")
        if min((self.input_dim, self.output_dim) + self.hidden_dims) < 1:
            raise ValueError(f"all layer widths must be >= 1, got {self}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        dims = (self.input_dim,) + self.hidden_dims + (self.output_dim,)
        return list(zip(dims[:-1], dims[1:]))

    @property
    def num_layers(self) -> int:
        return len(self.hidden_dims) + 1

    def to_dict(self) -> dict:
        return {"input_dim": self.input_dim, "hidden_dims": list(self.hidden_dims),
                "output_dim": self.output_dim, "activation": self.activation}

    @classmethod
    def from_dict(cls, d: dict) -> "MlpSpec":
        return cls(d["input_dim"], tuple(d["hidden_dims"]), d["output_dim"], d.get("activation", "tanh"))


def param_names(spec: MlpSpec) -> list[str]:
    names = []
    for i in range(spec.num_layers):
        names += [f"W{i}", f"b{i}"]
    return names


def _orthogonal(rng: np.random.Generator, n_in: int, n_out: int, gain: float) -> np.ndarray:
    a = rng.standard_normal((max(n_in, n_out), min(n_in, n_out)))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    if n_in < n_out:
        q = q.T
    return gain * q[:n_in, :n_out]


def init_params(spec: MlpSpec, rng: np.random.Generator, output_gain: float = 1.0) -> dict[str, np.ndarray]:
    """Orthogonal weights (gain sqrt 2 on hidden layers), zero biases.

    Policy heads pass ``output_gain=0.01`` so the initial action distribution is
    close to uniform.
    """
    params = {}
    for i, (n_in, n_out) in enumerate(spec.layer_dims):
        gain = output_gain if i == spec.num_layers - 1 else np.sqrt(2.0)
        params[f"W{i}"] = _orthogonal(rng, n_in, n_out, gain)
        params[f"b{i}"] = np.zeros(n_out)
    return params


def _activate(spec: MlpSpec, x: Tensor) -> Tensor:
    if spec.activation == "tanh":
        return T.tanh(x)
    if spec.activation == "relu":
        return T.relu(x)
    return x


def forward(spec: MlpSpec, params: dict[str, Tensor], x: Tensor) -> Tensor:
    """Graph-recording forward pass; ``x`` is ``[batch, input_dim]``."""
    if x.data.ndim != 2 or x.shape[-1] != spec.input_dim:
        raise ShapeError(f"layer 0: expected input [batch, {spec.input_dim}], got {x.shape}")
    h = x
    for i, (n_in, n_out) in enumerate(spec.layer_dims):
        W, b = params[f"W{i}"], params[f"b{i}"]
        if W.shape != (n_in, n_out) or b.shape != (n_out,):
            raise ShapeError(f"layer {i}: parameter shapes {W.shape}, {b.shape} do not match ({n_in}, {n_out})")
        h = T.add(T.matmul(h, W), b)
        if i < spec.num_layers - 1:
            h = _activate(spec, h)
    return h


def predict(spec: MlpSpec, params: dict[str, np.ndarray], x: np.ndarray) -> np.ndarray:
    """Same arithmetic as :func:`forward` without building a graph."""
    h = np.asarray(x, dtype=np.float64)
    if h.shape[-1] != spec.input_dim:
        raise ShapeError(f"layer 0: expected last dim {spec.input_dim}, got {h.shape}")
    last = spec.num_layers - 1
    for i in range(spec.num_layers):
        h = h @ params[f"W{i}"] + params[f"b{i}"]
        if i < last:
            if spec.activation == "tanh":
                h = np.tanh(h)
            elif spec.activation == "relu":
                h = np.maximum(h, 0.0)
    return h


class Mlp:
    """An :class:`MlpSpec` plus its parameter arrays."""

    def __init__(self, spec: MlpSpec, params: dict[str, np.ndarray]):
        self.spec = spec
        self.params = {k: np.array(params[k], dtype=np.float64) for k in param_names(spec)}

    @classmethod
    def init(cls, spec: MlpSpec, rng: np.random.Generator, output_gain: float = 1.0) -> "Mlp":
        return cls(spec, init_params(spec, rng, output_gain))

    def leaves(self) -> dict[str, Tensor]:
        return {k: Tensor(v, requires_grad=True, name=k) for k, v in self.params.items()}

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return predict(self.spec, self.params, x)

    def copy(self) -> "Mlp":
        return Mlp(self.spec, self.params)
