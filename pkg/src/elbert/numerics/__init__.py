from .distributions import (categorical_entropy, categorical_policy, largest_remainder, log_softmax,
                            multinomial_log_prob, multinomial_policy, sample_index)
from .mlp import Mlp, MlpSpec, forward, init_params, predict
from .optim import AdamState, adam_step, clip_by_global_norm, sgd_step
from .tensor import NonFiniteError, ShapeError, Tensor, backward

__all__ = [
    "AdamState", "Mlp", "MlpSpec", "NonFiniteError", "ShapeError", "Tensor", "adam_step", "backward",
    "categorical_entropy", "categorical_policy", "clip_by_global_norm", "forward", "init_params",
    "largest_remainder", "log_softmax", "multinomial_log_prob", "multinomial_policy", "predict", "sample_index", "sgd_step",
]
