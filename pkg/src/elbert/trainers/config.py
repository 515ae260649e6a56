from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

ALGORITHMS = ("elbert_po", "g_ppo", "r_ppo", "a_ppo")


@dataclass
class RPPOConfig:
    zeta1: float = 2.0
    omega: float = 0.005
    # "hinge": r - zeta1*max(0, delta - omega); "additive": r + zeta1*delta
    form: str = "hinge"


@dataclass
class APPOConfig:
    beta1: float = 0.25
    beta2: float = 0.25
    omega: float = 0.005


@dataclass
class TrainerConfig:
    algorithm: str = "elbert_po"
    alpha: float = 0.0
    beta_temp: float = 20.0
    clip_epsilon: float = 0.2
    gamma: float = 0.99
    lambda_gae: float = 0.95
    steps_per_iteration: int = 4096
    minibatch_size: int = 256
    epochs_per_iteration: int = 4
    learning_rate: float = 1e-5
    value_learning_rate: float | None = None
    entropy_coef: float = 0.01
    max_grad_norm: float | None = 0.5
    normalize_advantage: bool = True
    demand_floor: float = 1e-8
    demand_reg_zeta: float = 0.0
    demand_reg_group: int = 0
    hidden_dims: tuple = (64, 64)
    activation: str = "tanh"
    total_steps: int = 200_000
    seed: int = 0
    r_ppo: RPPOConfig = field(default_factory=RPPOConfig)
    a_ppo: APPOConfig = field(default_factory=APPOConfig)

    def __post_init__(self):
        if isinstance(self.r_ppo, dict):
            self.r_ppo = RPPOConfig(**self.r_ppo)
        if isinstance(self.a_ppo, dict):
            self.a_ppo = APPOConfig(**self.a_ppo)
        self.hidden_dims = tuple(self.hidden_dims)
        self.validate()

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"trainer.algorithm: unknown {self.algorithm!r}; choose from {ALGORITHMS}")
        if not 0 < self.clip_epsilon < 1:
            raise ValueError("trainer.clip_epsilon must lie in (0, 1)")
        for name in ("steps_per_iteration", "minibatch_size", "epochs_per_iteration"):
            if getattr(self, name) <= 0:
                raise ValueError(f"trainer.{name} must be positive")
        if self.total_steps < 0:
            raise ValueError("trainer.total_steps must be >= 0")
        if not 0 < self.gamma <= 1 or not 0 <= self.lambda_gae <= 1:
            raise ValueError("trainer.gamma must be in (0, 1] and trainer.lambda_gae in [0, 1]")
        if self.alpha < 0:
            raise ValueError("trainer.alpha must be >= 0")
        if self.r_ppo.form not in ("hinge", "additive"):
            raise ValueError("trainer.r_ppo.form must be 'hinge' or 'additive'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_dims"] = list(self.hidden_dims)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown trainer field(s): {', '.join(sorted(unknown))}")
        return cls(**d)
