from .baselines import (HistoricalBiasTracker, a_ppo_adjusted_advantage, historical_bias_delta,
                        r_ppo_shaped_reward, running_bias)
from .config import ALGORITHMS, APPOConfig, RPPOConfig, TrainerConfig
from .policy import Policy
from .ppo import Batch, Trainer, elbert_po_iteration, ppo_clip_objective

__all__ = [
    "ALGORITHMS", "APPOConfig", "Batch", "HistoricalBiasTracker", "Policy", "RPPOConfig", "Trainer",
    "TrainerConfig", "a_ppo_adjusted_advantage", "elbert_po_iteration", "historical_bias_delta",
    "ppo_clip_objective", "r_ppo_shaped_reward", "running_bias",
]
