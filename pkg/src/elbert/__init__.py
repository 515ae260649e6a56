"""Long-term benefit rate fairness in supply-demand MDPs."""
from .sdmdp import (BiasSpec, CumulativeSignals, DegenerateDemand, SupplyDemandSignals, Trajectory,
                    benefit_rates_and_bias, discounted_cumulate, soft_bias)

__version__ = "0.1.0"
__all__ = ["BiasSpec", "CumulativeSignals", "DegenerateDemand", "SupplyDemandSignals", "Trajectory",
           "benefit_rates_and_bias", "discounted_cumulate", "soft_bias"]
