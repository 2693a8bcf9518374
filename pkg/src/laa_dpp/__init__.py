"""Energy-aware spectrum access and power allocation for LAA small cells coexisting with Wi-Fi."""

from .baselines import PolicyId, pcmps_decide, zero_power_decide
from .core import Allocation, NetworkConfig, SlotState, dbm_to_watts, validate_config
from .env import EnvParams
from .harness import RunMetrics, TradeoffTable, compare_policies, run_episode, sweep_V
from .scheduler import ScaSettings, decide_allocation

__all__ = [
    "Allocation",
    "EnvParams",
    "NetworkConfig",
    "PolicyId",
    "RunMetrics",
    "ScaSettings",
    "SlotState",
    "TradeoffTable",
    "compare_policies",
    "dbm_to_watts",
    "decide_allocation",
    "pcmps_decide",
    "run_episode",
    "sweep_V",
    "validate_config",
    "zero_power_decide",
]
