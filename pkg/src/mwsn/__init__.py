"""Round-based simulator for cluster-based routing in mobile wireless sensor networks."""
from .config import ConfigError, SimConfig, load_config, parse_config
from .engine import Simulation, SweepResult, TrialResult, run_sweep, run_trial
from .protocols import ALL_PROTOCOLS, ProtocolKind

__all__ = [
    "ALL_PROTOCOLS",
    "ConfigError",
    "ProtocolKind",
    "SimConfig",
    "Simulation",
    "SweepResult",
    "TrialResult",
    "load_config",
    "parse_config",
    "run_sweep",
    "run_trial",
]
__version__ = "0.1.0"
