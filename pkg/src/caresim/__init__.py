"""Agent-based microsimulation of informal and formal child and social care
provision across kinship networks."""

from caresim.config import SimConfig, load_config
from caresim.policy import PRESETS, PolicyScenario, load_scenario
from caresim.simulation import run_batch, run_simulation

__all__ = [
    "PRESETS",
    "PolicyScenario",
    "SimConfig",
    "load_config",
    "load_scenario",
    "run_batch",
    "run_simulation",
]

__version__ = "0.1.0"
