from .base import ScenarioDef, build_scenario, scenario_names
from . import axelrod_chain, gossip, job_market, mesh, minimal  # noqa: F401  (registration)

__all__ = ["ScenarioDef", "build_scenario", "scenario_names"]
