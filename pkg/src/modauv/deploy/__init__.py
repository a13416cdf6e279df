from .compute import ComputeSite, Site, compute_site
from .config import ConfigError, ScenarioConfig, build, list_scenarios, load_scenario
from .link import DOWN, UP, LinkMode, LinkState, link_transmit
from .runner import RunReport, Simulation, run_scenario
