"""Flow-level discrete-time simulator for IoV mesh networks."""
from .config import ConfigError, ScenarioConfig, load_scenario
from .engine import RunResult, run, sweep
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["ConfigError", "ScenarioConfig", "load_scenario", "run", "sweep", "RunResult", "BACKEND", "__version__"]
