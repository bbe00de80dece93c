"""LuGre friction observers and friction-compensated servo loops."""
from ._backend import BACKEND
from .model import (
    TABLE1_FRICTION, TABLE1_PLANT, FrictionParams, PlantParams, PlantState,
    lugre_derivatives, static_friction, steady_state_deflection, stribeck_h,
)
from .sim import (
    ConfigError, InitialConditions, ScenarioConfig, SimulationDiverged, Trajectory,
    run_closed_loop, run_open_loop_observer,
)

__version__ = "0.1.0"
