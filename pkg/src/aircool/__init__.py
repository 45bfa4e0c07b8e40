"""Trace-driven control simulator for tropical air free-cooled data centers.

Library layout: psychro (moist-air model), power (electrical models),
env (control MDP), nn (networks), drl (training and execution),
baselines (hysteresis and oracle), traces (weather data), surrogate
(state-evolution regressors), harness (evaluation loop), report
(figures), cli (command line).
"""

from .env import ControlAction, FreeCooledDCEnv, Models, SystemState, Thresholds, action_space
from .psychro import (
    AirProps,
    MoistAirState,
    NonConvergentError,
    PsychroConstants,
    SteadyStateInput,
    steady_state_closed_form,
    steady_state_iterative,
)
from .traces import WeatherTrace, load_csv, save_csv, split, synth_weather

__version__ = "0.1.0"

__all__ = [
    "AirProps",
    "ControlAction",
    "FreeCooledDCEnv",
    "Models",
    "MoistAirState",
    "NonConvergentError",
    "PsychroConstants",
    "SteadyStateInput",
    "SystemState",
    "Thresholds",
    "WeatherTrace",
    "action_space",
    "load_csv",
    "save_csv",
    "split",
    "steady_state_closed_form",
    "steady_state_iterative",
    "synth_weather",
    "__version__",
]
