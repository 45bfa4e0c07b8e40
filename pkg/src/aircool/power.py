"""Electrical power models for the cooling coil, room fans and IT load.

The coil model is thermodynamic (heat moved over a coefficient of
performance), the fan model is the standard cubic law, and the IT model
is either a synthetic autoregressive workload or a small learned
regressor over the recent power history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .psychro import PsychroConstants, DEFAULT_CONSTANTS


@dataclass(frozen=True)
class CoilModel:
    """Cooling coil with thermal coefficient of performance xi >= 1."""

    xi: float = 2.0

    def validate(self) -> None:
        if self.xi < 1.0:
            raise ValueError(f"coil CoP must be >= 1, got {self.xi}")


@dataclass(frozen=True)
class FanModel:
    """Supply/exhaust fan pair, power-law in the volume flow setpoint.

    The cubic default stands in for a learned fan model; p_max is sized so
    fan energy stays comparable to coil energy and the controller faces a
    real trade-off.
    """

    p_max: float = 3.0        # kW at vdot_max
    vdot_max: float = 10000.0  # m3/h
    exponent: float = 3.0

    def validate(self) -> None:
        if self.p_max <= 0 or self.vdot_max <= 0:
            raise ValueError("p_max and vdot_max must be positive")


@dataclass
class ItModel:
    """IT power model, synthetic by default.

    Synthetic mode evolves an AR(1) process around a base load with a
    diurnal component, a weak coupling to the room air flow (low flow
    makes server fans work harder) and Gaussian noise, clipped to
    [0.2 * base, 3 * base]. Learned mode runs a trained MLP over the last
    k_hist powers plus the flow setpoint.
    """

    k_hist: int = 10
    mode: str = "synthetic"             # "synthetic" | "learned"
    base: float = 30.0                  # kW
    amplitude: float = 0.5              # kW, per-step diurnal forcing
    ar_coeff: float = 0.9
    fan_coupling: float = 2e-5          # kW per (m3/h) of flow deficit
    noise_sigma: float = 0.3            # kW
    diurnal_period: float = 1440.0      # control periods
    vdot_max: float = 10000.0           # m3/h
    net: "object | None" = field(default=None, repr=False)  # Mlp for learned mode

    def validate(self) -> None:
        if self.k_hist < 1:
            raise ValueError("k_hist must be >= 1")
        if self.mode not in ("synthetic", "learned"):
            raise ValueError(f"unknown IT model mode {self.mode!r}")
        if self.mode == "learned" and self.net is None:
            raise ValueError("learned mode requires a trained net")
        if self.base <= 0:
            raise ValueError("base power must be positive")


def coil_power(
    vdot_s: float,
    delta_t: float,
    model: CoilModel = CoilModel(),
    constants: PsychroConstants = DEFAULT_CONSTANTS,
) -> float:
    """Electrical power (kW) to cool vdot_s m3/h of air by delta_t deg C.

    Heat moved is c_p * rho * (vdot_s / 3600) * delta_t kW; dividing by
    the CoP gives the electrical draw. Exactly linear in both inputs.
    """
    if vdot_s <= 0:
        raise ValueError("vdot_s must be positive")
    if not 0.0 <= delta_t <= 15.0:
        raise ValueError(f"delta_t must be in [0, 15], got {delta_t}")
    model.validate()
    return constants.c_p * constants.rho * (vdot_s / 3600.0) * delta_t / model.xi


def fan_power(vdot_s: float, model: FanModel = FanModel()) -> float:
    """Fan electrical power (kW) at volume flow vdot_s, power-law model."""
    model.validate()
    if vdot_s < 0 or vdot_s > model.vdot_max:
        raise ValueError(f"vdot_s must be in [0, {model.vdot_max}], got {vdot_s}")
    return model.p_max * (vdot_s / model.vdot_max) ** model.exponent


def it_power_next(
    history: Sequence[float],
    vdot_s: float,
    model: ItModel,
    rng: np.random.Generator,
    step: int = 0,
) -> float:
    """IT power (kW) for the next control period.

    history holds the last k_hist powers, most recent last. step indexes
    control periods since epoch start and sets the diurnal phase.
    """
    model.validate()
    if len(history) != model.k_hist:
        raise ValueError(f"history must hold {model.k_hist} entries, got {len(history)}")
    if model.mode == "learned":
        x = np.asarray(list(history) + [vdot_s], dtype=np.float64)
        return float(model.net.predict(x))
    p_prev = float(history[-1])
    diurnal = math.sin(2.0 * math.pi * step / model.diurnal_period)
    p_next = (
        model.base
        + model.ar_coeff * (p_prev - model.base)
        + model.amplitude * diurnal
        + model.fan_coupling * (model.vdot_max - vdot_s)
        + model.noise_sigma * rng.standard_normal()
    )
    return float(min(max(p_next, 0.2 * model.base), 3.0 * model.base))
