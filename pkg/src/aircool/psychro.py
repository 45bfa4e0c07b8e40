"""Moist-air psychrometrics and the four-stage supply-air model.

Air in the free-cooled server room goes through four steady-state stages
per control period: the servers heat it (constant moisture), the buffer
chamber splits off the recirculated fraction, the cooling coil lowers the
temperature of fresh outside air (constant moisture), and the damper
system mixes recirculated and processed streams. Working variables are
specific enthalpy h (kJ/kg dry air), humidity ratio w (kg/kg) and dry-air
mass flow (kg/s); temperature/RH pairs are converted at the boundary.

The fixed point of the stage composition is found either by the iterative
scheme (the production path) or in closed form (an independent check).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MAGNUS_A = 0.61094  # kPa
MAGNUS_B = 17.625
MAGNUS_C = 243.04  # deg C

# Ratio of water to dry-air molecular weight.
EPSILON = 0.622

# Simulator sanity range for externally supplied air states, deg C.
T_MIN, T_MAX = -20.0, 80.0


class NonConvergentError(RuntimeError):
    """Raised when the fixed-point iteration fails to converge."""


@dataclass(frozen=True)
class PsychroConstants:
    """Physical constants of the moist-air model.

    c_p and rho are the values used by the cooling-coil power model and
    are kept identical here for consistency.
    """

    c_p: float = 1.006     # specific heat of dry air, kJ/(kg C)
    c_pw: float = 1.86     # specific heat of water vapor, kJ/(kg C)
    l: float = 2501.0      # evaporation heat of water, kJ/kg
    rho: float = 1.202     # air density, kg/m3
    p_atm: float = 101.325  # barometric pressure, kPa

    def validate(self) -> None:
        if self.c_p <= 0 or self.c_pw <= 0 or self.l <= 0:
            raise ValueError("specific heats and evaporation heat must be positive")
        if self.rho <= 0 or self.p_atm <= 0:
            raise ValueError("density and pressure must be positive")


DEFAULT_CONSTANTS = PsychroConstants()


@dataclass(frozen=True)
class MoistAirState:
    """Dry-bulb temperature (deg C) and relative humidity (percent)."""

    t: float
    rh: float

    def validate(self) -> None:
        if not 0.0 <= self.rh <= 100.0:
            raise ValueError(f"RH must be in [0, 100], got {self.rh}")
        if not T_MIN <= self.t <= T_MAX:
            raise ValueError(f"temperature {self.t} outside sanity range [{T_MIN}, {T_MAX}]")


@dataclass(frozen=True)
class AirProps:
    """Conserved quantities of one air stream.

    h: specific enthalpy, kJ/kg dry air; w: humidity ratio, kg/kg;
    mdot: dry-air mass flow rate, kg/s.
    """

    h: float
    w: float
    mdot: float


@dataclass(frozen=True)
class SteadyStateInput:
    """Inputs of one control-period steady-state solve."""

    supply_init: MoistAirState  # supply condition at the current step
    outside: MoistAirState      # ambient condition at the current step
    vdot_s: float               # supply air volume flow, m3/h
    delta_t: float              # cooling-coil temperature reduction, deg C
    alpha: float                # recirculated fraction of the supply stream
    p_it: float                 # IT power, kW
    eta: float = 1.0            # servers' heat rate transfer coefficient

    def validate(self) -> None:
        self.supply_init.validate()
        self.outside.validate()
        if self.vdot_s <= 0:
            raise ValueError("vdot_s must be positive")
        if not 0.0 <= self.delta_t <= 15.0:
            raise ValueError(f"delta_t must be in [0, 15], got {self.delta_t}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.p_it < 0:
            raise ValueError("p_it must be non-negative")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")


@dataclass(frozen=True)
class SteadyState:
    """Converged supply-air condition plus solver diagnostics."""

    state: MoistAirState
    props: AirProps
    iterations: int
    supersaturated: bool


def saturation_pressure(t: float) -> float:
    """Saturation vapor pressure in kPa at temperature t (deg C), Magnus form.

    Strictly increasing in t. Intended range is the simulator sanity band;
    the expression itself is defined for any t above the pole at -243.04.
    """
    if t <= -MAGNUS_C:
        raise ValueError(f"temperature {t} at or below the Magnus pole {-MAGNUS_C}")
    return MAGNUS_A * math.exp(MAGNUS_B * t / (t + MAGNUS_C))


def humidity_ratio(state: MoistAirState, constants: PsychroConstants = DEFAULT_CONSTANTS) -> float:
    """Humidity ratio w (kg water per kg dry air) of a temperature/RH state."""
    if not 0.0 <= state.rh <= 100.0:
        raise ValueError(f"RH must be in [0, 100], got {state.rh}")
    p_v = state.rh / 100.0 * saturation_pressure(state.t)
    if p_v >= constants.p_atm:
        raise ValueError("vapor pressure at or above barometric pressure")
    return EPSILON * p_v / (constants.p_atm - p_v)


def enthalpy(t: float, w: float, constants: PsychroConstants = DEFAULT_CONSTANTS) -> float:
    """Specific enthalpy (kJ/kg dry air): dry-air term plus water-vapor term."""
    if w < 0:
        raise ValueError("humidity ratio must be non-negative")
    return constants.c_p * t + w * (constants.c_pw * t + constants.l)


def state_from_props(
    h: float, w: float, constants: PsychroConstants = DEFAULT_CONSTANTS
) -> tuple[MoistAirState, bool]:
    """Invert (h, w) back to a temperature/RH state.

    Returns the state and a supersaturation flag. A computed RH above 100 %
    is clamped to 100 because the model excludes condensation; the flag
    tells callers the clamp was applied.
    """
    if w < 0:
        raise ValueError("humidity ratio must be non-negative")
    denom = constants.c_p + w * constants.c_pw
    if denom <= 0:
        raise ValueError("non-positive moist-air heat capacity")
    t = (h - w * constants.l) / denom
    p_v = w * constants.p_atm / (EPSILON + w)
    rh = 100.0 * p_v / saturation_pressure(t)
    supersaturated = rh > 100.0
    if supersaturated:
        rh = 100.0
    return MoistAirState(t=t, rh=rh), supersaturated


def props_of(
    state: MoistAirState, mdot: float, constants: PsychroConstants = DEFAULT_CONSTANTS
) -> AirProps:
    """AirProps of a temperature/RH state carried at mass flow mdot."""
    w = humidity_ratio(state, constants)
    return AirProps(h=enthalpy(state.t, w, constants), w=w, mdot=mdot)


def cool(
    outside: MoistAirState,
    delta_t: float,
    mdot: float = 0.0,
    constants: PsychroConstants = DEFAULT_CONSTANTS,
) -> AirProps:
    """Processed-air properties after the cooling coil.

    The coil lowers the dry-bulb temperature by delta_t and changes
    neither moisture content nor mass flow.
    """
    if not 0.0 <= delta_t <= 15.0:
        raise ValueError(f"delta_t must be in [0, 15], got {delta_t}")
    w = humidity_ratio(outside, constants)
    return AirProps(h=enthalpy(outside.t - delta_t, w, constants), w=w, mdot=mdot)


def heat(props: AirProps, p_it: float, eta: float = 1.0) -> AirProps:
    """Hot-aisle properties after the servers add eta * p_it of sensible heat.

    No moisture is introduced and the mass flow is unchanged.
    """
    if props.mdot <= 0:
        raise ValueError("mass flow must be positive to absorb server heat")
    return AirProps(h=props.h + eta * p_it / props.mdot, w=props.w, mdot=props.mdot)


def mix(processed: AirProps, recirculated: AirProps, alpha: float) -> AirProps:
    """Mass/energy-conserving mix of processed and recirculated streams."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return AirProps(
        h=(1.0 - alpha) * processed.h + alpha * recirculated.h,
        w=(1.0 - alpha) * processed.w + alpha * recirculated.w,
        mdot=processed.mdot + recirculated.mdot,
    )


def supply_mass_flow(vdot_s: float, constants: PsychroConstants = DEFAULT_CONSTANTS) -> float:
    """Dry-air mass flow (kg/s) at volume flow vdot_s (m3/h), constant density."""
    return constants.rho * vdot_s / 3600.0


def steady_state_iterative(
    inp: SteadyStateInput,
    constants: PsychroConstants = DEFAULT_CONSTANTS,
    eps_h: float = 1e-6,
    eps_w: float = 1e-10,
    max_iter: int = 500,
) -> SteadyState:
    """Solve the four-stage fixed point by repeated substitution.

    Starting from the current supply condition, the heating, buffering,
    cooling and mixing stages are applied until the supply enthalpy and
    humidity ratio settle. Both update maps are affine contractions with
    factor alpha, so the distance to the fixed point after an update is
    exactly alpha/(1-alpha) times the last change; the stop test uses that
    bound, guaranteeing the returned values are within eps_h and eps_w of
    the true fixed point rather than merely close to the previous iterate.

    Raises NonConvergentError after max_iter sweeps. With alpha = 1 and a
    positive IT load the recirculated-only loop gains heat without bound
    and never converges; that case is a hard error by design.
    """
    inp.validate()
    alpha = inp.alpha
    mdot_s = supply_mass_flow(inp.vdot_s, constants)
    processed = cool(inp.outside, inp.delta_t, mdot=(1.0 - alpha) * mdot_s, constants=constants)

    h = enthalpy(inp.supply_init.t, humidity_ratio(inp.supply_init, constants), constants)
    w = humidity_ratio(inp.supply_init, constants)
    heat_gain = inp.eta * inp.p_it / mdot_s
    gain = alpha / (1.0 - alpha) if alpha < 1.0 else math.inf

    iterations = 0
    for iterations in range(1, max_iter + 1):
        h_hot = h + heat_gain
        h_next = (1.0 - alpha) * processed.h + alpha * h_hot
        w_next = (1.0 - alpha) * processed.w + alpha * w
        dh, dw = abs(h_next - h), abs(w_next - w)
        h, w = h_next, w_next
        if alpha < 1.0:
            if gain * dh <= eps_h and gain * dw <= eps_w:
                break
        elif dh == 0.0 and dw == 0.0:
            break
    else:
        raise NonConvergentError(
            f"no fixed point within {max_iter} iterations "
            f"(alpha={alpha}, p_it={inp.p_it} kW, vdot_s={inp.vdot_s} m3/h)"
        )

    state, supersaturated = state_from_props(h, w, constants)
    return SteadyState(
        state=state,
        props=AirProps(h=h, w=w, mdot=mdot_s),
        iterations=iterations,
        supersaturated=supersaturated,
    )


def steady_state_closed_form(
    inp: SteadyStateInput, constants: PsychroConstants = DEFAULT_CONSTANTS
) -> SteadyState:
    """Algebraic solution of the four-stage fixed point, valid for alpha < 1.

    The supply humidity ratio equals the outside one (no stage adds or
    removes moisture) and the supply enthalpy is the processed-air enthalpy
    plus the recirculation-amplified server heat.
    """
    inp.validate()
    if inp.alpha >= 1.0:
        raise ValueError("closed form undefined at alpha = 1 (no fresh-air heat sink)")
    mdot_s = supply_mass_flow(inp.vdot_s, constants)
    w_o = humidity_ratio(inp.outside, constants)
    h_p = enthalpy(inp.outside.t - inp.delta_t, w_o, constants)
    h_s = h_p + inp.alpha / (1.0 - inp.alpha) * inp.eta * inp.p_it / mdot_s
    state, supersaturated = state_from_props(h_s, w_o, constants)
    return SteadyState(
        state=state,
        props=AirProps(h=h_s, w=w_o, mdot=mdot_s),
        iterations=0,
        supersaturated=supersaturated,
    )
