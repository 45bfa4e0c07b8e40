"""Baseline controllers: threshold hysteresis and a one-step lookahead oracle.

The hysteresis rule runs the fans flat out and nudges the damper and coil
setpoints one grid step per period toward the thresholds. The oracle
sweeps all 880 actions through the closed-form steady-state and power
models and picks the cheapest feasible one; it doubles as the ground
truth for power-optimality checks.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import power, psychro
from .env import (
    MASKED_ALPHA,
    ControlAction,
    Models,
    SystemState,
    Thresholds,
    action_space,
)
from .psychro import MoistAirState, SteadyStateInput

# Violation weighting when no action can satisfy both thresholds; matches
# the unconstrained agent's fixed penalty coefficients so both rank
# infeasible outcomes identically.
FALLBACK_ZETA = (2.0, 2.0)

HYSTERESIS_VDOT = 10000.0  # m3/h, fans pinned at the maximum setpoint


@dataclass(frozen=True)
class HysteresisState:
    """Current damper and coil setpoints carried between periods."""

    alpha: float = 1.0
    delta_t: float = 15.0


def hysteresis_step(
    state: HysteresisState, t_s: float, phi_s: float, thresholds: Thresholds
) -> tuple[ControlAction, HysteresisState]:
    """One hysteresis adjustment from the observed supply condition.

    alpha moves down 0.1 while RH is below its threshold and up 0.1
    otherwise (equality counts as "not below"); delta_t moves down 1 C
    while temperature is below its threshold and up 1 C otherwise. Both
    are clamped to their grids. Lowering delta_t when RH is high and
    temperature has slack also serves the RH goal, since cooling at
    constant moisture raises RH.
    """
    if phi_s < thresholds.phi_th:
        alpha = state.alpha - 0.1
    else:
        alpha = state.alpha + 0.1
    alpha = round(min(max(alpha, 0.0), 1.0), 1)
    if t_s < thresholds.t_th:
        delta_t = state.delta_t - 1.0
    else:
        delta_t = state.delta_t + 1.0
    delta_t = min(max(delta_t, 0.0), 15.0)
    nxt = HysteresisState(alpha=alpha, delta_t=delta_t)
    return ControlAction(HYSTERESIS_VDOT, delta_t, alpha), nxt


class HysteresisController:
    """Stateful wrapper exposing the controller protocol (one per run)."""

    def __init__(self, thresholds: Thresholds):
        self.thresholds = thresholds
        self.state = HysteresisState()

    def act(self, state: SystemState) -> ControlAction:
        action, self.state = hysteresis_step(self.state, state.t_s, state.phi_s, self.thresholds)
        return action


def predict_supply(
    x: SystemState, a: ControlAction, models: Models, iterative: bool = False
) -> tuple[float, float]:
    """Predicted next supply (t, RH) under action a, mirroring the environment.

    alpha = 1 under load is replaced by the masked grid value exactly as
    the environment does; alpha = 1 with no load is a no-op on the supply
    condition.
    """
    alpha = a.alpha
    if alpha >= 1.0:
        if x.p_it <= 0.0:
            return x.t_s, x.phi_s
        alpha = MASKED_ALPHA
    # Seed clamped into the sanity band; the fixed point ignores the seed.
    inp = SteadyStateInput(
        supply_init=MoistAirState(
            min(max(x.t_s, psychro.T_MIN), psychro.T_MAX), min(max(x.phi_s, 0.0), 100.0)
        ),
        outside=MoistAirState(x.t_o, x.phi_o),
        vdot_s=a.vdot_s,
        delta_t=a.delta_t,
        alpha=alpha,
        p_it=x.p_it,
        eta=models.eta,
    )
    solve = psychro.steady_state_iterative if iterative else psychro.steady_state_closed_form
    result = solve(inp, models.constants)
    return result.state.t, result.state.rh


def one_step_oracle(
    x: SystemState, thresholds: Thresholds, models: Models, iterative: bool = False
) -> ControlAction:
    """Exhaustive sweep for the cheapest action satisfying both thresholds.

    Among feasible actions the one with minimal fan-plus-coil power wins,
    lowest action index on ties. When nothing is feasible the weighted
    violation plus power is minimized instead, with the unconstrained
    agent's penalty weights.
    """
    zeta1, zeta2 = FALLBACK_ZETA
    best_feasible: tuple[float, int] | None = None
    best_fallback: tuple[float, int] | None = None
    for idx, a in enumerate(action_space()):
        t_s, phi_s = predict_supply(x, a, models, iterative=iterative)
        p = power.fan_power(a.vdot_s, models.fan) + power.coil_power(
            a.vdot_s, a.delta_t, models.coil, models.constants
        )
        cost_t = max(t_s - thresholds.t_th, 0.0)
        cost_phi = max(phi_s - thresholds.phi_th, 0.0)
        if cost_t == 0.0 and cost_phi == 0.0:
            if best_feasible is None or p < best_feasible[0]:
                best_feasible = (p, idx)
        score = p + zeta1 * cost_t + zeta2 * cost_phi
        if best_fallback is None or score < best_fallback[0]:
            best_fallback = (score, idx)
    chosen = best_feasible if best_feasible is not None else best_fallback
    return action_space()[chosen[1]]


class OneStepOracleController:
    """Oracle with periodic cross-checks of its closed-form predictions.

    Every spot_check_every-th decision the chosen action is re-predicted
    with the iterative solver; disagreement beyond the solver equivalence
    tolerances raises.
    """

    def __init__(self, thresholds: Thresholds, models: Models, spot_check_every: int = 100):
        self.thresholds = thresholds
        self.models = models
        self.spot_check_every = spot_check_every
        self._count = 0

    def act(self, state: SystemState) -> ControlAction:
        action = one_step_oracle(state, self.thresholds, self.models)
        self._count += 1
        if self.spot_check_every and self._count % self.spot_check_every == 0:
            t_cf, phi_cf = predict_supply(state, action, self.models)
            t_it, phi_it = predict_supply(state, action, self.models, iterative=True)
            if abs(t_cf - t_it) > 0.01 or abs(phi_cf - phi_it) > 0.1:
                raise AssertionError(
                    f"solver disagreement at decision {self._count}: "
                    f"closed form ({t_cf:.4f} C, {phi_cf:.4f} %), "
                    f"iterative ({t_it:.4f} C, {phi_it:.4f} %)"
                )
        return action
