"""The control MDP: state vector, discrete action space, one-period transition.

State is x = [t_s, phi_s, p_it, t_o, phi_o]. An action sets the fan
volume flow, the coil temperature reduction and the recirculated
fraction; the transition runs the psychrometric fixed point for the
current ambient, advances the IT-power model, scores power as negative
reward and threshold excesses as costs, then pulls the next ambient row
from the trace.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import power, psychro
from .psychro import MoistAirState, NonConvergentError, PsychroConstants, SteadyStateInput
from .traces import WeatherTrace

VDOT_GRID = (2000.0, 4000.0, 6000.0, 8000.0, 10000.0)
DELTA_T_GRID = tuple(float(d) for d in range(16))
ALPHA_GRID = tuple(round(a * 0.1, 1) for a in range(11))

# Fixed per-feature normalization bounds for learning agents.
T_NORM = (15.0, 45.0)
RH_NORM = (0.0, 100.0)
P_IT_NORM = (0.0, 90.0)

STANDARD_T_TH = (32.0, 35.0, 40.0)
STANDARD_PHI_TH = (65.0, 80.0)

# Nearest convergent grid alpha substituted when alpha = 1 cannot reach a
# steady state under load.
MASKED_ALPHA = 0.9


@dataclass(frozen=True)
class SystemState:
    t_s: float    # supply air temperature, deg C
    phi_s: float  # supply air RH, percent
    p_it: float   # IT power, kW
    t_o: float    # outside air temperature, deg C
    phi_o: float  # outside air RH, percent

    def as_vector(self) -> np.ndarray:
        return np.array([self.t_s, self.phi_s, self.p_it, self.t_o, self.phi_o])

    def normalized(self) -> np.ndarray:
        """Per-feature min-max scaling to [0, 1], clipped at the fixed bounds."""
        lo = np.array([T_NORM[0], RH_NORM[0], P_IT_NORM[0], T_NORM[0], RH_NORM[0]])
        hi = np.array([T_NORM[1], RH_NORM[1], P_IT_NORM[1], T_NORM[1], RH_NORM[1]])
        return np.clip((self.as_vector() - lo) / (hi - lo), 0.0, 1.0)


@dataclass(frozen=True)
class ControlAction:
    vdot_s: float   # m3/h
    delta_t: float  # deg C
    alpha: float    # recirculated fraction


@dataclass(frozen=True)
class Thresholds:
    t_th: float    # deg C
    phi_th: float  # percent


@dataclass
class Models:
    """Everything the transition needs besides the trace."""

    constants: PsychroConstants = field(default_factory=PsychroConstants)
    coil: power.CoilModel = field(default_factory=power.CoilModel)
    fan: power.FanModel = field(default_factory=power.FanModel)
    it: power.ItModel = field(default_factory=power.ItModel)
    eta: float = 1.0


@dataclass(frozen=True)
class StepOutcome:
    next_state: SystemState
    reward: float         # kW, always -(p_f + p_c)
    cost_t: float         # deg C above t_th, 0 when satisfied
    cost_phi: float       # percent above phi_th, 0 when satisfied
    p_f: float            # kW
    p_c: float            # kW
    supersaturated: bool
    alpha_masked: bool


_ACTIONS: list[ControlAction] | None = None
_ACTION_INDEX: dict[tuple[float, float, float], int] | None = None


def action_space() -> list[ControlAction]:
    """All 880 actions in lexicographic order (vdot, then delta_t, then alpha)."""
    global _ACTIONS, _ACTION_INDEX
    if _ACTIONS is None:
        _ACTIONS = [
            ControlAction(v, d, a) for v, d, a in product(VDOT_GRID, DELTA_T_GRID, ALPHA_GRID)
        ]
        _ACTION_INDEX = {
            (a.vdot_s, a.delta_t, a.alpha): i for i, a in enumerate(_ACTIONS)
        }
    return _ACTIONS


def action_index(action: ControlAction) -> int:
    """Index of an on-grid action; inverse of action_space() indexing."""
    action_space()
    key = (action.vdot_s, action.delta_t, action.alpha)
    if key not in _ACTION_INDEX:
        raise ValueError(f"action {action} is not on the control grid")
    return _ACTION_INDEX[key]


def step(
    x: SystemState,
    a: ControlAction,
    ambient_next: MoistAirState,
    thresholds: Thresholds,
    models: Models,
    rng: np.random.Generator,
    it_history: "deque[float] | None" = None,
    step_index: int = 0,
) -> StepOutcome:
    """One control-period transition.

    The steady-state solve uses the ambient stored in x; ambient_next
    only populates the returned state. A non-convergent action (alpha = 1
    under load) is substituted with the nearest convergent grid alpha and
    flagged, so controllers always observe a real outcome.
    """
    alpha_masked = False
    # Extreme actions can park the supply state outside the moist-air
    # sanity band; the fixed point does not depend on the iteration seed
    # (alpha = 1 under load is masked below), so clamping the seed is exact.
    seed_state = MoistAirState(
        min(max(x.t_s, psychro.T_MIN), psychro.T_MAX), min(max(x.phi_s, 0.0), 100.0)
    )
    ss_input = SteadyStateInput(
        supply_init=seed_state,
        outside=MoistAirState(x.t_o, x.phi_o),
        vdot_s=a.vdot_s,
        delta_t=a.delta_t,
        alpha=a.alpha,
        p_it=x.p_it,
        eta=models.eta,
    )
    try:
        solved = psychro.steady_state_iterative(ss_input, models.constants)
    except NonConvergentError:
        alpha_masked = True
        ss_input = SteadyStateInput(
            supply_init=ss_input.supply_init,
            outside=ss_input.outside,
            vdot_s=a.vdot_s,
            delta_t=a.delta_t,
            alpha=MASKED_ALPHA,
            p_it=x.p_it,
            eta=models.eta,
        )
        solved = psychro.steady_state_iterative(ss_input, models.constants)

    if it_history is None:
        it_history = deque([x.p_it] * models.it.k_hist, maxlen=models.it.k_hist)
    p_it_next = power.it_power_next(it_history, a.vdot_s, models.it, rng, step=step_index)
    p_f = power.fan_power(a.vdot_s, models.fan)
    p_c = power.coil_power(a.vdot_s, a.delta_t, models.coil, models.constants)

    t_s_next, phi_s_next = solved.state.t, solved.state.rh
    return StepOutcome(
        next_state=SystemState(
            t_s=t_s_next,
            phi_s=phi_s_next,
            p_it=p_it_next,
            t_o=ambient_next.t,
            phi_o=ambient_next.rh,
        ),
        reward=-(p_f + p_c),
        cost_t=max(t_s_next - thresholds.t_th, 0.0),
        cost_phi=max(phi_s_next - thresholds.phi_th, 0.0),
        p_f=p_f,
        p_c=p_c,
        supersaturated=solved.supersaturated,
        alpha_masked=alpha_masked,
    )


def weighted_reward(outcome: StepOutcome, zeta1: float, zeta2: float) -> float:
    """Penalty-folded reward used by the unconstrained agent."""
    if zeta1 < 0 or zeta2 < 0:
        raise ValueError("penalty coefficients must be non-negative")
    return outcome.reward - zeta1 * outcome.cost_t - zeta2 * outcome.cost_phi


def reset(
    trace: WeatherTrace,
    episode_len: int,
    rng: np.random.Generator,
    models: Models,
    start: int | None = None,
) -> tuple[SystemState, int]:
    """Initial state and trace cursor for an episode of episode_len steps.

    The window start is uniform over [0, len - episode_len); an episode
    consumes rows start..start+episode_len inclusive (the last row feeds
    the final next-state ambient), so the trace must be strictly longer
    than the episode. Supply air starts at the window's ambient condition
    and IT power at the synthetic base load.
    """
    if len(trace) <= episode_len:
        raise ValueError(
            f"trace too short: {len(trace)} rows cannot drive a {episode_len}-step episode"
        )
    if start is None:
        start = int(rng.integers(0, len(trace) - episode_len))
    elif not 0 <= start < len(trace) - episode_len + 1:
        raise ValueError(f"start {start} out of range for episode of {episode_len} steps")
    t_o = float(trace.t_o[start])
    phi_o = float(trace.rh_o[start])
    state = SystemState(t_s=t_o, phi_s=phi_o, p_it=models.it.base, t_o=t_o, phi_o=phi_o)
    return state, start


class FreeCooledDCEnv:
    """Stateful wrapper driving the functional transition along a trace.

    One instance is single-threaded; run several instances with
    independent RNGs for parallel evaluation sweeps.
    """

    def __init__(
        self,
        trace: WeatherTrace,
        thresholds: Thresholds,
        models: Models,
        episode_len: int,
        rng: np.random.Generator,
    ):
        self.trace = trace
        self.thresholds = thresholds
        self.models = models
        self.episode_len = episode_len
        self.rng = rng
        self.state: SystemState | None = None
        self._cursor = 0
        self._it_history: deque[float] = deque(maxlen=models.it.k_hist)

    @property
    def cursor(self) -> int:
        """Index of the trace row the current state's ambient came from."""
        return self._cursor

    def reset(self, start: int | None = None) -> SystemState:
        self.state, self._cursor = reset(
            self.trace, self.episode_len, self.rng, self.models, start=start
        )
        self._it_history = deque(
            [self.state.p_it] * self.models.it.k_hist, maxlen=self.models.it.k_hist
        )
        return self.state

    def step(self, action: ControlAction) -> StepOutcome:
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        nxt = self._cursor + 1
        if nxt >= len(self.trace):
            raise ValueError("trace exhausted; reset with a longer trace or fewer steps")
        ambient_next = MoistAirState(float(self.trace.t_o[nxt]), float(self.trace.rh_o[nxt]))
        outcome = step(
            self.state,
            action,
            ambient_next,
            self.thresholds,
            self.models,
            self.rng,
            it_history=self._it_history,
            step_index=int(self.trace.minutes[self._cursor]),
        )
        self._it_history.append(outcome.next_state.p_it)
        self.state = outcome.next_state
        self._cursor = nxt
        return outcome
