"""Offline Q-learning for the cooling controller.

Two training procedures share one loop: the unconstrained agent folds
threshold violations into the reward with fixed penalty weights, while
the constrained agent learns the weights as Lagrange multipliers updated
by projected dual ascent on trailing-window violation averages. Both use
experience replay, a softly blended target network, epsilon-greedy
exploration and plain-gradient Q updates.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from . import nn
from .env import ControlAction, FreeCooledDCEnv, SystemState, action_space

logger = logging.getLogger(__name__)

STATE_DIM = 5
N_ACTIONS = 880
DQN_HIDDEN = (128, 64, 32)


@dataclass(frozen=True)
class Transition:
    """One replay record: normalized state, action index, signals, next state."""

    state: np.ndarray
    action: int
    reward: float
    cost_t: float
    cost_phi: float
    next_state: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring buffer over flat arrays.

    Batches are sampled uniformly without replacement from the current
    occupancy.
    """

    def __init__(self, capacity: int = 50000, state_dim: int = STATE_DIM):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._states = np.zeros((capacity, state_dim))
        self._actions = np.zeros(capacity, dtype=np.int64)
        self._rewards = np.zeros(capacity)
        self._costs_t = np.zeros(capacity)
        self._costs_phi = np.zeros(capacity)
        self._next_states = np.zeros((capacity, state_dim))
        self._size = 0
        self._head = 0

    def __len__(self) -> int:
        return self._size

    def push(self, tr: Transition) -> None:
        i = self._head
        self._states[i] = tr.state
        self._actions[i] = tr.action
        self._rewards[i] = tr.reward
        self._costs_t[i] = tr.cost_t
        self._costs_phi[i] = tr.cost_phi
        self._next_states[i] = tr.next_state
        self._head = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        if batch_size > self._size:
            raise ValueError(f"cannot draw {batch_size} from {self._size} stored transitions")
        idx = rng.choice(self._size, size=batch_size, replace=False)
        return (
            self._states[idx],
            self._actions[idx],
            self._rewards[idx],
            self._costs_t[idx],
            self._costs_phi[idx],
            self._next_states[idx],
        )


@dataclass(frozen=True)
class EpsilonSchedule:
    """Linear decay from start to end over decay_steps, then flat."""

    start: float = 1.0
    end: float = 0.1
    decay_steps: int = 1

    def value(self, step: int) -> float:
        if step >= self.decay_steps:
            return self.end
        frac = step / self.decay_steps
        return self.start + (self.end - self.start) * frac


@dataclass
class LagrangeState:
    """Dual variables with projection and the trailing observation windows."""

    eta2: float = 0.001
    lambda1: float = 0.0
    lambda2: float = 0.0
    lambda1_max: float = 100.0
    lambda2_max: float = 100.0
    window: int = 50
    t_window: deque = field(default_factory=lambda: deque(maxlen=50))
    phi_window: deque = field(default_factory=lambda: deque(maxlen=50))

    def __post_init__(self):
        self.t_window = deque(self.t_window, maxlen=self.window)
        self.phi_window = deque(self.phi_window, maxlen=self.window)

    def observe(self, t_s: float, phi_s: float) -> None:
        self.t_window.append(t_s)
        self.phi_window.append(phi_s)

    def update(self, t_th: float, phi_th: float) -> None:
        """Projected dual ascent on the trailing-window violation averages."""
        if not self.t_window:
            return
        t_bar = sum(self.t_window) / len(self.t_window)
        phi_bar = sum(self.phi_window) / len(self.phi_window)
        self.lambda1 = min(max(self.lambda1 + self.eta2 * (t_bar - t_th), 0.0), self.lambda1_max)
        self.lambda2 = min(max(self.lambda2 + self.eta2 * (phi_bar - phi_th), 0.0), self.lambda2_max)


@dataclass
class TrainConfig:
    """Hyperparameters; defaults are the full-scale training settings."""

    agent: str = "udrl"             # "udrl" | "cdrl"
    episodes: int = 3000            # N
    steps_per_episode: int = 1000   # T
    gamma: float = 0.99             # 0.99 unconstrained, 0.5 constrained
    eta1: float = 0.01              # Q-update step size
    eta2: float = 0.001             # dual step size
    beta: float = 0.01              # soft target blend weight
    zeta1: float = 2.0              # fixed penalty weights (unconstrained only)
    zeta2: float = 2.0
    t_th: float = 32.0
    phi_th: float = 80.0
    epsilon_start: float = 1.0
    epsilon_end: float = 0.1
    epsilon_decay_frac: float = 0.5  # fraction of total steps spent annealing
    buffer_capacity: int = 50000
    batch_size: int = 64
    min_buffer_fill: int = 1000
    lambda1_max: float = 100.0
    lambda2_max: float = 100.0
    window: int = 50
    grad_clip: float = 10.0
    hidden: tuple[int, ...] = DQN_HIDDEN
    seed: int = 0

    def validate(self) -> None:
        if self.agent not in ("udrl", "cdrl"):
            raise ValueError(f"unknown agent {self.agent!r}")
        if self.episodes < 1 or self.steps_per_episode < 1:
            raise ValueError("episodes and steps_per_episode must be positive")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if self.eta1 <= self.eta2:
            raise ValueError(
                f"two-timescale ordering requires eta1 > eta2, got {self.eta1} <= {self.eta2}"
            )
        if self.zeta1 < 0 or self.zeta2 < 0:
            raise ValueError("penalty coefficients must be non-negative")
        if self.batch_size < 1 or self.min_buffer_fill < self.batch_size:
            raise ValueError("min_buffer_fill must be at least the batch size")


PROFILES = {
    "paper": {"episodes": 3000, "steps_per_episode": 1000},
    "desk": {"episodes": 200, "steps_per_episode": 200},
}


def make_config(agent: str, profile: str = "desk", **overrides) -> TrainConfig:
    """Config for an agent under a named profile; cDRL flips gamma to 0.5."""
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}, expected one of {sorted(PROFILES)}")
    cfg = TrainConfig(agent=agent, **PROFILES[profile])
    if agent == "cdrl":
        cfg = replace(cfg, gamma=0.5)
    cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


@dataclass(frozen=True)
class EpisodeLog:
    """Per-episode training trace.

    Power and penalty columns average the greedy (exploited) steps of the
    episode, i.e. the learned policy's own decisions; they are nan for
    episodes in which every step explored. epsilon is the schedule value
    at the episode's last step.
    """

    episode: int
    mean_cooling_power_kW: float
    mean_temp_penalty_C: float
    mean_rh_penalty_pct: float
    epsilon: float
    lambda1: float
    lambda2: float
    loss: float


@dataclass
class TrainResult:
    q_net: nn.Mlp
    log: list[EpisodeLog]
    lambda_history: np.ndarray  # (updates, 2); empty for the unconstrained agent
    clip_fraction: float        # fraction of Q updates where the norm clip engaged
    config: TrainConfig


def select_action(q_values: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over the action-value vector; greedy ties go to the lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(0, len(q_values)))
    return int(np.argmax(q_values))


def _train(env: FreeCooledDCEnv, config: TrainConfig, constrained: bool) -> TrainResult:
    config.validate()
    rng = np.random.default_rng(config.seed)
    sizes = [STATE_DIM, *config.hidden, N_ACTIONS]
    q_net = nn.init_mlp(sizes, rng)
    target_net = q_net.copy()
    opt = nn.Sgd(lr=config.eta1)
    buffer = ReplayBuffer(config.buffer_capacity, STATE_DIM)
    total_steps = config.episodes * config.steps_per_episode
    schedule = EpsilonSchedule(
        start=config.epsilon_start,
        end=config.epsilon_end,
        decay_steps=max(1, int(config.epsilon_decay_frac * total_steps)),
    )
    lagrange = LagrangeState(
        eta2=config.eta2,
        lambda1_max=config.lambda1_max,
        lambda2_max=config.lambda2_max,
        window=config.window,
    )
    actions = action_space()
    arange_batch = np.arange(config.batch_size)

    log: list[EpisodeLog] = []
    lambda_history: list[tuple[float, float]] = []
    n_updates = 0
    n_clipped = 0
    global_step = 0

    for episode in range(1, config.episodes + 1):
        state = env.reset()
        state_n = state.normalized()
        power_sum = 0.0
        cost_t_sum = 0.0
        cost_phi_sum = 0.0
        greedy_steps = 0
        loss_sum = 0.0
        loss_count = 0
        epsilon = schedule.value(global_step)

        for _ in range(config.steps_per_episode):
            epsilon = schedule.value(global_step)
            q_values = nn.forward(q_net, state_n)
            # Same draw order as select_action, with the explore/exploit
            # split kept visible for the episode log.
            explored = epsilon > 0.0 and rng.random() < epsilon
            if explored:
                a_idx = int(rng.integers(0, len(q_values)))
            else:
                a_idx = int(np.argmax(q_values))
            outcome = env.step(actions[a_idx])
            next_n = outcome.next_state.normalized()
            buffer.push(
                Transition(
                    state=state_n,
                    action=a_idx,
                    reward=outcome.reward,
                    cost_t=outcome.cost_t,
                    cost_phi=outcome.cost_phi,
                    next_state=next_n,
                )
            )
            # Dual windows track the behavior trajectory (the system as
            # actually driven, exploration included).
            if constrained:
                lagrange.observe(outcome.next_state.t_s, outcome.next_state.phi_s)

            # Episode averages track the greedy steps, the learned
            # policy's own decisions; uniform exploration draws would
            # dominate the penalty trace at the epsilon floor and hide
            # policy convergence.
            if not explored:
                power_sum += outcome.p_f + outcome.p_c
                cost_t_sum += outcome.cost_t
                cost_phi_sum += outcome.cost_phi
                greedy_steps += 1

            if len(buffer) >= config.min_buffer_fill:
                states, acts, rewards, costs_t, costs_phi, next_states = buffer.sample(
                    config.batch_size, rng
                )
                q_next, _ = nn.forward_batch(target_net, next_states)
                boot = config.gamma * q_next.max(axis=1)
                if constrained:
                    y = (
                        rewards
                        - lagrange.lambda1 * costs_t
                        - lagrange.lambda2 * costs_phi
                        + boot
                    )
                else:
                    y = rewards - config.zeta1 * costs_t - config.zeta2 * costs_phi + boot
                q_pred, cache = nn.forward_batch(q_net, states)
                residual = y - q_pred[arange_batch, acts]
                loss = float(np.mean(residual**2))
                if not np.isfinite(loss):
                    raise FloatingPointError(
                        f"non-finite loss at step {global_step} of episode {episode}"
                    )
                grad_out = np.zeros_like(q_pred)
                grad_out[arange_batch, acts] = -2.0 * residual / config.batch_size
                grads = nn.backward(q_net, cache, grad_out)
                _, clipped = nn.clip_grad_norm(grads, config.grad_clip)
                n_clipped += int(clipped)
                nn.apply_update(q_net, grads, opt)
                nn.soft_blend(target_net, q_net, config.beta)
                n_updates += 1
                loss_sum += loss
                loss_count += 1
                if constrained:
                    lagrange.update(config.t_th, config.phi_th)
                    lambda_history.append((lagrange.lambda1, lagrange.lambda2))

            state_n = next_n
            global_step += 1

        nan = float("nan")
        log.append(
            EpisodeLog(
                episode=episode,
                mean_cooling_power_kW=power_sum / greedy_steps if greedy_steps else nan,
                mean_temp_penalty_C=cost_t_sum / greedy_steps if greedy_steps else nan,
                mean_rh_penalty_pct=cost_phi_sum / greedy_steps if greedy_steps else nan,
                epsilon=epsilon,
                lambda1=lagrange.lambda1 if constrained else 0.0,
                lambda2=lagrange.lambda2 if constrained else 0.0,
                loss=loss_sum / loss_count if loss_count else float("nan"),
            )
        )

    clip_fraction = n_clipped / n_updates if n_updates else 0.0
    if n_clipped:
        logger.info("gradient norm clip engaged on %.1f%% of updates", 100 * clip_fraction)
    return TrainResult(
        q_net=q_net,
        log=log,
        lambda_history=np.asarray(lambda_history) if constrained else np.empty((0, 2)),
        clip_fraction=clip_fraction,
        config=config,
    )


def train_udrl(env: FreeCooledDCEnv, config: TrainConfig) -> TrainResult:
    """Unconstrained training: fixed penalty weights folded into the reward."""
    if config.agent != "udrl":
        raise ValueError(f"config is for agent {config.agent!r}")
    return _train(env, config, constrained=False)


def train_cdrl(env: FreeCooledDCEnv, config: TrainConfig) -> TrainResult:
    """Constrained training: multipliers start at zero and track violations."""
    if config.agent != "cdrl":
        raise ValueError(f"config is for agent {config.agent!r}")
    return _train(env, config, constrained=True)


class GreedyPolicy:
    """Deterministic execution of a trained Q-network (no exploration)."""

    def __init__(self, q_net: nn.Mlp):
        if q_net.sizes[0] != STATE_DIM or q_net.sizes[-1] != N_ACTIONS:
            raise ValueError(f"unexpected Q-network shape {q_net.sizes}")
        self.q_net = q_net
        self._actions = action_space()

    def act(self, state: SystemState) -> ControlAction:
        q_values = nn.forward(self.q_net, state.normalized())
        return self._actions[int(np.argmax(q_values))]


def greedy_policy(q_net: nn.Mlp) -> GreedyPolicy:
    return GreedyPolicy(q_net)
