"""MLP surrogates of the state evolution, trained on simulator labels.

The regressors take the current supply and outside conditions plus the
action and IT power, and predict the next supply temperature and RH. The
psychrometric model both generates the labels and stays the training and
evaluation environment for the control agents; surrogate predictions are
never fed back into the control loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn, power, psychro
from .env import ControlAction, action_space
from .psychro import MoistAirState, SteadyStateInput
from .traces import WeatherTrace

FEATURES = ("t_s", "phi_s", "t_o", "phi_o", "vdot_s", "p_it", "delta_t", "alpha")

RMSE_REPORT_HEADER = "model,n_train,n_test,rmse,epochs,seed"

# Paper-shaped surrogate: 20 rectifier layers of 5 neurons. Deep narrow
# stacks can collapse under unlucky inits, so a wider fallback is kept as
# the documented substitution.
PAPER_HIDDEN = (5,) * 20
FALLBACK_HIDDEN = (64, 64, 32)


@dataclass(frozen=True)
class SurrogateDataset:
    x: np.ndarray      # (n, 8) feature rows in FEATURES order
    y_t: np.ndarray    # (n,) next supply temperature, deg C
    y_phi: np.ndarray  # (n,) next supply RH, percent

    def __len__(self) -> int:
        return len(self.x)


def sample_grid_action(rng: np.random.Generator) -> ControlAction:
    """Uniform draw over the control grid with alpha = 1 excluded."""
    candidates = [a for a in action_space() if a.alpha < 1.0]
    return candidates[int(rng.integers(0, len(candidates)))]


def generate_dataset(
    trace: WeatherTrace,
    n_samples: int,
    seed: int,
    action_sampler=sample_grid_action,
    p_it_range: tuple[float, float] = (20.0, 40.0),
    eta: float = 1.0,
) -> SurrogateDataset:
    """Feature/label rows with labels from the iterative steady-state solver.

    Ambient rows are drawn uniformly from the trace and IT power from the
    synthetic workload's realistic envelope; the initial supply condition
    is randomized but does not influence the converged label.
    """
    trace.validate()
    rng = np.random.default_rng(seed)
    x = np.empty((n_samples, len(FEATURES)))
    y_t = np.empty(n_samples)
    y_phi = np.empty(n_samples)
    for i in range(n_samples):
        row = int(rng.integers(0, len(trace)))
        t_o = float(trace.t_o[row])
        phi_o = float(trace.rh_o[row])
        t_s = float(np.clip(t_o + rng.uniform(-8.0, 12.0), psychro.T_MIN, psychro.T_MAX))
        phi_s = float(rng.uniform(30.0, 100.0))
        action = action_sampler(rng)
        p_it = float(rng.uniform(*p_it_range))
        solved = psychro.steady_state_iterative(
            SteadyStateInput(
                supply_init=MoistAirState(t_s, phi_s),
                outside=MoistAirState(t_o, phi_o),
                vdot_s=action.vdot_s,
                delta_t=action.delta_t,
                alpha=action.alpha,
                p_it=p_it,
                eta=eta,
            )
        )
        x[i] = (t_s, phi_s, t_o, phi_o, action.vdot_s, p_it, action.delta_t, action.alpha)
        y_t[i] = solved.state.t
        y_phi[i] = solved.state.rh
    return SurrogateDataset(x=x, y_t=y_t, y_phi=y_phi)


def fit_regressor(
    x_train: np.ndarray,
    y_train: np.ndarray,
    hidden: tuple[int, ...],
    epochs: int,
    seed: int,
    batch_size: int = 128,
    lr: float = 0.001,
) -> nn.ScaledMlp:
    """Min-max-normalized MLP regression with the adaptive-moment optimizer."""
    x_train = np.asarray(x_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    if y_train.ndim == 1:
        y_train = y_train[:, None]
    if len(x_train) == 0:
        raise ValueError("empty training set")
    x_lo, x_hi = x_train.min(axis=0), x_train.max(axis=0)
    y_lo, y_hi = y_train.min(axis=0), y_train.max(axis=0)
    x_span = np.where(x_hi > x_lo, x_hi - x_lo, 1.0)
    y_span = np.where(y_hi > y_lo, y_hi - y_lo, 1.0)
    xn = (x_train - x_lo) / x_span
    yn = (y_train - y_lo) / y_span

    rng = np.random.default_rng(seed)
    sizes = [x_train.shape[1], *hidden, y_train.shape[1]]
    net = nn.init_mlp(sizes, rng)
    opt = nn.Adam(lr=lr)
    n = len(xn)
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            pred, cache = nn.forward_batch(net, xn[idx])
            resid = pred - yn[idx]
            loss = float(np.mean(resid**2))
            if not np.isfinite(loss):
                raise FloatingPointError("non-finite surrogate training loss")
            grads = nn.backward(net, cache, 2.0 * resid / resid.size)
            nn.apply_update(net, grads, opt)
    return nn.ScaledMlp(net=net, x_lo=x_lo, x_hi=x_hi, y_lo=y_lo, y_hi=y_hi)


def rmse(model: nn.ScaledMlp, x: np.ndarray, y: np.ndarray) -> float:
    pred = model.predict(x)[:, 0]
    return float(np.sqrt(np.mean((pred - np.asarray(y)) ** 2)))


@dataclass(frozen=True)
class RmseRow:
    model: str
    n_train: int
    n_test: int
    rmse: float
    epochs: int
    seed: int


@dataclass
class SurrogateResult:
    model_t: nn.ScaledMlp
    model_phi: nn.ScaledMlp
    report: list[RmseRow]


def train_surrogates(
    dataset: SurrogateDataset,
    hidden: tuple[int, ...] = PAPER_HIDDEN,
    epochs: int = 1000,
    seed: int = 0,
    n_train: int | None = None,
    batch_size: int = 128,
    lr: float = 0.001,
) -> SurrogateResult:
    """Fit the two supply-condition regressors and report held-out RMSE.

    The first n_train rows train, the remainder validates (the dataset
    rows are already in random generation order). The architecture is
    recorded in the report's model names so substitutions stay visible.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if n_train is None:
        n_train = (2 * len(dataset)) // 3
    if not 0 < n_train < len(dataset):
        raise ValueError(f"n_train={n_train} must split {len(dataset)} rows")
    arch = "x".join(str(h) for h in hidden)
    x_tr, x_te = dataset.x[:n_train], dataset.x[n_train:]
    report = []
    models = {}
    for name, y in (("mlp_ts", dataset.y_t), ("mlp_phis", dataset.y_phi)):
        model = fit_regressor(
            x_tr, y[:n_train], hidden, epochs, seed, batch_size=batch_size, lr=lr
        )
        models[name] = model
        report.append(
            RmseRow(
                model=f"{name}[{arch}]",
                n_train=n_train,
                n_test=len(dataset) - n_train,
                rmse=rmse(model, x_te, y[n_train:]),
                epochs=epochs,
                seed=seed,
            )
        )
    return SurrogateResult(model_t=models["mlp_ts"], model_phi=models["mlp_phis"], report=report)


def write_rmse_report(path: str, rows: list[RmseRow]) -> None:
    with open(path, "w") as fh:
        fh.write(RMSE_REPORT_HEADER + "\n")
        for r in rows:
            fh.write(f"{r.model},{r.n_train},{r.n_test},{r.rmse!r},{r.epochs},{r.seed}\n")


def fit_it_model(
    base_model: power.ItModel,
    n_steps: int = 4000,
    epochs: int = 200,
    seed: int = 0,
    hidden: tuple[int, ...] = (10,) * 5,
) -> tuple[power.ItModel, float, float]:
    """Train the learned IT-power regressor on a synthetic rollout.

    Returns the learned model plus held-out RMSE and the held-out mean
    power, so callers can judge the fit relative to the load level.
    """
    rng = np.random.default_rng(seed)
    k = base_model.k_hist
    vdots = np.array([2000.0, 4000.0, 6000.0, 8000.0, 10000.0])
    flows = vdots[rng.integers(0, len(vdots), size=n_steps)]
    powers = np.empty(n_steps + 1)
    powers[0] = base_model.base
    history = [base_model.base] * k
    for j in range(n_steps):
        p_next = power.it_power_next(history, float(flows[j]), base_model, rng, step=j)
        powers[j + 1] = p_next
        history = history[1:] + [p_next]
    x = np.empty((n_steps - k, k + 1))
    y = np.empty(n_steps - k)
    for j in range(k, n_steps):
        x[j - k, :k] = powers[j - k + 1 : j + 1]
        x[j - k, k] = flows[j]
        y[j - k] = powers[j + 1]
    n_train = (4 * len(x)) // 5
    net = fit_regressor(x[:n_train], y[:n_train], hidden, epochs, seed)
    err = rmse(net, x[n_train:], y[n_train:])
    learned = power.ItModel(
        k_hist=k,
        mode="learned",
        base=base_model.base,
        vdot_max=base_model.vdot_max,
        net=net,
    )
    return learned, err, float(np.mean(y[n_train:]))
