"""Self-checks wiring the independent verification routes together.

These are the fast invariant checks behind the `validate` CLI command:
solver equivalence on randomized inputs, the moisture identity,
finite-difference gradient checks, exact power-model arithmetic, action
space bijection, and bit-exact target blending. Each check returns a
result row; the CLI turns failures into a nonzero exit code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn, power, psychro
from .env import ControlAction, action_index, action_space


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def sample_steady_state_inputs(
    n: int, rng: np.random.Generator, alpha_max: float = 0.9
) -> list[psychro.SteadyStateInput]:
    """Randomized solver inputs spanning the standard operating ranges."""
    inputs = []
    for _ in range(n):
        t_o = rng.uniform(23.0, 37.0)
        inputs.append(
            psychro.SteadyStateInput(
                supply_init=psychro.MoistAirState(
                    t=rng.uniform(18.0, 45.0), rh=rng.uniform(30.0, 100.0)
                ),
                outside=psychro.MoistAirState(t=t_o, rh=rng.uniform(50.0, 100.0)),
                vdot_s=rng.uniform(2000.0, 10000.0),
                delta_t=rng.uniform(0.0, 15.0),
                alpha=rng.uniform(0.0, alpha_max),
                p_it=rng.uniform(6.0, 60.0),
            )
        )
    return inputs


def check_oracle_equivalence(
    n: int = 1000,
    seed: int = 0,
    eps_h: float = 1e-6,
    eps_w: float = 1e-10,
    tol_t: float = 0.01,
    tol_rh: float = 0.1,
) -> CheckResult:
    """Iterative and closed-form solvers must agree on randomized inputs."""
    rng = np.random.default_rng(seed)
    max_dt = max_drh = 0.0
    for inp in sample_steady_state_inputs(n, rng):
        it = psychro.steady_state_iterative(inp, eps_h=eps_h, eps_w=eps_w)
        cf = psychro.steady_state_closed_form(inp)
        max_dt = max(max_dt, abs(it.state.t - cf.state.t))
        max_drh = max(max_drh, abs(it.state.rh - cf.state.rh))
    passed = max_dt < tol_t and max_drh < tol_rh
    return CheckResult(
        "psychro oracle equivalence",
        passed,
        f"max |dt|={max_dt:.2e} C (tol {tol_t}), max |drh|={max_drh:.2e} % (tol {tol_rh}), n={n}",
    )


def check_moisture_identity(n: int = 1000, seed: int = 1, tol: float = 1e-9) -> CheckResult:
    """Converged supply humidity ratio must equal the outside one."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for inp in sample_steady_state_inputs(n, rng):
        it = psychro.steady_state_iterative(inp)
        w_o = psychro.humidity_ratio(inp.outside)
        worst = max(worst, abs(it.props.w - w_o))
    return CheckResult(
        "moisture identity", worst < tol, f"max |w_s - w_o|={worst:.2e} kg/kg (tol {tol})"
    )


def gradient_check_mlp(
    sizes: list[int],
    rng: np.random.Generator,
    n_coords: int = 40,
    h: float = 1e-5,
    batch: int = 3,
) -> float:
    """Relative error between backprop and central differences.

    The loss is squared error against a random target batch, averaged
    over the batch. n_coords randomly chosen parameters are perturbed and
    the norm-relative error ||analytic - numeric|| / ||analytic|| over
    those coordinates is returned (per-coordinate ratios on near-zero
    gradients only measure the cancellation noise of the difference
    quotient, not backprop).
    """
    net = nn.init_mlp(sizes, rng)
    x = rng.random((batch, sizes[0]))
    target = rng.standard_normal((batch, sizes[-1]))

    def loss_value() -> float:
        y, _ = nn.forward_batch(net, x)
        return float(np.sum((y - target) ** 2) / batch)

    y, cache = nn.forward_batch(net, x)
    grad_out = 2.0 * (y - target) / batch
    grads = nn.backward(net, cache, grad_out)

    params = net.weights + net.biases
    grad_arrays = grads.weights + grads.biases
    analytic = np.empty(n_coords)
    numeric = np.empty(n_coords)
    for c in range(n_coords):
        layer = int(rng.integers(0, len(params)))
        flat = params[layer].reshape(-1)
        gflat = grad_arrays[layer].reshape(-1)
        j = int(rng.integers(0, flat.size))
        orig = flat[j]
        flat[j] = orig + h
        lp = loss_value()
        flat[j] = orig - h
        lm = loss_value()
        flat[j] = orig
        numeric[c] = (lp - lm) / (2.0 * h)
        analytic[c] = gflat[j]
    denom = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)), 1e-12)
    return float(np.linalg.norm(analytic - numeric)) / denom


def check_gradients(n_nets: int = 5, seed: int = 2, tol: float = 1e-5) -> CheckResult:
    rng = np.random.default_rng(seed)
    sizes = [5, 128, 64, 32, 880]
    worst = max(gradient_check_mlp(sizes, rng) for _ in range(n_nets))
    return CheckResult(
        "gradient check", worst < tol, f"max rel err={worst:.2e} over {n_nets} nets (tol {tol})"
    )


def check_power_models() -> CheckResult:
    """Coil exactness and linearity, fan boundary values and monotonicity."""
    constants = psychro.DEFAULT_CONSTANTS
    coil = power.CoilModel(xi=2.0)
    expected = constants.c_p * constants.rho * (10000.0 / 3600.0) * 15.0 / coil.xi
    got = power.coil_power(10000.0, 15.0, coil)
    rel = abs(got - expected) / expected
    linear_ok = True
    for vdot in (2000.0, 5000.0, 10000.0):
        for dt in (1.0, 3.0, 7.5):
            a = power.coil_power(vdot, dt, coil)
            if abs(power.coil_power(vdot, 2 * dt, coil) - 2 * a) > 1e-12 * abs(a):
                linear_ok = False
            if abs(power.coil_power(2 * vdot, dt, coil) - 2 * a) > 1e-12 * abs(a):
                linear_ok = False
    fan = power.FanModel()
    flows = np.linspace(0.0, fan.vdot_max, 101)
    powers = [power.fan_power(v, fan) for v in flows]
    fan_ok = all(b >= a for a, b in zip(powers, powers[1:]))
    fan_ok = fan_ok and powers[0] == 0.0 and powers[-1] == fan.p_max
    passed = rel < 1e-9 and linear_ok and fan_ok
    return CheckResult(
        "power model identities",
        passed,
        f"coil rel err={rel:.2e}, linearity={'ok' if linear_ok else 'BAD'}, "
        f"fan monotone={'ok' if fan_ok else 'BAD'}",
    )


def check_action_space() -> CheckResult:
    actions = action_space()
    ok = len(actions) == 880
    ok = ok and actions[0] == ControlAction(2000.0, 0.0, 0.0)
    ok = ok and actions[879] == ControlAction(10000.0, 15.0, 1.0)
    ok = ok and all(action_index(a) == i for i, a in enumerate(actions))
    ok = ok and len({(a.vdot_s, a.delta_t, a.alpha) for a in actions}) == 880
    return CheckResult("action space", ok, f"{len(actions)} actions, bijective indexing")


def check_soft_blend(seed: int = 3) -> CheckResult:
    rng = np.random.default_rng(seed)
    source = nn.init_mlp([5, 16, 8], rng)
    target = nn.init_mlp([5, 16, 8], rng)
    expect = [
        0.01 * ps + 0.99 * pt
        for ps, pt in zip(source.weights + source.biases, target.weights + target.biases)
    ]
    nn.soft_blend(target, source, 0.01)
    ok = all(
        np.array_equal(e, p) for e, p in zip(expect, target.weights + target.biases)
    )
    return CheckResult("soft target blend", ok, "bit-exact beta*source + (1-beta)*target")


def check_round_trip(n: int = 200, seed: int = 4) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_t = worst_rh = 0.0
    for _ in range(n):
        s = psychro.MoistAirState(t=rng.uniform(-10.0, 60.0), rh=rng.uniform(0.0, 100.0))
        w = psychro.humidity_ratio(s)
        back, supersat = psychro.state_from_props(psychro.enthalpy(s.t, w), w)
        if supersat:
            continue
        worst_t = max(worst_t, abs(back.t - s.t))
        worst_rh = max(worst_rh, abs(back.rh - s.rh))
    passed = worst_t < 1e-9 and worst_rh < 1e-7
    return CheckResult(
        "(t, rh) <-> (h, w) round trip", passed, f"max |dt|={worst_t:.2e}, |drh|={worst_rh:.2e}"
    )


def run_validation(n_random: int = 1000, eps_h: float = 1e-6, eps_w: float = 1e-10) -> list[CheckResult]:
    """The full check suite; tolerance overrides exist for sabotage testing."""
    return [
        check_oracle_equivalence(n=n_random, eps_h=eps_h, eps_w=eps_w),
        check_moisture_identity(n=min(n_random, 300)),
        check_gradients(),
        check_power_models(),
        check_action_space(),
        check_soft_blend(),
        check_round_trip(),
    ]
