"""Trace-driven execution of a controller and the per-step/summary outputs.

The per-step CSV is the evaluation contract; the summary block is derived
from exactly the same rows, so summary means equal column means by
construction. Floats are written with shortest repr to keep reruns
byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .env import ControlAction, FreeCooledDCEnv, SystemState

EVAL_HEADER = (
    "minute,vdot_s_m3h,delta_t_c,alpha,t_s_c,phi_s_pct,"
    "p_f_kw,p_c_kw,p_it_kw,cost_t_c,cost_phi_pct"
)


class Controller(Protocol):
    def act(self, state: SystemState) -> ControlAction: ...


@dataclass(frozen=True)
class StepRecord:
    minute: int
    vdot_s: float
    delta_t: float
    alpha: float
    t_s: float
    phi_s: float
    p_f: float
    p_c: float
    p_it: float
    cost_t: float
    cost_phi: float


@dataclass(frozen=True)
class EvalSummary:
    steps: int
    mean_t_s: float
    std_t_s: float
    mean_phi_s: float
    std_phi_s: float
    mean_cooling_power_kW: float
    temp_violation_rate: float
    rh_violation_rate: float


def run_policy(env: FreeCooledDCEnv, controller: Controller, steps: int) -> list[StepRecord]:
    """Drive the controller from the start of the trace for `steps` periods."""
    env.reset(start=0)
    records: list[StepRecord] = []
    for _ in range(steps):
        minute = int(env.trace.minutes[env.cursor])
        action = controller.act(env.state)
        outcome = env.step(action)
        records.append(
            StepRecord(
                minute=minute,
                vdot_s=action.vdot_s,
                delta_t=action.delta_t,
                alpha=action.alpha,
                t_s=outcome.next_state.t_s,
                phi_s=outcome.next_state.phi_s,
                p_f=outcome.p_f,
                p_c=outcome.p_c,
                p_it=outcome.next_state.p_it,
                cost_t=outcome.cost_t,
                cost_phi=outcome.cost_phi,
            )
        )
    return records


def summarize(records: list[StepRecord]) -> EvalSummary:
    if not records:
        raise ValueError("no records to summarize")
    t_s = np.array([r.t_s for r in records])
    phi_s = np.array([r.phi_s for r in records])
    cooling = np.array([r.p_f + r.p_c for r in records])
    return EvalSummary(
        steps=len(records),
        mean_t_s=float(t_s.mean()),
        std_t_s=float(t_s.std()),
        mean_phi_s=float(phi_s.mean()),
        std_phi_s=float(phi_s.std()),
        mean_cooling_power_kW=float(cooling.mean()),
        temp_violation_rate=float(np.mean([r.cost_t > 0 for r in records])),
        rh_violation_rate=float(np.mean([r.cost_phi > 0 for r in records])),
    )


def write_step_csv(path: str, records: list[StepRecord]) -> None:
    with open(path, "w") as fh:
        fh.write(EVAL_HEADER + "\n")
        for r in records:
            fh.write(
                f"{r.minute},{r.vdot_s!r},{r.delta_t!r},{r.alpha!r},"
                f"{r.t_s!r},{r.phi_s!r},{r.p_f!r},{r.p_c!r},{r.p_it!r},"
                f"{r.cost_t!r},{r.cost_phi!r}\n"
            )


def write_summary_csv(path: str, summary: EvalSummary) -> None:
    with open(path, "w") as fh:
        fh.write("metric,value\n")
        fh.write(f"steps,{summary.steps}\n")
        fh.write(f"mean_t_s_c,{summary.mean_t_s!r}\n")
        fh.write(f"std_t_s_c,{summary.std_t_s!r}\n")
        fh.write(f"mean_phi_s_pct,{summary.mean_phi_s!r}\n")
        fh.write(f"std_phi_s_pct,{summary.std_phi_s!r}\n")
        fh.write(f"mean_cooling_power_kW,{summary.mean_cooling_power_kW!r}\n")
        fh.write(f"temp_violation_rate,{summary.temp_violation_rate!r}\n")
        fh.write(f"rh_violation_rate,{summary.rh_violation_rate!r}\n")
