"""Command-line entry point: synth, train, eval, validate.

Exit codes: 0 success, 2 usage error, 3 validation failure, 4 runtime
abort (non-finite training loss). Every command writes a config snapshot
sufficient to reproduce its delimited outputs byte for byte from the
same inputs.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import baselines, config as config_mod, drl, harness, nn, report, traces
from .env import STANDARD_PHI_TH, STANDARD_T_TH, FreeCooledDCEnv, Models, Thresholds

TRAINING_LOG_HEADER = (
    "episode,mean_cooling_power_kW,mean_temp_penalty_C,mean_rh_penalty_pct,"
    "epsilon,lambda1,lambda2,loss"
)


def _write_training_log(path: str, log: list[drl.EpisodeLog]) -> None:
    with open(path, "w") as fh:
        fh.write(TRAINING_LOG_HEADER + "\n")
        for row in log:
            fh.write(
                f"{row.episode},{row.mean_cooling_power_kW!r},{row.mean_temp_penalty_C!r},"
                f"{row.mean_rh_penalty_pct!r},{row.epsilon!r},{row.lambda1!r},"
                f"{row.lambda2!r},{row.loss!r}\n"
            )


def _coerce(value: str, typ) -> object:
    if typ == "bool":
        return value.lower() in ("1", "true", "yes", "on")
    if typ == "int":
        return int(value)
    if typ == "float":
        return float(value)
    if typ.startswith("tuple"):
        return tuple(int(v) for v in value.split(","))
    return value


def _config_from_file(cfg: drl.TrainConfig, path: str) -> drl.TrainConfig:
    """Apply key = value overrides from a config file onto the defaults."""
    raw = config_mod.parse_config_file(path)
    known = {f.name: f.type for f in fields(drl.TrainConfig)}
    overrides = {}
    for key, value in raw.items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        overrides[key] = _coerce(value, str(known[key]))
    return replace(cfg, **overrides)


def _check_thresholds(parser: argparse.ArgumentParser, args, t_th: float, phi_th: float) -> None:
    if args.allow_custom:
        return
    if t_th not in STANDARD_T_TH or phi_th not in STANDARD_PHI_TH:
        parser.error(
            f"thresholds ({t_th}, {phi_th}) outside the standard grids "
            f"{STANDARD_T_TH} x {STANDARD_PHI_TH}; pass --allow-custom to override"
        )


def cmd_synth(args) -> int:
    trace = traces.synth_weather(args.days, args.seed)
    traces.save_csv(args.out, trace)
    print(f"wrote {len(trace)} rows ({args.days} days) to {args.out}")
    return 0


def cmd_train(args, parser) -> int:
    _check_thresholds(parser, args, args.t_th, args.phi_th)
    cfg = drl.make_config(args.agent, profile=args.profile, seed=args.seed)
    if args.config:
        cfg = _config_from_file(cfg, args.config)
    overrides = {"t_th": args.t_th, "phi_th": args.phi_th}
    if args.episodes is not None:
        overrides["episodes"] = args.episodes
    if args.steps_per_episode is not None:
        overrides["steps_per_episode"] = args.steps_per_episode
    cfg = replace(cfg, **overrides)
    cfg.validate()

    trace = traces.load_csv(args.trace)
    models = Models()
    env_rng = np.random.default_rng(np.random.SeedSequence([args.seed, 0]))
    env = FreeCooledDCEnv(
        trace,
        Thresholds(cfg.t_th, cfg.phi_th),
        models,
        episode_len=cfg.steps_per_episode,
        rng=env_rng,
    )
    train = drl.train_udrl if args.agent == "udrl" else drl.train_cdrl
    result = train(env, cfg)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    snapshot = {
        "command": "train",
        "agent": args.agent,
        "profile": args.profile,
        "trace": args.trace,
        "trace_rows": len(trace),
        **{f.name: getattr(cfg, f.name) for f in fields(drl.TrainConfig)},
    }
    cfg_hash = config_mod.write_snapshot(str(out_dir / "config.txt"), snapshot)
    _write_training_log(str(out_dir / "training_log.csv"), result.log)
    nn.save_mlp(
        str(out_dir / "checkpoint.npz"),
        result.q_net,
        meta={
            "agent": args.agent,
            "t_th": cfg.t_th,
            "phi_th": cfg.phi_th,
            "seed": cfg.seed,
            "config_hash": cfg_hash,
            "state_norm": {"t": [15.0, 45.0], "rh": [0.0, 100.0], "p_it": [0.0, 90.0]},
        },
    )
    if not args.no_plot:
        report.save_training_figure(
            result.log,
            str(out_dir / "training_curves.png"),
            title=f"{args.agent} t_th={cfg.t_th} phi_th={cfg.phi_th} seed={cfg.seed}",
        )
    last = result.log[-1]
    print(
        f"trained {args.agent} for {cfg.episodes} episodes x {cfg.steps_per_episode} steps; "
        f"final episode: power {last.mean_cooling_power_kW:.3f} kW, "
        f"temp penalty {last.mean_temp_penalty_C:.3f} C, "
        f"rh penalty {last.mean_rh_penalty_pct:.3f} %"
    )
    print(f"outputs in {out_dir} (config hash {cfg_hash[:12]})")
    return 0


def _make_controller(policy: str, checkpoint: str | None, thresholds: Thresholds, models: Models):
    if policy in ("udrl", "cdrl"):
        if checkpoint is None:
            raise ValueError(f"policy {policy!r} requires --checkpoint")
        q_net, meta = nn.load_mlp(checkpoint)
        if meta.get("t_th") not in (None, thresholds.t_th) or meta.get("phi_th") not in (
            None,
            thresholds.phi_th,
        ):
            print(
                f"warning: checkpoint was trained at thresholds "
                f"({meta.get('t_th')}, {meta.get('phi_th')}), evaluating at "
                f"({thresholds.t_th}, {thresholds.phi_th})",
                file=sys.stderr,
            )
        return drl.GreedyPolicy(q_net)
    if policy == "hysteresis":
        return baselines.HysteresisController(thresholds)
    if policy == "oracle":
        return baselines.OneStepOracleController(thresholds, models)
    raise ValueError(f"unknown policy {policy!r}")


def _eval_one(task: dict) -> dict:
    """Evaluate one (policy, thresholds) pair; runs in a worker process."""
    trace = traces.load_csv(task["trace"])
    thresholds = Thresholds(task["t_th"], task["phi_th"])
    models = Models()
    controller = _make_controller(task["policy"], task["checkpoint"], thresholds, models)
    env = FreeCooledDCEnv(
        trace,
        thresholds,
        models,
        episode_len=task["steps"],
        rng=np.random.default_rng(task["seed"]),
    )
    records = harness.run_policy(env, controller, task["steps"])
    summary = harness.summarize(records)
    harness.write_step_csv(task["out"], records)
    harness.write_summary_csv(task["summary_out"], summary)
    if task["plot"]:
        report.save_eval_figure(
            records,
            thresholds,
            task["plot_out"],
            title=f"{task['policy']} t_th={task['t_th']} phi_th={task['phi_th']}",
        )
    return {
        "t_th": task["t_th"],
        "phi_th": task["phi_th"],
        "out": task["out"],
        "summary": summary,
    }


def cmd_eval(args, parser) -> int:
    t_ths = [float(v) for v in str(args.t_th).split(",")]
    phi_ths = [float(v) for v in str(args.phi_th).split(",")]
    for t in t_ths:
        for p in phi_ths:
            _check_thresholds(parser, args, t, p)
    if args.policy in ("udrl", "cdrl") and not args.checkpoint:
        parser.error(f"policy {args.policy!r} requires --checkpoint")

    out = Path(args.out)
    pairs = [(t, p) for t in t_ths for p in phi_ths]
    tasks = []
    for t, p in pairs:
        if len(pairs) == 1:
            pair_out = out
        else:
            pair_out = out.with_name(f"{out.stem}_tth{t:g}_phith{p:g}{out.suffix}")
        tasks.append(
            {
                "policy": args.policy,
                "checkpoint": args.checkpoint,
                "trace": args.trace,
                "t_th": t,
                "phi_th": p,
                "steps": args.steps,
                "seed": args.seed,
                "out": str(pair_out),
                "summary_out": str(pair_out.with_name(pair_out.stem + "_summary.csv")),
                "plot": not args.no_plot,
                "plot_out": str(pair_out.with_suffix(".png")),
            }
        )

    if args.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_eval_one, tasks))
    else:
        results = [_eval_one(task) for task in tasks]

    snapshot = {
        "command": "eval",
        "policy": args.policy,
        "checkpoint": args.checkpoint or "",
        "trace": args.trace,
        "t_th": args.t_th,
        "phi_th": args.phi_th,
        "steps": args.steps,
        "seed": args.seed,
        "workers": args.workers,
    }
    config_mod.write_snapshot(str(out.with_name(out.stem + "_config.txt")), snapshot)

    for res in results:
        s = res["summary"]
        print(
            f"[t_th={res['t_th']:g} phi_th={res['phi_th']:g}] "
            f"mean t_s {s.mean_t_s:.2f} +/- {s.std_t_s:.2f} C, "
            f"mean rh {s.mean_phi_s:.2f} +/- {s.std_phi_s:.2f} %, "
            f"mean cooling power {s.mean_cooling_power_kW:.3f} kW, "
            f"violations t {100 * s.temp_violation_rate:.1f}% / "
            f"rh {100 * s.rh_violation_rate:.1f}% -> {res['out']}"
        )
    return 0


def cmd_validate(args) -> int:
    from .validate import run_validation

    results = run_validation(n_random=args.n_random)
    width = max(len(r.name) for r in results)
    failures = 0
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        failures += 0 if r.passed else 1
        print(f"{mark}  {r.name:<{width}}  {r.detail}")
    if failures:
        print(f"{failures} check(s) failed")
        return 3
    print("all checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aircool",
        description="Trace-driven control simulator for tropical air free-cooled data centers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic weather trace CSV")
    p_synth.add_argument("--days", type=int, required=True)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True)

    p_train = sub.add_parser("train", help="train a DRL agent offline")
    p_train.add_argument("--agent", choices=("udrl", "cdrl"), required=True)
    p_train.add_argument("--trace", required=True)
    p_train.add_argument("--t-th", type=float, default=32.0)
    p_train.add_argument("--phi-th", type=float, default=80.0)
    p_train.add_argument("--profile", choices=("paper", "desk"), default="desk")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out-dir", required=True)
    p_train.add_argument("--config", help="key = value file overriding profile defaults")
    p_train.add_argument("--episodes", type=int, help="override episode count")
    p_train.add_argument("--steps-per-episode", type=int, help="override steps per episode")
    p_train.add_argument("--allow-custom", action="store_true")
    p_train.add_argument("--no-plot", action="store_true")

    p_eval = sub.add_parser("eval", help="run a policy over a trace")
    p_eval.add_argument(
        "--policy", choices=("udrl", "cdrl", "hysteresis", "oracle"), required=True
    )
    p_eval.add_argument("--checkpoint")
    p_eval.add_argument("--trace", required=True)
    p_eval.add_argument("--t-th", default="32", help="threshold or comma list")
    p_eval.add_argument("--phi-th", default="80", help="threshold or comma list")
    p_eval.add_argument("--steps", type=int, default=5000)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--workers", type=int, default=1)
    p_eval.add_argument("--allow-custom", action="store_true")
    p_eval.add_argument("--no-plot", action="store_true")

    p_val = sub.add_parser("validate", help="run the self-check suite")
    p_val.add_argument("--n-random", type=int, default=1000)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            if args.days < 1:
                parser.error("--days must be >= 1")
            return cmd_synth(args)
        if args.command == "train":
            return cmd_train(args, parser)
        if args.command == "eval":
            return cmd_eval(args, parser)
        if args.command == "validate":
            return cmd_validate(args)
    except FloatingPointError as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return 4
    except (ValueError, FileNotFoundError, traces.TraceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
