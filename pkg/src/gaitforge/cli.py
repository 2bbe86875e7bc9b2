"""Command-line entry points: train, eval, export, inspect, config-default.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 checkpoint
error, 5 trace error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import es as es_mod
from . import figures, trace
from .baseline import BaselineController
from .bridge import BridgeClient, BridgeEnv, BridgeError
from .config import ConfigError, default_config, dump_config, load_config
from .env import PushEvent
from .policy import PolicyEvaluator, normalize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_CHECKPOINT = 4
EXIT_TRACE = 5


def _load_config_arg(path: str | None):
    if path is None:
        return default_config()
    return load_config(path)


def cmd_train(args) -> int:
    try:
        cfg = _load_config_arg(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        import dataclasses

        cfg = dataclasses.replace(cfg, es=dataclasses.replace(cfg.es, seed=args.seed))

    def progress(iteration, mean_ret, max_ret, mean_ticks):
        print(
            f"iter {iteration:4d}  mean {mean_ret:10.1f}  max {max_ret:10.1f}  "
            f"ticks {mean_ticks:7.1f}",
            flush=True,
        )

    try:
        cp = es_mod.train(cfg, args.out, workers=args.workers, progress=progress)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"done: iteration {cp.iteration}, best return {cp.best_return:.1f}")
    return EXIT_OK


def _make_controller(args, cfg, checkpoint):
    if args.controller == "baseline":
        ctl = BaselineController(cfg.action_bounds())
        return lambda obs: ctl(obs)
    evaluator = PolicyEvaluator(checkpoint.policy_params())
    norm = cfg.normalization
    return lambda obs: evaluator.forward(normalize(obs, norm))


def cmd_eval(args) -> int:
    try:
        cfg = _load_config_arg(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    checkpoint = None
    if args.controller == "policy":
        if args.checkpoint is None:
            print("eval with the policy controller needs --checkpoint", file=sys.stderr)
            return EXIT_CONFIG
        try:
            checkpoint = es_mod.load_checkpoint(args.checkpoint)
        except OSError as exc:
            print(f"I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
        except (es_mod.CheckpointVersionError, ValueError) as exc:
            print(f"checkpoint error: {exc}", file=sys.stderr)
            return EXIT_CHECKPOINT

    push = None
    if args.push_fx or args.push_fy:
        push = PushEvent(
            start=args.push_at, duration=args.push_duration,
            force_x=args.push_fx, force_y=args.push_fy,
        )

    if args.env == "bridge":
        try:
            client = BridgeClient(args.addr, mode=args.bridge_mode)
            env = BridgeEnv(client, cfg)
        except (OSError, BridgeError) as exc:
            print(f"bridge error: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        env = cfg.make_env()

    controller = _make_controller(args, cfg, checkpoint)
    ticks_wanted = int(round(args.duration / cfg.env.control_dt))

    try:
        obs = env.reset(seed=args.seed, v_desired=(args.v_x, args.v_y))
    except BridgeError as exc:
        print(f"bridge error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if push is not None and ticks_wanted > 0:
        env.apply_push(push)

    fell = False
    speed_err = []
    lat_err = []
    try:
        with trace.TraceWriter(args.trace) as writer:
            for _ in range(ticks_wanted):
                action = controller(obs)
                result = env.step(action)
                writer.write(trace.trace_record(env, result, action))
                obs = result.observation
                speed_err.append(abs(result.aux.v_x_avg - args.v_x))
                lat_err.append(abs(result.aux.v_y_avg - args.v_y))
                if result.terminated:
                    fell = env.tick < min(ticks_wanted, cfg.env.max_ticks)
                    break
    except (OSError, BridgeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    finally:
        if args.env == "bridge":
            env.client.close()

    mean_err = float(np.mean(speed_err)) if speed_err else 0.0
    mean_lat = float(np.mean(lat_err)) if lat_err else 0.0
    print(f"ticks: {len(speed_err)}")
    print(f"mean |v_x error|: {mean_err:.4f} m/s")
    print(f"mean |v_y error|: {mean_lat:.4f} m/s")
    print(f"fell: {'yes' if fell else 'no'}")
    return EXIT_OK


def cmd_export(args) -> int:
    try:
        records = trace.read_trace(args.trace)
        exporter = trace.EXPORT_KINDS[args.kind]
        if args.kind == "limit-cycle" and args.joints:
            header, rows = exporter(records, joints=args.joints.split(","))
        else:
            header, rows = exporter(records)
    except trace.TraceError as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_TRACE

    out_csv = Path(args.out) if args.out else Path(args.trace).with_suffix(f".{args.kind}.csv")
    try:
        trace.write_csv(out_csv, header, rows)
        print(f"wrote {out_csv} ({len(rows)} rows)")
        if not args.no_figure and rows:
            out_png = out_csv.with_suffix(".png")
            figures.RENDERERS[args.kind](header, rows, out_png)
            print(f"wrote {out_png}")
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_inspect(args) -> int:
    if args.checkpoint is not None:
        try:
            cp = es_mod.load_checkpoint(args.checkpoint)
        except OSError as exc:
            print(f"I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
        except (es_mod.CheckpointVersionError, ValueError) as exc:
            print(f"checkpoint error: {exc}", file=sys.stderr)
            return EXIT_CHECKPOINT
        arch = cp.arch
        print(f"checkpoint: {args.checkpoint}")
        print(f"iteration: {cp.iteration}")
        print(f"seed: {cp.seed}")
        print(f"best return: {cp.best_return}")
        print(f"architecture: {arch.input_dim} -> {list(arch.hidden)} -> {arch.output_dim}")
        print(f"parameters: {arch.param_count()}")
        return EXIT_OK
    try:
        cfg = _load_config_arg(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    from .policy import DEFAULT_ARCH

    bounds = cfg.action_bounds()
    print(f"architecture: {DEFAULT_ARCH.input_dim} -> {list(DEFAULT_ARCH.hidden)} "
          f"-> {DEFAULT_ARCH.output_dim}")
    print(f"parameters: {DEFAULT_ARCH.param_count()}")
    print(f"action channels: {len(bounds.lo)} "
          f"(32 coefficients + 5 kd + 4 foot placement + 4 torso)")
    print("decoder bounds per learned joint:")
    from .config import LEARNED_JOINT_NAMES

    for name in LEARNED_JOINT_NAMES:
        lo, hi = cfg.decoder.coefficient_bounds[name]
        print(f"  {name:18s} [{lo:+.3f}, {hi:+.3f}]")
    return EXIT_OK


def cmd_config_default(args) -> int:
    text = dump_config(default_config())
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            print(f"I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaitforge",
        description="Gait learning for 3D bipedal walking on a reduced-order surrogate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run evolution-strategies training")
    p.add_argument("--config", help="run configuration JSON (defaults if omitted)")
    p.add_argument("--out", required=True, help="output directory for checkpoints and log")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--workers", type=int, default=None,
                   help="parallel rollout workers (default GAITFORGE_THREADS or 1)")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="roll a policy and write an episode trace")
    p.add_argument("--checkpoint", help="checkpoint JSON to evaluate")
    p.add_argument("--config", help="run configuration JSON")
    p.add_argument("--controller", choices=["policy", "baseline"], default="policy")
    p.add_argument("--v-x", type=float, default=0.0, help="commanded forward speed m/s")
    p.add_argument("--v-y", type=float, default=0.0, help="commanded lateral speed m/s")
    p.add_argument("--duration", type=float, default=10.0, help="episode length in seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", required=True, help="output JSONL trace path")
    p.add_argument("--push-at", type=float, default=2.0, help="push start time s")
    p.add_argument("--push-duration", type=float, default=0.1, help="push duration s")
    p.add_argument("--push-fx", type=float, default=0.0, help="push force x N")
    p.add_argument("--push-fy", type=float, default=0.0, help="push force y N")
    p.add_argument("--env", choices=["surrogate", "bridge"], default="surrogate")
    p.add_argument("--addr", default="127.0.0.1:7787", help="bridge server address")
    p.add_argument("--bridge-mode", choices=["raw", "torque"], default="torque")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("export", help="export plot-ready CSV (+ figure) from a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--kind", choices=sorted(trace.EXPORT_KINDS), required=True)
    p.add_argument("--out", help="output CSV path (default: next to the trace)")
    p.add_argument("--joints", help="comma-separated joints for limit-cycle export")
    p.add_argument("--no-figure", action="store_true", help="skip the PNG figure")
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("inspect", help="print architecture, bounds, checkpoint metadata")
    p.add_argument("--checkpoint")
    p.add_argument("--config")
    p.set_defaults(fn=cmd_inspect)

    p = sub.add_parser("config-default", help="dump the default run configuration")
    p.add_argument("--out", help="write to a file instead of stdout")
    p.set_defaults(fn=cmd_config_default)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
