"""Command line entry point: ``leohap {train,evaluate,baselines}``.

Each run writes into ``--out`` a ``manifest.json`` holding the full config
snapshot (SI units), the seed and the list of produced files. Feeding the
snapshot back through ``--config`` reproduces the run.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path
from typing import List, Optional

from . import __version__
from .agent import TrainingDiverged, evaluate, train
from .baselines import SCHEMES, compare_schemes, write_comparison, write_scheme_traces
from .config import ConfigError, dump_config, load_config, parse_config, with_iterations
from .env import KM, calibrate_reward, write_trace
from .neural import load_checkpoint, save_checkpoint

log = logging.getLogger("leohap")


class CliError(Exception):
    def __init__(self, msg: str, code: int = 2):
        super().__init__(msg)
        self.code = code


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Manifest:
    def __init__(self, out: Path, command: str, argv: List[str], config_ini: str, seed=None):
        self.path = out / "manifest.json"
        self.out = out
        self.t0 = time.time()
        self.planned = {}
        self.doc = {
            "tool": "leohap",
            "version": __version__,
            "command": command,
            "argv": argv,
            "seed": seed,
            "config_ini": config_ini,
            "outputs": {},
            "status": "running",
            "started_unix": self.t0,
        }

    def write(self) -> None:
        self.doc["planned_outputs"] = dict(self.planned)
        # only list files that exist right now
        self.doc["outputs"] = {k: v for k, v in self.planned.items() if (self.out / v).exists()}
        _write_atomic(self.path, json.dumps(self.doc, indent=2) + "\n")

    def add(self, key: str, name: str) -> None:
        self.planned[key] = name

    def finish(self, status: str, **extra) -> None:
        self.doc["status"] = status
        self.doc["wall_seconds"] = time.time() - self.t0
        self.doc.update(extra)
        self.write()


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _load_cfg(path: Optional[str]):
    if path is None:
        raise CliError("--config is required")
    try:
        return load_config(path)
    except ConfigError as exc:
        raise CliError(str(exc)) from exc


def _load_ckpt(path: str):
    try:
        return load_checkpoint(path)
    except FileNotFoundError as exc:
        raise CliError(f"checkpoint not found: {path}") from exc
    except (ValueError, OSError) as exc:
        raise CliError(f"{path}: {exc}") from exc


def cmd_train(args, argv) -> int:
    scenario, dqn = _load_cfg(args.config)
    if args.iterations is not None:
        if args.iterations < 0:
            raise CliError("--iterations must be >= 0")
        dqn = with_iterations(dqn, args.iterations)
    init = None
    if args.checkpoint is not None:
        init, _ = _load_ckpt(args.checkpoint)
    out = _out_dir(args.out)
    scenario = calibrate_reward(scenario)
    man = Manifest(out, "train", argv, dump_config(scenario, dqn), seed=args.seed)
    man.add("checkpoint", "checkpoint.json")
    man.add("training_log", "train_log.csv")
    man.add("episodes", "episodes.csv")
    if dqn.keep_best_every:
        man.add("greedy_evals", "greedy_evals.csv")
    man.write()
    try:
        params, tlog, _ = train(scenario, dqn, args.seed, init=init)
    except TrainingDiverged as exc:
        man.finish("diverged", error=str(exc))
        raise CliError(f"training diverged: {exc}", code=3) from exc
    except ValueError as exc:
        man.finish("failed", error=str(exc))
        raise CliError(str(exc)) from exc
    save_checkpoint(out / "checkpoint.json", params,
                    extra={"seed": args.seed, "config_ini": man.doc["config_ini"]})
    tlog.write_csv(out / "train_log.csv")
    with open(out / "episodes.csv", "w", newline="") as fh:
        fh.write("episode,mean_reward,mean_e2e_rate\n")
        for k, (r, c) in enumerate(zip(tlog.episode_rewards, tlog.episode_rates)):
            fh.write(f"{k},{r!r},{c!r}\n")
    if dqn.keep_best_every:
        with open(out / "greedy_evals.csv", "w", newline="") as fh:
            fh.write("iteration,greedy_mean_rate\n")
            for it, rate in tlog.greedy_evals:
                fh.write(f"{it},{rate!r}\n")
    man.finish("ok", episodes=len(tlog.episode_rewards), updates=len(tlog.losses),
               best_iteration=tlog.best_iteration)
    print(f"trained {dqn.total_iterations} iterations, {len(tlog.episode_rewards)} episodes -> {out}")
    return 0


def cmd_evaluate(args, argv) -> int:
    if args.checkpoint is None:
        raise CliError("--checkpoint is required")
    params, doc = _load_ckpt(args.checkpoint)
    if args.config is not None:
        scenario, dqn = _load_cfg(args.config)
    elif isinstance(doc.get("config_ini"), str):
        scenario, dqn = parse_config(doc["config_ini"], source=args.checkpoint)
    else:
        raise CliError("--config is required (checkpoint carries no config snapshot)")
    if args.episodes < 1:
        raise CliError("--episodes must be >= 1")
    out = _out_dir(args.out)
    scenario = calibrate_reward(scenario)
    man = Manifest(out, "evaluate", argv, dump_config(scenario, dqn))
    man.add("trace", "trace.csv")
    man.add("summary", "summary.json")
    man.write()
    try:
        ev = evaluate(params, scenario, episodes=args.episodes)
    except ValueError as exc:
        man.finish("failed", error=str(exc))
        raise CliError(f"checkpoint does not fit config: {exc}") from exc
    write_trace(out / "trace.csv", ev["trace"])
    summary = {
        "episodes": args.episodes,
        "mean_rate_bps": ev["mean_rate"],
        "spectral_efficiency": ev["mean_spectral_efficiency"],
        "mean_reward": ev["mean_reward"],
        "baseline_mu_bps": scenario.reward_mu,
    }
    _write_atomic(out / "summary.json", json.dumps(summary, indent=2) + "\n")
    man.finish("ok")
    print(f"mean E2E rate {ev['mean_rate']:.6g} bit/s, SE {ev['mean_spectral_efficiency']:.6g} bit/s/Hz")
    return 0


def cmd_baselines(args, argv) -> int:
    if args.all and args.scheme:
        raise CliError("use either --scheme or --all, not both")
    schemes = list(SCHEMES) if args.all or not args.scheme else args.scheme
    bad = [s for s in schemes if s not in SCHEMES]
    if bad:
        raise CliError(f"unknown scheme {bad[0]!r}; valid: {', '.join(SCHEMES)}")
    if not args.grid_step > 0:
        raise CliError("--grid-step must be > 0")
    scenario, dqn = _load_cfg(args.config)
    params = None
    if args.checkpoint is not None:
        params, _ = _load_ckpt(args.checkpoint)
    out = _out_dir(args.out)
    man = Manifest(out, "baselines", argv, dump_config(scenario, dqn))
    man.doc["grid_step_m"] = args.grid_step
    man.add("comparison_csv", "comparison.csv")
    man.add("comparison_json", "comparison.json")
    man.add("scheme_rates", "scheme_rates.csv")
    man.write()
    if params is not None:
        scenario = calibrate_reward(scenario)
    try:
        results = compare_schemes(scenario, params, args.grid_step, schemes)
    except ValueError as exc:
        man.finish("failed", error=str(exc))
        raise CliError(str(exc)) from exc
    write_comparison(results, out / "comparison.csv", out / "comparison.json")
    write_scheme_traces(out / "scheme_rates.csv", results)
    man.finish("ok")
    for r in results:
        print(f"{r.name:>13s}  SE {r.spectral_efficiency:.6g} bit/s/Hz")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="leohap", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"leohap {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a Q-network")
    t.add_argument("--config", required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.add_argument("--iterations", type=int, help="override total_iterations")
    t.add_argument("--checkpoint", help="warm-start from these weights")

    e = sub.add_parser("evaluate", help="greedy roll-out of a trained network")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--config", help="defaults to the snapshot stored in the checkpoint")
    e.add_argument("--out", required=True)
    e.add_argument("--episodes", type=int, default=1)

    b = sub.add_parser("baselines", help="reference schemes and the comparison table")
    b.add_argument("--config", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--scheme", action="append", help=f"one of {', '.join(SCHEMES)}; repeatable")
    b.add_argument("--all", action="store_true", help="run every scheme (default)")
    b.add_argument("--grid-step", type=float, default=95 * KM, help="sweep spacing in meters")
    b.add_argument("--checkpoint", help="also evaluate this trained network")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"train": cmd_train, "evaluate": cmd_evaluate, "baselines": cmd_baselines}[args.command]
    try:
        return handler(args, argv)
    except CliError as exc:
        print(f"leohap {args.command}: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
