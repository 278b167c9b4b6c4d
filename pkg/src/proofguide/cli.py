"""Command-line front end: solve problems, train a policy, evaluate
checkpoints, verify proof dumps."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import corpus
from .engine import Limits, OutcomeKind, run_episode
from .features import VectorizerConfig
from .network import NetworkConfig, PolicyParameters
from .policies import AgeWeightPolicy, FIFOPolicy, NeuralPolicy, UniformRandomPolicy
from .tptp import ParseError, parse_file
from .training import (
    ExampleBuffer,
    RewardNormalization,
    TrainerConfig,
    TrainingContext,
    train_iteration,
)
from .verify import derivation_dump, proof_listing, verify_file

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_PARSE_ERROR = 2
EXIT_LIMIT = 3
EXIT_INTERNAL = 4


def _load_config_overrides(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def build_vectorizer_config(overrides: dict) -> VectorizerConfig:
    cfg = VectorizerConfig()
    v = overrides.get("vectorizer", {})
    if "chain_dim" in v:
        cfg.chain_dim = int(v["chain_dim"])
    if "walk_dims" in v:
        cfg.walk_dims = tuple(int(x) for x in v["walk_dims"])
    if "treat_constants_as_functions" in v:
        cfg.treat_constants_as_functions = bool(v["treat_constants_as_functions"])
    return cfg


def build_trainer_config(overrides: dict, seed: int) -> TrainerConfig:
    cfg = TrainerConfig(seed=seed)
    t = overrides.get("trainer", {})
    for name in (
        "entropy_weight",
        "tau",
        "tau0",
        "temperature_decay",
        "learning_rate",
        "batch_size",
        "epochs",
        "buffer_window",
        "decay_per_episode",
    ):
        if name in t:
            setattr(cfg, name, type(getattr(cfg, name))(t[name]))
    if "reward_normalization" in t:
        cfg.reward_normalization = RewardNormalization(t["reward_normalization"])
    return cfg


def build_network_config(overrides: dict, input_dim: int) -> NetworkConfig:
    cfg = NetworkConfig(input_dim=input_dim)
    n = overrides.get("network", {})
    for name in ("embed_width", "embed_layers", "dropout"):
        if name in n:
            setattr(cfg, name, type(getattr(cfg, name))(n[name]))
    return cfg


def make_policy(name: str, vcfg: VectorizerConfig, seed: int):
    if name == "baseline":
        return AgeWeightPolicy()
    if name == "random":
        return UniformRandomPolicy(np.random.default_rng(seed))
    if name == "fifo":
        return FIFOPolicy()
    params = PolicyParameters.load(name)
    return NeuralPolicy(params, vcfg)


def cmd_solve(args) -> int:
    overrides = _load_config_overrides(args.config)
    vcfg = build_vectorizer_config(overrides)
    limits = Limits(max_steps=args.max_steps, max_seconds=args.max_seconds)
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    exit_code = EXIT_OK
    for path in args.problems:
        try:
            problem = parse_file(path)
        except ParseError as exc:
            print(f"{path}: parse error: {exc}", file=sys.stderr)
            return EXIT_PARSE_ERROR
        policy = make_policy(args.policy, vcfg, args.seed)
        episode = run_episode(problem, policy, limits, problem_id=str(path))
        outcome = episode.outcome
        row = {
            "problem": str(path),
            "outcome": outcome.kind.value,
            "steps": episode.elapsed_steps,
            "proof_length": episode.proof_length,
            "wall_seconds": round(episode.elapsed_seconds, 3),
        }
        rows.append(row)
        print(f"{path}: {outcome.kind.value} in {episode.elapsed_steps} steps")
        if outcome.kind is OutcomeKind.REFUTATION:
            print(proof_listing(episode.state, outcome), end="")
            if out_dir:
                dump = derivation_dump(episode.state, outcome)
                stem = Path(path).stem
                with open(out_dir / f"{stem}.derivation.json", "w", encoding="utf-8") as fh:
                    json.dump(dump, fh, indent=1)
        elif outcome.kind in (OutcomeKind.STEP_LIMIT, OutcomeKind.TIME_LIMIT):
            if len(args.problems) == 1:
                exit_code = EXIT_LIMIT

    if out_dir:
        report = {
            "rows": rows,
            "solved": sum(r["outcome"] == "refutation" for r in rows),
            "total": len(rows),
        }
        with open(out_dir / "solve_report.json", "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=1)
    return exit_code


def _resolve_corpus(args):
    if args.problems:
        return [(str(p), parse_file(p)) for p in args.problems]
    names = corpus.TRAINABLE_PROBLEMS if args.corpus == "trainable" else corpus.UNSAT_PROBLEMS
    return corpus.load_corpus(names)


def cmd_train(args) -> int:
    overrides = _load_config_overrides(args.config)
    vcfg = build_vectorizer_config(overrides)
    tcfg = build_trainer_config(overrides, args.seed)
    ncfg = build_network_config(overrides, vcfg.dim)
    limits = Limits(max_steps=args.max_steps, max_seconds=args.max_seconds)
    out_dir = Path(args.out) if args.out else Path("train_out")
    out_dir.mkdir(parents=True, exist_ok=True)

    try:
        problems = _resolve_corpus(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR

    params = PolicyParameters.initialize(ncfg, seed=tcfg.seed)
    context = TrainingContext(params, tcfg)
    buffer = ExampleBuffer(tcfg.buffer_window)

    if tcfg.reward_normalization is RewardNormalization.BASELINE_STEPS:
        for pid, problem in problems:
            episode = run_episode(problem, AgeWeightPolicy(), limits, problem_id=pid)
            if episode.solved:
                context.rewards.baseline_steps[pid] = episode.elapsed_steps

    stats_rows = []
    for iteration in range(1, args.iterations + 1):
        stats, _ = train_iteration(
            problems, params, buffer, tcfg, vcfg, iteration, context, limits
        )
        stats_rows.append(stats.to_dict())
        params.save(out_dir / f"checkpoint_{iteration:03d}.json")
        print(json.dumps(stats.to_dict(), sort_keys=True))

    best = max((r["solved"] for r in stats_rows), default=0)
    report = {"iterations": stats_rows, "best_iteration_solved": best}
    with open(out_dir / "train_report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
    return EXIT_OK


def cmd_eval(args) -> int:
    overrides = _load_config_overrides(args.config)
    vcfg = build_vectorizer_config(overrides)
    limits = Limits(max_steps=args.max_steps, max_seconds=args.max_seconds)
    try:
        problems = _resolve_corpus(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    policy_name = args.policy
    rows = []
    for pid, problem in problems:
        policy = make_policy(policy_name, vcfg, args.seed)
        episode = run_episode(problem, policy, limits, problem_id=pid)
        rows.append(
            {
                "problem": pid,
                "outcome": episode.outcome.kind.value,
                "steps": episode.elapsed_steps,
                "proof_length": episode.proof_length,
            }
        )
    solved = sum(r["outcome"] == "refutation" for r in rows)
    report = {"rows": rows, "solved": solved, "total": len(rows)}
    print(json.dumps({"solved": solved, "total": len(rows)}))
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "eval_report.json", "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=1, sort_keys=True)
    return EXIT_OK


def cmd_verify(args) -> int:
    result = verify_file(args.dump)
    if result.ok:
        print(f"ok: {result.checked_steps} steps verified")
        return EXIT_OK
    print(f"FAIL: {result.message}", file=sys.stderr)
    return EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="proofguide")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--max-steps", type=int, default=2000)
        p.add_argument("--max-seconds", type=float, default=100.0)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", help="JSON config override file")
        p.add_argument("--out", help="output directory")

    p_solve = sub.add_parser("solve", help="solve one or more problems")
    p_solve.add_argument("problems", nargs="+")
    p_solve.add_argument("--policy", default="baseline",
                         help="baseline | random | fifo | path to checkpoint")
    add_common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_train = sub.add_parser("train", help="train a policy from scratch")
    p_train.add_argument("problems", nargs="*")
    p_train.add_argument("--corpus", default="trainable", choices=["trainable", "unsat"])
    p_train.add_argument("--iterations", type=int, default=10)
    add_common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a policy on a corpus")
    p_eval.add_argument("problems", nargs="*")
    p_eval.add_argument("--corpus", default="unsat", choices=["trainable", "unsat"])
    p_eval.add_argument("--policy", default="baseline")
    add_common(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_verify = sub.add_parser("verify", help="check a derivation dump")
    p_verify.add_argument("dump")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
