"""Policy-gradient training loop: rollouts with temperature-annealed
exploration, proof-based rewards, entropy-regularized loss, Adam updates
and a sliding window of training examples.
"""

from __future__ import annotations

import hashlib
import statistics
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .engine import Episode, Limits, OutcomeKind, run_episode
from .features import VectorizerConfig
from .network import Forward, PolicyParameters, StateFeatures
from .policies import ExampleSnapshot, NeuralPolicy
from .tptp import Problem


class RewardNormalization(Enum):
    NONE = "none"
    BASELINE_STEPS = "baseline_steps"
    RELATIVE_BEST = "relative_best"


@dataclass
class TrainerConfig:
    entropy_weight: float = 0.004      # lambda
    tau: float = 1.13
    tau0: int = 11
    temperature_decay: float = 0.9998
    learning_rate: float = 0.001
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    batch_size: int = 32
    epochs: int = 15
    buffer_window: int = 20            # w
    reward_normalization: RewardNormalization = RewardNormalization.NONE
    seed: int = 0
    decay_per_episode: bool = True

    def __post_init__(self) -> None:
        for name in ("tau", "learning_rate", "batch_size", "epochs", "buffer_window"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class TrainingExample:
    snapshot: ExampleSnapshot
    action_index: int
    reward: float
    iteration: int
    problem_id: str
    _feats: Optional[StateFeatures] = field(default=None, repr=False)

    def features(self) -> StateFeatures:
        """CSR view of the snapshot, built once and reused across epochs."""
        if self._feats is None:
            self._feats = _snapshot_to_features(self.snapshot)
        return self._feats


def _rows_to_csr(vecs, dim: int) -> sp.csr_matrix:
    data, indices, indptr = [], [], [0]
    for v in vecs:
        for idx in sorted(v.entries):
            indices.append(idx)
            data.append(v.entries[idx])
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int32), np.array(indptr, dtype=np.int32)),
        shape=(len(vecs), dim),
    )


def _snapshot_to_features(snap: ExampleSnapshot) -> StateFeatures:
    onehots = np.zeros((len(snap.rule_ids), 2))
    for i, r in enumerate(snap.rule_ids):
        onehots[i, r] = 1.0
    return StateFeatures(
        conjecture=_rows_to_csr(snap.conjecture, snap.dim),
        processed=_rows_to_csr(snap.processed, snap.dim),
        actions=_rows_to_csr(snap.actions, snap.dim),
        rule_onehots=onehots,
    )


def assign_rewards(episode: Episode, iteration: int) -> list[TrainingExample]:
    """Zero reward everywhere except proof steps of a refutation, which get
    1 / (episode step count): shorter searches earn more per step."""
    total_steps = len(episode.steps)
    proof_steps = episode.outcome.proof_steps if episode.solved else set()
    value = 1.0 / total_steps if episode.solved and total_steps else 0.0
    out = []
    for t, step in enumerate(episode.steps):
        if step.snapshot is None:
            continue
        out.append(
            TrainingExample(
                snapshot=step.snapshot,
                action_index=step.action_index,
                reward=value if t in proof_steps else 0.0,
                iteration=iteration,
                problem_id=episode.problem_id,
            )
        )
    return out


class RewardContext:
    """Per-problem records needed by the normalization modes."""

    def __init__(self) -> None:
        self.baseline_steps: dict[str, int] = {}
        self.best_reward: dict[str, float] = {}

    def observe(self, problem_id: str, examples: list[TrainingExample]) -> None:
        top = max((ex.reward for ex in examples), default=0.0)
        if top > self.best_reward.get(problem_id, 0.0):
            self.best_reward[problem_id] = top


def normalize_rewards(
    examples: list[TrainingExample],
    mode: RewardNormalization,
    context: RewardContext,
) -> list[TrainingExample]:
    if mode is RewardNormalization.NONE:
        return examples
    for ex in examples:
        if ex.reward == 0.0:
            continue
        if mode is RewardNormalization.BASELINE_STEPS:
            baseline = context.baseline_steps.get(ex.problem_id)
            if baseline is None:
                raise KeyError(f"no baseline step count recorded for {ex.problem_id!r}")
            ex.reward *= baseline
        else:
            best = context.best_reward.get(ex.problem_id)
            if not best:
                raise KeyError(f"no best reward recorded for {ex.problem_id!r}")
            ex.reward /= best
    return examples


class ExampleBuffer:
    """Keeps examples whose iteration tag lies in (latest - w, latest]."""

    def __init__(self, window: int) -> None:
        self.window = window
        self._by_iteration: dict[int, list[TrainingExample]] = {}

    def insert(self, iteration: int, examples: list[TrainingExample]) -> None:
        self._by_iteration.setdefault(iteration, []).extend(examples)
        for tag in [t for t in self._by_iteration if t <= iteration - self.window]:
            del self._by_iteration[tag]

    def all_examples(self) -> list[TrainingExample]:
        out: list[TrainingExample] = []
        for tag in sorted(self._by_iteration):
            out.extend(self._by_iteration[tag])
        return out

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_iteration.values())


def compute_loss(
    batch: list[TrainingExample],
    params: PolicyParameters,
    entropy_weight: float,
    rng: Optional[np.random.Generator] = None,
    train: bool = True,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean policy-gradient loss with entropy regularization, plus exact
    gradients for every parameter.

    L = -mean[r * log p(a)] - lambda * mean[entropy(p)]
    """
    if not batch:
        raise ValueError("empty batch")
    grads = params.zero_gradients()
    total = 0.0
    scale = 1.0 / len(batch)
    for ex in batch:
        fw = Forward(ex.features(), params, train=train, rng=rng)
        p = fw.probs
        logp = np.log(np.maximum(p, 1e-300))
        entropy = float(-(p * logp).sum())
        loss = -ex.reward * float(logp[ex.action_index]) - entropy_weight * entropy
        total += loss
        if not np.isfinite(loss):
            raise FloatingPointError("non-finite loss")

        dscores = ex.reward * p.copy()
        dscores[ex.action_index] -= ex.reward
        dscores += entropy_weight * p * (logp + entropy)
        if np.any(dscores):
            for name, g in fw.backward(scale * dscores).items():
                grads[name] += g
    return total * scale, grads


class AdamState:
    def __init__(self, params: PolicyParameters) -> None:
        self.m = params.zero_gradients()
        self.v = params.zero_gradients()
        self.t = 0


def adam_step(
    params: PolicyParameters,
    grads: dict[str, np.ndarray],
    state: AdamState,
    cfg: TrainerConfig,
) -> None:
    """In-place Adam update with bias correction."""
    b1, b2 = cfg.adam_betas
    state.t += 1
    correction1 = 1.0 - b1 ** state.t
    correction2 = 1.0 - b2 ** state.t
    for name, theta in params.arrays.items():
        g = grads[name]
        state.m[name] = b1 * state.m[name] + (1 - b1) * g
        state.v[name] = b2 * state.v[name] + (1 - b2) * g * g
        m_hat = state.m[name] / correction1
        v_hat = state.v[name] / correction2
        update = cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        if not np.all(np.isfinite(update)):
            raise FloatingPointError(f"non-finite update for {name}")
        theta -= update


@dataclass
class IterationStats:
    iteration: int
    solved: int
    total: int
    mean_proof_steps: Optional[float]
    median_proof_steps: Optional[float]
    mean_loss: Optional[float]
    tau: float
    examples: int

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "solved": self.solved,
            "total": self.total,
            "mean_proof_steps": self.mean_proof_steps,
            "median_proof_steps": self.median_proof_steps,
            "mean_loss": self.mean_loss,
            "tau": self.tau,
            "examples": self.examples,
        }


class TrainingContext:
    """Cross-iteration state: Adam moments, temperature clock, reward records."""

    def __init__(self, params: PolicyParameters, cfg: TrainerConfig) -> None:
        self.adam = AdamState(params)
        self.rewards = RewardContext()
        self.episodes_completed = 0

    def current_tau(self, cfg: TrainerConfig, iteration: int) -> float:
        exponent = self.episodes_completed if cfg.decay_per_episode else iteration
        return max(1.0, cfg.tau * cfg.temperature_decay ** exponent)


def _derived_seed(root: int, *parts) -> int:
    text = ":".join([str(root), *map(str, parts)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def train_iteration(
    corpus: list[tuple[str, Problem]],
    params: PolicyParameters,
    buffer: ExampleBuffer,
    cfg: TrainerConfig,
    vcfg: VectorizerConfig,
    iteration: int,
    context: TrainingContext,
    limits: Limits,
) -> tuple[IterationStats, list[Episode]]:
    """Roll out every problem, refresh the example buffer, then run the
    supervised epochs over shuffled batches."""
    if not corpus:
        raise ValueError("empty corpus")

    episodes: list[Episode] = []
    collected: list[TrainingExample] = []
    for problem_id, problem in corpus:
        tau_now = context.current_tau(cfg, iteration)
        rollout_rng = np.random.default_rng(
            _derived_seed(cfg.seed, "rollout", iteration, problem_id)
        )
        policy = NeuralPolicy(
            params,
            vcfg,
            explore=True,
            tau=tau_now,
            tau0=cfg.tau0,
            rng=rollout_rng,
            record=True,
        )
        episode = run_episode(problem, policy, limits, problem_id=problem_id)
        context.episodes_completed += 1
        episodes.append(episode)
        examples = assign_rewards(episode, iteration)
        context.rewards.observe(problem_id, examples)
        normalize_rewards(examples, cfg.reward_normalization, context.rewards)
        collected.extend(examples)

    buffer.insert(iteration, collected)

    pool = buffer.all_examples()
    losses: list[float] = []
    if pool:
        train_rng = np.random.default_rng(_derived_seed(cfg.seed, "train", iteration))
        for _ in range(cfg.epochs):
            order = train_rng.permutation(len(pool))
            for start in range(0, len(pool), cfg.batch_size):
                batch = [pool[i] for i in order[start : start + cfg.batch_size]]
                loss, grads = compute_loss(
                    batch, params, cfg.entropy_weight, rng=train_rng, train=True
                )
                losses.append(loss)
                adam_step(params, grads, context.adam, cfg)

    proof_lengths = [ep.proof_length for ep in episodes if ep.solved]
    stats = IterationStats(
        iteration=iteration,
        solved=sum(ep.solved for ep in episodes),
        total=len(corpus),
        mean_proof_steps=statistics.fmean(proof_lengths) if proof_lengths else None,
        median_proof_steps=statistics.median(proof_lengths) if proof_lengths else None,
        mean_loss=statistics.fmean(losses) if losses else None,
        tau=context.current_tau(cfg, iteration),
        examples=len(buffer),
    )
    return stats, episodes
