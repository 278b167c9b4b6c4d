"""Action-selection policies for the saturation loop.

Baselines (uniform random, smallest-weight-first, breadth-first FIFO) and
the neural attention policy. The neural policy keeps per-clause caches so
a rollout embeds each clause once and updates attention scores
incrementally as the processed set grows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import Action, ProofState, Rule
from .features import SparseFeatureVector, VectorizerConfig, vectorize_clause
from .network import PolicyParameters, combine, softmax


class Policy:
    def begin_episode(self, state: ProofState) -> None:
        pass

    def choose(self, state: ProofState, step: int):
        raise NotImplementedError

    def after_step(self, state: ProofState, action: Action, derived) -> None:
        pass


class FIFOPolicy(Policy):
    """Breadth-first exhaustive selection: always the oldest pending action."""

    def choose(self, state: ProofState, step: int):
        return 0, None, None


class UniformRandomPolicy(Policy):
    def __init__(self, rng: np.random.Generator) -> None:
        self.rng = rng

    def choose(self, state: ProofState, step: int):
        return int(self.rng.integers(len(state.actions))), None, None


class AgeWeightPolicy(Policy):
    """Classic given-clause heuristic: smallest weight, oldest first."""

    def choose(self, state: ProofState, step: int):
        best = min(
            range(len(state.actions)),
            key=lambda i: (
                state.clauses[state.actions[i].clause_id].weight(),
                state.clauses[state.actions[i].clause_id].age,
                state.actions[i].clause_id,
                state.actions[i].rule.rule_id,
            ),
        )
        return best, None, None


@dataclass
class ExampleSnapshot:
    """Sparse feature view of the state at one decision point.

    Holds references to per-clause vectors shared across snapshots; the
    trainer materializes CSR matrices from these lazily.
    """

    conjecture: tuple[SparseFeatureVector, ...]
    processed: tuple[SparseFeatureVector, ...]
    actions: tuple[SparseFeatureVector, ...]
    rule_ids: tuple[int, ...]
    dim: int


def tempered_probs(probs: np.ndarray, tau: float) -> np.ndarray:
    """p^(1/tau) renormalized, computed in log space."""
    if tau <= 0:
        raise ValueError("temperature must be positive")
    logs = np.log(np.maximum(probs, 1e-300)) / tau
    return softmax(logs)


def sample_action(
    probs: np.ndarray,
    step: int,
    tau: float,
    tau0: int,
    rng: Optional[np.random.Generator],
) -> int:
    """Tempered sampling before the exploration threshold, argmax after."""
    if step >= tau0 or rng is None:
        return int(np.argmax(probs))
    p = tempered_probs(probs, tau)
    return int(rng.choice(len(p), p=p))


class NeuralPolicy(Policy):
    def __init__(
        self,
        params: PolicyParameters,
        vcfg: VectorizerConfig,
        explore: bool = False,
        tau: float = 1.13,
        tau0: int = 11,
        rng: Optional[np.random.Generator] = None,
        record: bool = False,
    ) -> None:
        self.params = params
        self.vcfg = vcfg
        self.explore = explore
        self.tau = tau
        self.tau0 = tau0
        self.rng = rng
        self.record = record

    # -- per-clause caches (reset per episode) --

    def begin_episode(self, state: ProofState) -> None:
        self._vecs: dict[int, SparseFeatureVector] = {}
        self._embeds: dict[int, np.ndarray] = {}
        self._g_rows: dict[tuple[int, int], np.ndarray] = {}
        self._scores: dict[tuple[int, int], float] = {}
        self._C_rows: list[np.ndarray] = []
        # problems with no negated-conjecture clause pool over all inputs
        conj_ids = state.conjecture_ids or sorted(state.clauses)
        self._conj_vecs = tuple(self._clause_vec(state, cid) for cid in conj_ids)
        self.h_c = np.stack([self._embed(state, cid) for cid in conj_ids]).mean(axis=0)

    def _clause_vec(self, state: ProofState, cid: int) -> SparseFeatureVector:
        vec = self._vecs.get(cid)
        if vec is None:
            vec = vectorize_clause(state.clauses[cid], state, self.vcfg)
            self._vecs[cid] = vec
        return vec

    def _embed(self, state: ProofState, cid: int) -> np.ndarray:
        h = self._embeds.get(cid)
        if h is not None:
            return h
        vec = self._clause_vec(state, cid)
        arrays = self.params.arrays
        cfg = self.params.config
        indices = np.fromiter(vec.entries.keys(), dtype=np.int64, count=len(vec.entries))
        values = np.fromiter(vec.entries.values(), dtype=np.float64, count=len(vec.entries))
        x = arrays["embed_b0"] + values @ arrays["embed_W0"][indices]
        x = np.maximum(x, 0.0)
        for i in range(1, cfg.embed_layers):
            x = np.maximum(x @ arrays[f"embed_W{i}"] + arrays[f"embed_b{i}"], 0.0)
        self._embeds[cid] = x
        return x

    def _g_row(self, state: ProofState, action: Action) -> np.ndarray:
        key = (action.clause_id, action.rule.rule_id)
        g = self._g_rows.get(key)
        if g is None:
            e = self.params.config.embed_width
            W = self.params.arrays["attn_W"]
            g = self._embed(state, action.clause_id) @ W[:e] + W[e + action.rule.rule_id]
            self._g_rows[key] = g
        return g

    def _score(self, state: ProofState, action: Action) -> float:
        key = (action.clause_id, action.rule.rule_id)
        s = self._scores.get(key)
        if s is None:
            g = self._g_row(state, action)
            if self._C_rows:
                s = float(max(float(g @ c) for c in self._C_rows))
            else:
                s = float(g @ self.h_c)  # cold start: conjecture stand-in column
            self._scores[key] = s
        return s

    def current_probs(self, state: ProofState) -> np.ndarray:
        scores = np.array([self._score(state, a) for a in state.actions])
        return softmax(scores)

    def choose(self, state: ProofState, step: int):
        probs = self.current_probs(state)
        index = sample_action(
            probs, step, self.tau, self.tau0, self.rng if self.explore else None
        )
        snapshot = None
        if self.record:
            snapshot = ExampleSnapshot(
                conjecture=self._conj_vecs,
                processed=tuple(self._clause_vec(state, cid) for cid in state.processed),
                actions=tuple(self._clause_vec(state, a.clause_id) for a in state.actions),
                rule_ids=tuple(a.rule.rule_id for a in state.actions),
                dim=self.vcfg.dim,
            )
        return index, float(probs[index]), snapshot

    def after_step(self, state: ProofState, action: Action, derived) -> None:
        # the selected clause joined the processed set: grow C and refresh
        # every cached running-max score against the new column
        cid = action.clause_id
        h_p = self._embeds[cid]  # embedded when the action was scored
        row = combine(h_p, self.h_c, self.params)
        first_real_column = not self._C_rows
        self._C_rows.append(row)
        for key in list(self._scores):
            if key[0] == cid:
                del self._scores[key]
                continue
            g = self._g_rows[key]
            fresh = float(g @ row)
            if first_real_column:
                self._scores[key] = fresh  # cold-start column is retired
            else:
                self._scores[key] = max(self._scores[key], fresh)
