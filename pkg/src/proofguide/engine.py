"""Given-clause saturation loop driven by an external action policy.

The proof state is a pair (processed clauses, available actions); an action
is an inference rule paired with an unprocessed clause. Executing an action
moves the clause to the processed set and adds rule/derived-clause pairs
for every freshly derived clause.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from .fol import (
    Clause,
    Literal,
    Substitution,
    SymbolTable,
    VariableCounter,
    dedup_literals,
    mgu,
    rename_clause,
    variant_key,
)
from .tptp import Problem


class Rule(Enum):
    RESOLUTION = 0
    FACTORING = 1

    @property
    def rule_id(self) -> int:
        return self.value


RULES = (Rule.RESOLUTION, Rule.FACTORING)
NUM_RULES = len(RULES)


@dataclass(frozen=True)
class Action:
    rule: Rule
    clause_id: int


class OutcomeKind(Enum):
    REFUTATION = "refutation"
    SATURATED = "saturated"
    STEP_LIMIT = "step_limit"
    TIME_LIMIT = "time_limit"


@dataclass
class Outcome:
    kind: OutcomeKind
    empty_clause_id: Optional[int] = None
    proof_steps: Optional[set[int]] = None  # episode step indices in the proof


class EngineError(Exception):
    pass


def resolve(c1: Clause, c2: Clause, next_id: int, age: int) -> list[Clause]:
    """All binary resolvents of two clauses (must already be renamed apart)."""
    out: list[Clause] = []
    for i, l1 in enumerate(c1.literals):
        for j, l2 in enumerate(c2.literals):
            if l1.positive == l2.positive:
                continue
            if l1.atom.symbol != l2.atom.symbol:
                continue
            sigma = mgu(l1.atom, l2.atom)
            if sigma is None:
                continue
            rest = [sigma.apply_literal(lit) for k, lit in enumerate(c1.literals) if k != i]
            rest += [sigma.apply_literal(lit) for k, lit in enumerate(c2.literals) if k != j]
            out.append(
                Clause(
                    literals=dedup_literals(rest),
                    id=next_id + len(out),
                    age=age,
                    parents=(("resolution", (c1.id, c2.id)),),
                    set_of_support=c1.set_of_support or c2.set_of_support,
                )
            )
    return out


def factor(c: Clause, next_id: int, age: int) -> list[Clause]:
    """All binary factors of a clause (unifiable same-polarity literal pairs)."""
    out: list[Clause] = []
    for i in range(len(c.literals)):
        for j in range(i + 1, len(c.literals)):
            l1, l2 = c.literals[i], c.literals[j]
            if l1.positive != l2.positive or l1.atom.symbol != l2.atom.symbol:
                continue
            sigma = mgu(l1.atom, l2.atom)
            if sigma is None:
                continue
            merged = [sigma.apply_literal(lit) for k, lit in enumerate(c.literals) if k != j]
            out.append(
                Clause(
                    literals=dedup_literals(merged),
                    id=next_id + len(out),
                    age=age,
                    parents=(("factoring", (c.id,)),),
                    set_of_support=c.set_of_support,
                )
            )
    return out


class ProofState:
    """Mutable search state: processed/unprocessed sets, actions, derivation."""

    def __init__(self, problem: Problem) -> None:
        if not problem.clauses:
            raise EngineError("empty problem: no input clauses")
        self.table: SymbolTable = problem.table
        self.counter = VariableCounter()
        self.step = 0
        self.clauses: dict[int, Clause] = {}
        self.processed: list[int] = []
        self.unprocessed: set[int] = set()
        self.actions: list[Action] = []
        self._variant_keys: set[tuple] = set()
        self.conjecture_ids: list[int] = []
        self.next_id = 0
        for c in problem.clauses:
            self._register_input(c)

    def _register_input(self, c: Clause) -> None:
        c = Clause(
            literals=c.literals,
            id=self.next_id,
            age=0,
            parents=(),
            from_negated_conjecture=c.from_negated_conjecture,
            set_of_support=c.set_of_support,
        )
        self.next_id += 1
        self.clauses[c.id] = c
        self._variant_keys.add(variant_key(c))
        self.unprocessed.add(c.id)
        if c.from_negated_conjecture:
            self.conjecture_ids.append(c.id)
        for rule in RULES:
            self.actions.append(Action(rule, c.id))

    def find_empty_clause(self) -> Optional[int]:
        for cid, c in self.clauses.items():
            if c.is_empty:
                return cid
        return None

    def execute_action(self, action: Action) -> list[Clause]:
        """Run one inference step; returns the freshly derived clauses."""
        if action not in self.actions:
            raise EngineError(f"action not available: {action}")
        given = self.clauses[action.clause_id]
        age = self.step + 1
        derived: list[Clause] = []
        if action.rule is Rule.RESOLUTION:
            partners = [self.clauses[cid] for cid in self.processed] + [given]
            for partner in partners:
                left = rename_clause(given, self.table, self.counter)
                right = rename_clause(partner, self.table, self.counter)
                derived.extend(resolve(left, right, self.next_id + len(derived), age))
        else:
            left = rename_clause(given, self.table, self.counter)
            derived.extend(factor(left, self.next_id + len(derived), age))

        kept: list[Clause] = []
        for c in derived:
            if c.is_tautology():
                continue
            key = variant_key(c)
            if key in self._variant_keys:
                continue
            self._variant_keys.add(key)
            c = Clause(
                literals=c.literals,
                id=self.next_id,
                age=age,
                parents=c.parents,
                from_negated_conjecture=False,
                set_of_support=c.set_of_support,
            )
            self.next_id += 1
            self.clauses[c.id] = c
            kept.append(c)

        # move the given clause to processed; drop all its pending actions
        self.unprocessed.discard(given.id)
        self.processed.append(given.id)
        self.actions = [a for a in self.actions if a.clause_id != given.id]
        for c in kept:
            self.unprocessed.add(c.id)
            for rule in RULES:
                self.actions.append(Action(rule, c.id))
        self.step += 1
        return kept


def extract_proof(clauses: dict[int, Clause], empty_id: int) -> set[int]:
    """Backward closure of clause ids from the empty clause, inclusive."""
    if empty_id not in clauses or not clauses[empty_id].is_empty:
        raise EngineError("empty clause not present in derivation")
    closure: set[int] = set()
    stack = [empty_id]
    while stack:
        cid = stack.pop()
        if cid in closure:
            continue
        closure.add(cid)
        for _, premises in clauses[cid].parents:
            stack.extend(premises)
    return closure


@dataclass
class EpisodeStep:
    action_index: int
    action: Action
    num_actions: int
    probability: Optional[float] = None
    snapshot: Optional[object] = None  # policy-provided feature snapshot


@dataclass
class Episode:
    problem_id: str
    steps: list[EpisodeStep]
    outcome: Outcome
    state: ProofState
    elapsed_steps: int = 0
    elapsed_seconds: float = 0.0

    @property
    def solved(self) -> bool:
        return self.outcome.kind is OutcomeKind.REFUTATION

    @property
    def proof_length(self) -> Optional[int]:
        if self.outcome.proof_steps is None:
            return None
        return len(self.outcome.proof_steps)


@dataclass
class Limits:
    max_steps: int = 2000
    max_seconds: float = 100.0

    def __post_init__(self) -> None:
        if self.max_steps <= 0 or self.max_seconds <= 0:
            raise ValueError("limits must be positive")


def run_episode(problem: Problem, policy, limits: Limits, problem_id: str = "") -> Episode:
    """Drive the saturation loop with actions chosen by `policy`.

    `policy` must provide `begin_episode(state)` and
    `choose(state, step) -> (index, probability, snapshot)`.
    """
    state = ProofState(problem)
    policy.begin_episode(state)
    steps: list[EpisodeStep] = []
    start = time.monotonic()

    def finish(outcome: Outcome) -> Episode:
        return Episode(
            problem_id=problem_id,
            steps=steps,
            outcome=outcome,
            state=state,
            elapsed_steps=state.step,
            elapsed_seconds=time.monotonic() - start,
        )

    empty_id = state.find_empty_clause()
    if empty_id is not None:
        proof = _proof_step_indices(state, steps, empty_id)
        return finish(Outcome(OutcomeKind.REFUTATION, empty_id, proof))

    while True:
        if not state.actions:
            return finish(Outcome(OutcomeKind.SATURATED))
        if state.step >= limits.max_steps:
            return finish(Outcome(OutcomeKind.STEP_LIMIT))
        index, probability, snapshot = policy.choose(state, state.step)
        action = state.actions[index]
        num_actions = len(state.actions)
        derived = state.execute_action(action)
        steps.append(EpisodeStep(index, action, num_actions, probability, snapshot))
        policy.after_step(state, action, derived)
        for c in derived:
            if c.is_empty:
                proof = _proof_step_indices(state, steps, c.id)
                return finish(Outcome(OutcomeKind.REFUTATION, c.id, proof))
        if time.monotonic() - start > limits.max_seconds:
            return finish(Outcome(OutcomeKind.TIME_LIMIT))


def _proof_step_indices(state: ProofState, steps: list[EpisodeStep], empty_id: int) -> set[int]:
    closure = extract_proof(state.clauses, empty_id)
    return {t for t, s in enumerate(steps) if s.action.clause_id in closure}
