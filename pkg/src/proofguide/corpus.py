"""Bundled desk-scale CNF problem corpus."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .tptp import Problem, parse_problem

UNSAT_PROBLEMS = [
    "unit_basic",
    "unit_binary",
    "chain_2",
    "chain_3",
    "chain_4",
    "chain_5",
    "chain_6",
    "chain_7",
    "chain_8",
    "chain_9",
    "branch_2",
    "branch_3",
    "branch_4",
    "trans_2",
    "trans_3",
    "trans_4",
    "php_2_1",
    "php_3_2",
    "nest_1",
    "nest_2",
    "nest_3",
    "factor_1",
    "factor_2",
    "path_3",
    "path_4",
    "group_1",
    "group_2",
    "fork_1",
    "fork_2",
    "wide_3",
    "detour_1",
    "detour_2",
    "detour_3",
    "detour_4",
    "detour_5",
    "detour_6",
    "detour_7",
    "detour_8",
]

SAT_PROBLEMS = [
    "sat_unit",
    "sat_two_facts",
    "sat_mixed",
    "sat_disjunction",
    "sat_edges",
]

# problems used by the learning smoke experiment: solvable often enough by
# an exploring random policy that the trainer has proofs to learn from
TRAINABLE_PROBLEMS = [
    "unit_binary",
    "chain_2",
    "chain_3",
    "branch_2",
    "trans_2",
    "php_2_1",
    "nest_1",
    "factor_1",
    "factor_2",
    "path_3",
    "group_1",
    "fork_1",
    "detour_1",
    "detour_2",
    "detour_3",
    "detour_4",
    "detour_5",
    "detour_6",
    "detour_7",
    "detour_8",
]


def problem_path(name: str) -> Path:
    path = resources.files("proofguide") / "problems" / f"{name}.p"
    return Path(str(path))


def load_problem(name: str) -> Problem:
    text = (resources.files("proofguide") / "problems" / f"{name}.p").read_text()
    return parse_problem(text)


def load_corpus(names: list[str]) -> list[tuple[str, Problem]]:
    return [(name, load_problem(name)) for name in names]
