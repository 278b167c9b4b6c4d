import numpy as np
import pytest

from proofguide.fol import SymbolTable, Term, Literal, Clause, dedup_literals


@pytest.fixture
def table():
    return SymbolTable()


def make_random_term(rng, table, depth, variables, functions, constants):
    """Random term of depth <= depth over the given signature."""
    if depth == 0 or rng.random() < 0.35:
        if rng.random() < 0.5:
            return Term(table.variable(rng.choice(variables)))
        return Term(table.function(rng.choice(constants), 0))
    name, arity = functions[rng.integers(len(functions))]
    args = tuple(
        make_random_term(rng, table, depth - 1, variables, functions, constants)
        for _ in range(arity)
    )
    return Term(table.function(name, arity), args)


def make_random_atom(rng, table, depth=3, predicates=None):
    predicates = predicates or [("p", 1), ("q", 2), ("r", 3)]
    variables = ["X", "Y", "Z"]
    functions = [("f", 1), ("g", 2), ("h", 3)]
    constants = ["a", "b", "c"]
    name, arity = predicates[rng.integers(len(predicates))]
    args = tuple(
        make_random_term(rng, table, depth - 1, variables, functions, constants)
        for _ in range(arity)
    )
    return Term(table.predicate(name, arity), args)


def make_random_clause(rng, table, max_literals=3, depth=4):
    n = int(rng.integers(1, max_literals + 1))
    lits = [
        Literal(bool(rng.random() < 0.5), make_random_atom(rng, table, depth=depth))
        for _ in range(n)
    ]
    return Clause(literals=dedup_literals(lits), id=0)
