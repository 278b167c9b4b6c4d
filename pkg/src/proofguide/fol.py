"""First-order terms, literals, clauses and unification.

Everything here is immutable after construction so clauses can be shared
freely between the engine, the vectorizers and worker threads.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional


class SymbolKind(Enum):
    PREDICATE = "predicate"
    FUNCTION = "function"
    VARIABLE = "variable"


class ArityConflictError(Exception):
    """A name+kind pair was used with two different arities."""


@dataclass(frozen=True)
class Symbol:
    name: str
    kind: SymbolKind
    arity: int


class SymbolTable:
    """Interner: one Symbol instance per (name, kind), arity enforced.

    Reads are safe from any thread; construction of new symbols is guarded.
    """

    def __init__(self) -> None:
        self._symbols: dict[tuple[str, SymbolKind], Symbol] = {}
        self._lock = threading.Lock()

    def _intern(self, name: str, kind: SymbolKind, arity: int) -> Symbol:
        key = (name, kind)
        sym = self._symbols.get(key)
        if sym is not None:
            if sym.arity != arity:
                raise ArityConflictError(
                    f"symbol {name!r} used with arity {arity} but previously {sym.arity}"
                )
            return sym
        with self._lock:
            sym = self._symbols.get(key)
            if sym is None:
                sym = Symbol(name, kind, arity)
                self._symbols[key] = sym
            elif sym.arity != arity:
                raise ArityConflictError(
                    f"symbol {name!r} used with arity {arity} but previously {sym.arity}"
                )
            return sym

    def predicate(self, name: str, arity: int) -> Symbol:
        return self._intern(name, SymbolKind.PREDICATE, arity)

    def function(self, name: str, arity: int) -> Symbol:
        return self._intern(name, SymbolKind.FUNCTION, arity)

    def variable(self, name: str) -> Symbol:
        return self._intern(name, SymbolKind.VARIABLE, 0)


@dataclass(frozen=True)
class Term:
    """Variable (no args, variable symbol) or application (function symbol)."""

    symbol: Symbol
    args: tuple["Term", ...] = ()

    def __post_init__(self) -> None:
        if self.symbol.kind is SymbolKind.VARIABLE:
            if self.args:
                raise ValueError("variable term cannot have arguments")
        elif len(self.args) != self.symbol.arity:
            raise ValueError(
                f"{self.symbol.name}/{self.symbol.arity} applied to {len(self.args)} args"
            )

    @property
    def is_variable(self) -> bool:
        return self.symbol.kind is SymbolKind.VARIABLE

    def variables(self) -> set[Symbol]:
        if self.is_variable:
            return {self.symbol}
        out: set[Symbol] = set()
        for a in self.args:
            out |= a.variables()
        return out

    def symbol_count(self) -> int:
        """Total symbol occurrences (variables count 1)."""
        return 1 + sum(a.symbol_count() for a in self.args)

    def __str__(self) -> str:
        if not self.args:
            return self.symbol.name
        return f"{self.symbol.name}({','.join(str(a) for a in self.args)})"


def variable(sym: Symbol) -> Term:
    return Term(sym)


@dataclass(frozen=True)
class Literal:
    positive: bool
    atom: Term  # predicate application

    def __post_init__(self) -> None:
        if self.atom.symbol.kind is not SymbolKind.PREDICATE:
            raise ValueError("literal atom must have a predicate head")

    def negated(self) -> "Literal":
        return Literal(not self.positive, self.atom)

    def variables(self) -> set[Symbol]:
        return self.atom.variables()

    def __str__(self) -> str:
        return str(self.atom) if self.positive else "~" + str(self.atom)


@dataclass(frozen=True)
class Clause:
    literals: tuple[Literal, ...]
    id: int
    age: int = 0
    parents: tuple[tuple[str, tuple[int, ...]], ...] = ()
    from_negated_conjecture: bool = False
    set_of_support: bool = False

    @property
    def is_empty(self) -> bool:
        return not self.literals

    @property
    def is_input(self) -> bool:
        return not self.parents

    def weight(self) -> int:
        return sum(lit.atom.symbol_count() for lit in self.literals)

    def literal_count(self) -> int:
        return len(self.literals)

    def variables(self) -> set[Symbol]:
        out: set[Symbol] = set()
        for lit in self.literals:
            out |= lit.variables()
        return out

    def is_tautology(self) -> bool:
        atoms = {(lit.positive, lit.atom) for lit in self.literals}
        return any((not pos, atom) in atoms for pos, atom in atoms)

    def __str__(self) -> str:
        if self.is_empty:
            return "$false"
        return " | ".join(str(lit) for lit in self.literals)


def dedup_literals(literals: Iterable[Literal]) -> tuple[Literal, ...]:
    """Drop syntactic duplicates, preserving first-occurrence order."""
    seen: set[Literal] = set()
    out: list[Literal] = []
    for lit in literals:
        if lit not in seen:
            seen.add(lit)
            out.append(lit)
    return tuple(out)


class Substitution:
    """Idempotent variable->term binding map (occurs check maintained)."""

    __slots__ = ("bindings",)

    def __init__(self, bindings: Optional[dict[Symbol, Term]] = None) -> None:
        # identity bindings are dropped; they carry no information and would
        # make apply() loop
        self.bindings: dict[Symbol, Term] = {
            v: t
            for v, t in (bindings or {}).items()
            if not (t.is_variable and t.symbol == v)
        }

    def apply(self, t: Term) -> Term:
        if t.is_variable:
            bound = self.bindings.get(t.symbol)
            if bound is None:
                return t
            return self.apply(bound)
        if not t.args:
            return t
        return Term(t.symbol, tuple(self.apply(a) for a in t.args))

    def apply_literal(self, lit: Literal) -> Literal:
        return Literal(lit.positive, self.apply(lit.atom))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Substitution) and self.bindings == other.bindings

    def __repr__(self) -> str:
        inner = ", ".join(f"{v.name}->{t}" for v, t in self.bindings.items())
        return "{" + inner + "}"


def occurs_in(var: Symbol, t: Term, subst: Substitution) -> bool:
    if t.is_variable:
        if t.symbol == var:
            return True
        bound = subst.bindings.get(t.symbol)
        return bound is not None and occurs_in(var, bound, subst)
    return any(occurs_in(var, a, subst) for a in t.args)


def mgu(a1: Term, a2: Term) -> Optional[Substitution]:
    """Most general unifier of two atoms/terms, or None.

    Robinson's algorithm with the occurs check; the result is idempotent.
    """
    subst = Substitution()
    stack = [(a1, a2)]
    while stack:
        s, t = stack.pop()
        while s.is_variable and s.symbol in subst.bindings:
            s = subst.bindings[s.symbol]
        while t.is_variable and t.symbol in subst.bindings:
            t = subst.bindings[t.symbol]
        if s is t or (s.is_variable and t.is_variable and s.symbol == t.symbol):
            continue
        if s.is_variable:
            if occurs_in(s.symbol, t, subst):
                return None
            subst.bindings[s.symbol] = t
        elif t.is_variable:
            if occurs_in(t.symbol, s, subst):
                return None
            subst.bindings[t.symbol] = s
        else:
            if s.symbol != t.symbol:
                return None
            stack.extend(zip(s.args, t.args))
    # flatten chains so the substitution is idempotent
    flat = {v: subst.apply(t) for v, t in subst.bindings.items()}
    return Substitution(flat)


def rename_clause(c: Clause, table: SymbolTable, counter: "VariableCounter") -> Clause:
    """Fresh-rename all variables of c (deterministic, counter-driven)."""
    mapping: dict[Symbol, Term] = {}
    for lit in c.literals:
        for v in _ordered_vars(lit.atom):
            if v not in mapping:
                mapping[v] = Term(table.variable(counter.fresh()))
    subst = Substitution(mapping)
    return Clause(
        literals=tuple(subst.apply_literal(lit) for lit in c.literals),
        id=c.id,
        age=c.age,
        parents=c.parents,
        from_negated_conjecture=c.from_negated_conjecture,
        set_of_support=c.set_of_support,
    )


def _ordered_vars(t: Term) -> list[Symbol]:
    if t.is_variable:
        return [t.symbol]
    out: list[Symbol] = []
    for a in t.args:
        for v in _ordered_vars(a):
            if v not in out:
                out.append(v)
    return out


class VariableCounter:
    """Monotone source of fresh variable names (V1, V2, ...)."""

    def __init__(self, start: int = 0) -> None:
        self._n = start

    def fresh(self) -> str:
        self._n += 1
        return f"V{self._n}"


def _shape(t: Term) -> str:
    if t.is_variable:
        return "*"
    if not t.args:
        return t.symbol.name
    return f"{t.symbol.name}({','.join(_shape(a) for a in t.args)})"


def variant_key(c: Clause) -> tuple:
    """Structural key invariant under variable renaming.

    Literals are sorted by a renaming-invariant shape, then variables are
    numbered by first occurrence. Equal keys imply the clauses are variants;
    the converse can fail for clauses with identically-shaped literals in
    a different variable pattern, which is acceptable for duplicate hygiene.
    """
    ordered = sorted(c.literals, key=lambda lit: (not lit.positive, _shape(lit.atom)))
    numbering: dict[Symbol, int] = {}

    def walk(t: Term):
        if t.is_variable:
            if t.symbol not in numbering:
                numbering[t.symbol] = len(numbering)
            return ("v", numbering[t.symbol])
        return ("f", t.symbol.name, tuple(walk(a) for a in t.args))

    return tuple((lit.positive, walk(lit.atom)) for lit in ordered)
