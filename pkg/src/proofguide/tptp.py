"""Reader and printer for a TPTP CNF subset.

Supported statements: ``cnf(name, role, formula).`` with roles ``axiom``,
``hypothesis`` and ``negated_conjecture``. Formulas are disjunctions of
literals; ``~`` negates, ``$false`` is the empty clause, ``=`` and ``!=``
are parsed as an ordinary binary predicate named ``=``. ``%`` starts a
line comment. Variables are upper-case identifiers; everything else is
lower-case.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .fol import (
    ArityConflictError,
    Clause,
    Literal,
    SymbolTable,
    Term,
    dedup_literals,
)

ROLES = ("axiom", "hypothesis", "negated_conjecture")


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


@dataclass
class Problem:
    axioms: list[Clause]
    negated_conjecture: list[Clause]
    table: SymbolTable = field(default_factory=SymbolTable)

    @property
    def clauses(self) -> list[Clause]:
        return self.axioms + self.negated_conjecture


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<lower>[a-z][A-Za-z0-9_]*|\$false)
  | (?P<upper>[A-Z_][A-Za-z0-9_]*)
  | (?P<neq>!=)
  | (?P<punct>[(),.|~=])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int, int]]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            tokens.append((kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    tokens.append(("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = _tokenize(text)
        self.pos = 0
        self.table = SymbolTable()
        self.next_id = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str):
        kind, val, line, col = self.peek()
        if val != value:
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", line, col)
        return self.advance()

    def fail(self, message: str):
        _, _, line, col = self.peek()
        raise ParseError(message, line, col)

    def parse_problem(self) -> Problem:
        problem = Problem(axioms=[], negated_conjecture=[], table=self.table)
        while self.peek()[0] != "eof":
            name, role, literals = self.parse_statement()
            is_conj = role == "negated_conjecture"
            clause = Clause(
                literals=dedup_literals(literals),
                id=self.next_id,
                age=0,
                from_negated_conjecture=is_conj,
                set_of_support=is_conj,
            )
            self.next_id += 1
            if is_conj:
                problem.negated_conjecture.append(clause)
            else:
                problem.axioms.append(clause)
        return problem

    def parse_statement(self):
        kind, val, line, col = self.peek()
        if val != "cnf":
            self.fail(f"expected 'cnf', found {val or 'end of input'!r}")
        self.advance()
        self.expect("(")
        kind, name, line, col = self.advance()
        if kind not in ("lower", "upper"):
            raise ParseError(f"expected statement name, found {name!r}", line, col)
        self.expect(",")
        kind, role, line, col = self.advance()
        if role not in ROLES:
            raise ParseError(f"unknown role {role!r}", line, col)
        self.expect(",")
        parenthesized = self.peek()[1] == "("
        if parenthesized:
            self.advance()
        literals = self.parse_disjunction()
        if parenthesized:
            self.expect(")")
        self.expect(")")
        self.expect(".")
        return name, role, literals

    def parse_disjunction(self) -> list[Literal]:
        if self.peek()[1] == "$false":
            self.advance()
            return []
        literals = [self.parse_literal()]
        while self.peek()[1] == "|":
            self.advance()
            literals.append(self.parse_literal())
        return literals

    def parse_literal(self) -> Literal:
        positive = True
        if self.peek()[1] == "~":
            self.advance()
            positive = False
        kind, val, line, col = self.peek()
        if kind == "upper":
            # must be the left side of an (in)equality
            left = self.parse_term()
            return self.finish_equality(left, positive)
        if kind != "lower":
            self.fail(f"expected atom, found {val or 'end of input'!r}")
        name = val
        self.advance()
        args: list[Term] = []
        if self.peek()[1] == "(":
            self.advance()
            args.append(self.parse_term())
            while self.peek()[1] == ",":
                self.advance()
                args.append(self.parse_term())
            self.expect(")")
        nxt = self.peek()[1]
        if nxt in ("=", "!="):
            left = Term(self.table.function(name, len(args)), tuple(args))
            return self.finish_equality(left, positive)
        atom = Term(self.table.predicate(name, len(args)), tuple(args))
        return Literal(positive, atom)

    def finish_equality(self, left: Term, positive: bool) -> Literal:
        op = self.advance()[1]
        if op == "!=":
            positive = not positive
        elif op != "=":
            self.fail("expected '=' or '!=' after term")
        right = self.parse_term()
        eq = self.table.predicate("=", 2)
        return Literal(positive, Term(eq, (left, right)))

    def parse_term(self) -> Term:
        kind, val, line, col = self.advance()
        if kind == "upper":
            return Term(self.table.variable(val))
        if kind != "lower" or val == "$false":
            raise ParseError(f"expected term, found {val or 'end of input'!r}", line, col)
        args: list[Term] = []
        if self.peek()[1] == "(":
            self.advance()
            args.append(self.parse_term())
            while self.peek()[1] == ",":
                self.advance()
                args.append(self.parse_term())
            self.expect(")")
        return Term(self.table.function(val, len(args)), tuple(args))


def parse_problem(text: str) -> Problem:
    """Parse TPTP CNF text into axioms and negated-conjecture clauses."""
    return _Parser(text).parse_problem()


def parse_file(path) -> Problem:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())


def format_term(t: Term) -> str:
    if not t.args:
        return t.symbol.name
    return f"{t.symbol.name}({','.join(format_term(a) for a in t.args)})"


def format_literal(lit: Literal) -> str:
    if lit.atom.symbol.name == "=":
        left, right = lit.atom.args
        op = "=" if lit.positive else "!="
        return f"{format_term(left)} {op} {format_term(right)}"
    body = format_term(lit.atom)
    return body if lit.positive else "~" + body


def format_clause_body(c: Clause) -> str:
    if c.is_empty:
        return "$false"
    return " | ".join(format_literal(lit) for lit in c.literals)


def format_problem(p: Problem) -> str:
    """Canonical TPTP text that reparses to a structurally identical problem."""
    lines = []
    for c in p.axioms:
        lines.append(f"cnf(c{c.id}, axiom, ({format_clause_body(c)})).")
    for c in p.negated_conjecture:
        lines.append(f"cnf(c{c.id}, negated_conjecture, ({format_clause_body(c)})).")
    return "\n".join(lines) + "\n"
