"""Derivation dumps and independent proof checking.

The dump is plain JSON: every clause with its literals in TPTP syntax and
its parent record. Verification re-parses the clauses with a fresh symbol
table and re-derives every inference from its premises, so it shares no
state with the search that produced the proof.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .engine import factor, resolve
from .fol import Clause, Substitution, SymbolTable, VariableCounter, mgu, rename_clause, variant_key
from .tptp import format_clause_body, parse_problem


class VerificationError(Exception):
    pass


def derivation_dump(state, outcome) -> dict:
    """JSON-serializable record of a full derivation."""
    clauses = []
    for cid in sorted(state.clauses):
        c = state.clauses[cid]
        clauses.append(
            {
                "id": c.id,
                "literals": format_clause_body(c),
                "age": c.age,
                "parents": [[rule, list(premises)] for rule, premises in c.parents],
                "from_negated_conjecture": c.from_negated_conjecture,
                "set_of_support": c.set_of_support,
            }
        )
    return {
        "version": 1,
        "clauses": clauses,
        "empty_clause_id": outcome.empty_clause_id,
        "outcome": outcome.kind.value,
    }


def _parse_clause(body: str, cid: int, table_text: list[str]) -> None:
    table_text.append(f"cnf(c{cid}, axiom, ({body})).")


def _load_clauses(dump: dict) -> dict[int, Clause]:
    records = dump.get("clauses")
    if not isinstance(records, list) or not records:
        raise VerificationError("dump contains no clauses")
    lines = []
    ids = []
    for rec in records:
        lines.append(f"cnf(c{rec['id']}, axiom, ({rec['literals']})).")
        ids.append(rec["id"])
    problem = parse_problem("\n".join(lines))
    clauses: dict[int, Clause] = {}
    for rec, parsed in zip(records, problem.clauses):
        clauses[rec["id"]] = Clause(
            literals=parsed.literals,
            id=rec["id"],
            age=rec.get("age", 0),
            parents=tuple((rule, tuple(premises)) for rule, premises in rec.get("parents", [])),
        )
    return clauses


def find_step_unifier(conclusion: Clause, premises: list[Clause], rule: str,
                      table: SymbolTable, counter: VariableCounter):
    """Re-derive the inference; returns the unifier of a matching literal
    pair, or None when no derivation reproduces the conclusion."""
    renamed = [rename_clause(c, table, counter) for c in premises]
    if rule == "resolution":
        if len(renamed) != 2:
            return None
        candidates = resolve(renamed[0], renamed[1], next_id=0, age=0)
    elif rule == "factoring":
        if len(renamed) != 1:
            return None
        candidates = factor(renamed[0], next_id=0, age=0)
    else:
        return None
    want = variant_key(conclusion)
    for cand in candidates:
        if variant_key(cand) == want:
            return _recover_unifier(cand, renamed, rule)
    return None


def _recover_unifier(candidate: Clause, premises: list[Clause], rule: str):
    # candidate parents carry premise ids 0-based from resolve/factor; the
    # unifier itself is recomputed from the matching literal pair below
    if rule == "resolution":
        c1, c2 = premises
        for l1 in c1.literals:
            for l2 in c2.literals:
                if l1.positive != l2.positive and l1.atom.symbol == l2.atom.symbol:
                    sigma = mgu(l1.atom, l2.atom)
                    if sigma is not None:
                        return sigma
    else:
        (c,) = premises
        lits = c.literals
        for i in range(len(lits)):
            for j in range(i + 1, len(lits)):
                if lits[i].positive == lits[j].positive and lits[i].atom.symbol == lits[j].atom.symbol:
                    sigma = mgu(lits[i].atom, lits[j].atom)
                    if sigma is not None:
                        return sigma
    return Substitution()


@dataclass
class VerificationResult:
    ok: bool
    checked_steps: int
    message: str = ""


def verify_derivation(dump: dict) -> VerificationResult:
    """Check that every derived clause follows from its premises and that
    the empty clause traces back to input clauses."""
    try:
        clauses = _load_clauses(dump)
    except (KeyError, TypeError, VerificationError) as exc:
        return VerificationResult(False, 0, f"malformed dump: {exc}")

    empty_id = dump.get("empty_clause_id")
    if empty_id is None:
        return VerificationResult(False, 0, "no empty clause recorded")
    if empty_id not in clauses or clauses[empty_id].literals:
        return VerificationResult(False, 0, f"clause {empty_id} is not the empty clause")

    table = SymbolTable()
    counter = VariableCounter()
    checked = 0
    for cid in sorted(clauses):
        c = clauses[cid]
        if not c.parents:
            continue
        for rule, premise_ids in c.parents:
            if any(p not in clauses for p in premise_ids):
                return VerificationResult(False, checked, f"clause {cid}: missing premise")
            if any(p >= cid for p in premise_ids):
                return VerificationResult(False, checked, f"clause {cid}: premise does not precede it")
            premises = [clauses[p] for p in premise_ids]
            sigma = find_step_unifier(c, premises, rule, table, counter)
            if sigma is None:
                return VerificationResult(
                    False, checked, f"clause {cid}: not derivable from {list(premise_ids)} by {rule}"
                )
            checked += 1

    # backward closure from the contradiction must bottom out at inputs
    stack = [empty_id]
    seen: set[int] = set()
    while stack:
        cid = stack.pop()
        if cid in seen:
            continue
        seen.add(cid)
        c = clauses[cid]
        if c.parents:
            for _, premises in c.parents:
                stack.extend(premises)
        # input clauses terminate the walk
    roots = [cid for cid in seen if not clauses[cid].parents]
    if not roots:
        return VerificationResult(False, checked, "proof does not reach any input clause")
    return VerificationResult(True, checked)


def verify_file(path) -> VerificationResult:
    try:
        with open(path, encoding="utf-8") as fh:
            dump = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        return VerificationResult(False, 0, f"unreadable dump: {exc}")
    if not isinstance(dump, dict):
        return VerificationResult(False, 0, "malformed dump: not an object")
    return verify_derivation(dump)


def proof_listing(state, outcome) -> str:
    """Human-readable proof: one line per step with clause, rule, premises
    and the recomputed unifier."""
    if outcome.empty_clause_id is None:
        return "no refutation\n"
    from .engine import extract_proof

    closure = extract_proof(state.clauses, outcome.empty_clause_id)
    table = SymbolTable()
    counter = VariableCounter()
    lines = []
    for cid in sorted(closure):
        c = state.clauses[cid]
        if not c.parents:
            lines.append(f"[{cid}] {format_clause_body(c)}   (input)")
            continue
        rule, premise_ids = c.parents[0]
        premises = [state.clauses[p] for p in premise_ids]
        sigma = find_step_unifier(c, premises, rule, table, counter)
        lines.append(
            f"[{cid}] {format_clause_body(c)}   ({rule} {list(premise_ids)}, unifier {sigma})"
        )
    return "\n".join(lines) + "\n"
