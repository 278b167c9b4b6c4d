import hashlib
import struct
from collections import Counter

import numpy as np
import pytest

from proofguide.engine import Action, ProofState, Rule
from proofguide.features import (
    ChainPattern,
    SparseFeatureVector,
    VectorizerConfig,
    base_features,
    chain_patterns,
    chain_vectorize,
    hash_pattern,
    md5_index,
    term_walks,
    vectorize_action,
    vectorize_clause,
)
from proofguide.fol import Clause, Literal, SymbolKind, Term
from proofguide.tptp import parse_problem

from conftest import make_random_clause


def clause_of(text):
    return parse_problem(f"cnf(a, axiom, ({text})).").clauses[0]


# -- independent oracles -----------------------------------------------------

def oracle_chain_patterns(clause, constants_as_leaves=True):
    """Brute-force path enumerator: for every leaf of every atom, rebuild the
    pattern string from the explicit path, independent of the production
    code's recursion scheme."""

    def leaves(term, path):
        if term.symbol.kind is SymbolKind.VARIABLE or not term.args:
            yield path
        else:
            for i, arg in enumerate(term.args):
                yield from leaves(arg, path + [i])

    def build(term, path):
        if not term.args and term.symbol.kind is not SymbolKind.VARIABLE:
            return term.symbol.name if constants_as_leaves else "*"
        if term.symbol.kind is SymbolKind.VARIABLE:
            return "*"
        rendered = []
        for i, arg in enumerate(term.args):
            if path and i == path[0]:
                rendered.append(build(arg, path[1:]))
            else:
                rendered.append("*")
        return term.symbol.name + "(" + ",".join(rendered) + ")"

    out = Counter()
    for lit in clause.literals:
        atom = lit.atom
        if not atom.args:
            out[(atom.symbol.name, lit.positive)] += 1
            continue
        for path in leaves(atom, []):
            out[(build(atom, path), lit.positive)] += 1
    return out


def oracle_term_walks(clause, length):
    """Enumerate downward label paths with an explicit node list."""

    def all_nodes(term):
        stack, out = [term], []
        while stack:
            t = stack.pop()
            out.append(t)
            stack.extend(reversed(t.args))
        return out

    def label(t):
        return "*" if t.symbol.kind is SymbolKind.VARIABLE else t.symbol.name

    out = Counter()
    for lit in clause.literals:
        root = lit.atom
        for node in all_nodes(root):
            start = (("+" if lit.positive else "-") + root.symbol.name) if node is root else label(node)
            frontier = [(node, [start])]
            while frontier:
                t, labels = frontier.pop()
                if len(labels) == length:
                    out[">".join(labels)] += 1
                    continue
                for child in t.args:
                    frontier.append((child, labels + [label(child)]))
    return out


# -- chain patterns ----------------------------------------------------------

class TestChainPatterns:
    def test_paper_style_nested_clause(self):
        c = clause_of("q(f(g(X, Y), Z), g(X, Y))")
        got = {(p.linearization, p.positive): n for p, n in chain_patterns(c).items()}
        # paths through g's two variable slots collapse to one pattern each
        assert got[("q(f(g(*,*),*),*)", True)] == 2
        assert got[("q(*,g(*,*))", True)] == 2
        assert got[("q(f(*,*),*)", True)] == 1
        assert len(got) == 3

    def test_constant_terminates_chain(self):
        c = clause_of("p(a)")
        got = {(p.linearization, p.positive): n for p, n in chain_patterns(c).items()}
        assert got == {("p(a)", True): 1}

    def test_constant_wildcarded_when_flag_off(self):
        cfg = VectorizerConfig(treat_constants_as_functions=False)
        c = clause_of("p(a)")
        got = {p.linearization for p in chain_patterns(c, cfg)}
        assert got == {"p(*)"}

    def test_variable_becomes_wildcard(self):
        c = clause_of("p(X)")
        got = {p.linearization for p in chain_patterns(c)}
        assert got == {"p(*)"}

    def test_propositional_atom(self):
        c = clause_of("p11")
        got = {p.linearization for p in chain_patterns(c)}
        assert got == {"p11"}

    def test_polarity_recorded(self):
        c = clause_of("p(X) | ~q(X)")
        pats = chain_patterns(c)
        assert ChainPattern("p(*)", True) in pats
        assert ChainPattern("q(*)", False) in pats

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_oracle_on_random_clauses(self, table, seed):
        rng = np.random.default_rng(seed)
        for _ in range(100):
            c = make_random_clause(rng, table, depth=4)
            got = Counter(
                {(p.linearization, p.positive): n for p, n in chain_patterns(c).items()}
            )
            assert got == oracle_chain_patterns(c)


# -- hashing -----------------------------------------------------------------

class TestHashing:
    def test_md5_scheme_frozen_value(self):
        # independently recomputed: first 8 bytes of MD5, big-endian, mod d
        digest = hashlib.md5(b"q(*,g(*,*))").digest()
        (v,) = struct.unpack(">Q", digest[:8])
        assert v == 14204397950971430535
        assert v % 645 == 30
        assert md5_index("q(*,g(*,*))", 645) == 30

    def test_polarity_offsets_differ_by_d(self):
        for lin in ("p(*)", "q(*,g(*,*))", "r(a,*,b)"):
            pos = hash_pattern(ChainPattern(lin, True), 645)
            neg = hash_pattern(ChainPattern(lin, False), 645)
            assert neg - pos == 645

    def test_collisions_accumulate(self):
        vec = SparseFeatureVector(10)
        vec.add(3, 1)
        vec.add(3, 2)
        assert vec.entries[3] == 3

    def test_stability_across_calls(self):
        assert md5_index("p(f(*),*)", 997) == md5_index("p(f(*),*)", 997)


# -- chain vectors -----------------------------------------------------------

class TestChainVectorize:
    def test_empty_clause_is_zero_vector(self):
        c = Clause(literals=(), id=0)
        assert chain_vectorize(c, 64).entries == {}

    def test_polarity_separation(self):
        c = clause_of("p(X) | ~q(X)")
        vec = chain_vectorize(c, 64)
        low = {i for i in vec.entries if i < 64}
        high = {i for i in vec.entries if i >= 64}
        assert len(low) == 1 and len(high) == 1

    def test_renaming_invariance(self):
        c1 = clause_of("p(f(X), Y) | ~q(Y)")
        c2 = clause_of("p(f(U), W) | ~q(W)")
        assert chain_vectorize(c1, 64).entries == chain_vectorize(c2, 64).entries

    def test_random_polarity_mass_split(self, table):
        rng = np.random.default_rng(11)
        d = 97
        for _ in range(50):
            c = make_random_clause(rng, table)
            vec = chain_vectorize(c, d)
            pos_mass = sum(v for i, v in vec.entries.items() if i < d)
            neg_mass = sum(v for i, v in vec.entries.items() if i >= d)
            pats = chain_patterns(c)
            assert pos_mass == sum(n for p, n in pats.items() if p.positive)
            assert neg_mass == sum(n for p, n in pats.items() if not p.positive)


# -- term walks --------------------------------------------------------------

class TestTermWalks:
    def test_length_one_of_unit_fact(self):
        got = term_walks(clause_of("p(a)"), 1)
        assert got == Counter({"+p": 1, "a": 1})

    def test_length_two_with_variable(self):
        got = term_walks(clause_of("p(f(X))"), 2)
        assert got == Counter({"+p>f": 1, "f>*": 1})

    def test_no_walk_deeper_than_term(self):
        assert term_walks(clause_of("p(X)"), 3) == Counter()

    def test_negative_root_marker(self):
        got = term_walks(clause_of("~p(a)"), 1)
        assert "-p" in got

    def test_invalid_length_rejected(self):
        with pytest.raises(ValueError):
            term_walks(clause_of("p(a)"), 4)

    @pytest.mark.parametrize("length", [1, 2, 3])
    def test_matches_oracle_on_random_clauses(self, table, length):
        rng = np.random.default_rng(23 + length)
        for _ in range(100):
            c = make_random_clause(rng, table, depth=4)
            assert term_walks(c, length) == oracle_term_walks(c, length)


# -- base features and concatenation -----------------------------------------

class TestBaseFeatures:
    def test_slots(self):
        c = clause_of("p(f(a))")
        assert base_features(c) == [0.0, 3.0, 1.0, 0.0]

    def test_set_of_support_flag(self):
        p = parse_problem("cnf(g, negated_conjecture, ~p(c)).")
        assert base_features(p.clauses[0])[3] == 1.0

    def test_age_slot(self):
        c = Clause(literals=(), id=5, age=7)
        assert base_features(c)[0] == 7.0


class TestVectorizeClause:
    CFG = VectorizerConfig(chain_dim=64, walk_dims=(32, 16, 8))

    def test_total_dimension(self):
        assert self.CFG.dim == 2 * 64 + 32 + 16 + 8 + 4

    def test_deterministic(self):
        c = clause_of("p(f(X)) | ~q(X)")
        v1 = vectorize_clause(c, None, self.CFG)
        v2 = vectorize_clause(c, None, self.CFG)
        assert v1.entries == v2.entries

    def test_variants_differ_only_in_age(self):
        c1 = clause_of("p(f(X), Y)")
        c2 = Clause(literals=c1.literals, id=9, age=4)
        v1 = vectorize_clause(c1, None, self.CFG)
        v2 = vectorize_clause(c2, None, self.CFG)
        age_slot = self.CFG.dim - 4
        diff = {i for i in set(v1.entries) | set(v2.entries)
                if v1.entries.get(i) != v2.entries.get(i)}
        assert diff == {age_slot}

    def test_module_offsets_layout(self):
        offsets = dict(self.CFG.module_offsets())
        assert offsets["chains"] == 0
        assert offsets["walks1"] == 128
        assert offsets["base"] == self.CFG.dim - 4

    def test_debug_dump_lines(self):
        c = clause_of("p(a)")
        text = vectorize_clause(c, None, self.CFG).to_debug_text(self.CFG)
        assert text.startswith("# modules chains@0")
        assert any(":" in line for line in text.splitlines()[1:])


class TestVectorizeAction:
    def test_rule_one_hot(self):
        state = ProofState(parse_problem("cnf(a, axiom, p(a))."))
        cfg = VectorizerConfig(chain_dim=16, walk_dims=(8, 8, 8))
        _, hot_res = vectorize_action(Action(Rule.RESOLUTION, 0), state, cfg)
        _, hot_fac = vectorize_action(Action(Rule.FACTORING, 0), state, cfg)
        assert hot_res == [1.0, 0.0]
        assert hot_fac == [0.0, 1.0]

    def test_clause_part_shared_across_rules(self):
        state = ProofState(parse_problem("cnf(a, axiom, p(a))."))
        cfg = VectorizerConfig(chain_dim=16, walk_dims=(8, 8, 8))
        v1, _ = vectorize_action(Action(Rule.RESOLUTION, 0), state, cfg)
        v2, _ = vectorize_action(Action(Rule.FACTORING, 0), state, cfg)
        assert v1.entries == v2.entries
