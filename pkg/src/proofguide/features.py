"""Sparse bag-of-feature vectorization of clauses and actions.

Four modules, concatenated in fixed order: hashed chain patterns (doubled
for polarity), hashed term walks of lengths 1..3, and four raw base
feature slots (age, weight, literal count, set-of-support).
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field

from .engine import NUM_RULES, Action, ProofState
from .fol import Clause, Literal, Term


@dataclass
class VectorizerConfig:
    chain_dim: int = 645          # per polarity half; chain module size is 2*chain_dim
    walk_dims: tuple[int, int, int] = (256, 256, 256)
    treat_constants_as_functions: bool = True
    base_feature_count: int = 4

    @property
    def dim(self) -> int:
        return 2 * self.chain_dim + sum(self.walk_dims) + self.base_feature_count

    def module_offsets(self) -> list[tuple[str, int]]:
        """(module name, start offset) pairs in concatenation order."""
        offs = [("chains", 0)]
        pos = 2 * self.chain_dim
        for l, d in enumerate(self.walk_dims, start=1):
            offs.append((f"walks{l}", pos))
            pos += d
        offs.append(("base", pos))
        return offs


@dataclass(frozen=True)
class ChainPattern:
    linearization: str
    positive: bool


@dataclass
class SparseFeatureVector:
    dim: int
    entries: dict[int, float] = field(default_factory=dict)

    def add(self, index: int, count: float = 1.0) -> None:
        if not 0 <= index < self.dim:
            raise IndexError(f"index {index} out of range for dim {self.dim}")
        self.entries[index] = self.entries.get(index, 0.0) + count

    def set(self, index: int, value: float) -> None:
        if not 0 <= index < self.dim:
            raise IndexError(f"index {index} out of range for dim {self.dim}")
        self.entries[index] = value

    def to_debug_text(self, cfg: VectorizerConfig | None = None) -> str:
        lines = []
        if cfg is not None:
            bounds = " ".join(f"{name}@{off}" for name, off in cfg.module_offsets())
            lines.append(f"# modules {bounds}")
        for index in sorted(self.entries):
            lines.append(f"{index}:{self.entries[index]:g}")
        return "\n".join(lines) + "\n"


def md5_index(linearization: str, dim: int) -> int:
    """First 8 bytes of MD5(UTF-8 text), big-endian, modulo dim."""
    digest = hashlib.md5(linearization.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % dim


def hash_pattern(p: ChainPattern, d: int) -> int:
    """Index in [0, 2d): positive patterns in the low half, negative high."""
    base = md5_index(p.linearization, d)
    return base if p.positive else d + base


def _chain_linearizations(atom: Term, constants_as_leaves: bool) -> list[str]:
    """One linearization per root-to-leaf path of the atom tree."""

    def render(t: Term, path: tuple[int, ...]) -> str:
        if not path:
            if t.is_variable:
                return "*"
            if not t.args:
                return t.symbol.name if constants_as_leaves else "*"
            # chain stops above this subterm: everything below is elided
            return "*"
        parts = []
        for i, a in enumerate(t.args):
            parts.append(render(a, path[1:]) if i == path[0] else "*")
        return f"{t.symbol.name}({','.join(parts)})"

    paths: list[tuple[int, ...]] = []

    def walk(t: Term, prefix: tuple[int, ...]) -> None:
        if t.is_variable or not t.args:
            paths.append(prefix)
            return
        for i, a in enumerate(t.args):
            walk(a, prefix + (i,))

    if not atom.args:
        return [atom.symbol.name]
    for i, a in enumerate(atom.args):
        walk(a, (i,))
    return [render(atom, p) for p in paths]


def chain_patterns(c: Clause, cfg: VectorizerConfig | None = None) -> Counter:
    """Multiset of chain patterns: predicate-to-leaf paths, siblings and
    variables wildcarded, counted with collapsed-pattern multiplicity."""
    cfg = cfg or VectorizerConfig()
    out: Counter = Counter()
    for lit in c.literals:
        for lin in _chain_linearizations(lit.atom, cfg.treat_constants_as_functions):
            out[ChainPattern(lin, lit.positive)] += 1
    return out


def chain_vectorize(c: Clause, d: int, cfg: VectorizerConfig | None = None) -> SparseFeatureVector:
    vec = SparseFeatureVector(2 * d)
    for pattern, count in chain_patterns(c, cfg).items():
        vec.add(hash_pattern(pattern, d), count)
    return vec


def _walk_symbol(t: Term) -> str:
    return "*" if t.is_variable else t.symbol.name


def term_walks(c: Clause, length: int) -> Counter:
    """Multiset of downward symbol sequences of the given node count.

    Variables normalize to `*`; walks starting at the atom root carry the
    literal polarity as a +/- prefix on the predicate symbol.
    """
    if length not in (1, 2, 3):
        raise ValueError("walk length must be 1, 2 or 3")
    out: Counter = Counter()

    def nodes(t: Term):
        yield t
        for a in t.args:
            yield from nodes(a)

    def extend(t: Term, labels: tuple[str, ...]) -> None:
        if len(labels) == length:
            out[">".join(labels)] += 1
            return
        for a in t.args:
            extend(a, labels + (_walk_symbol(a),))

    for lit in c.literals:
        root = lit.atom
        marker = ("+" if lit.positive else "-") + root.symbol.name
        extend(root, (marker,))
        for node in nodes(root):
            if node is root:
                continue
            extend(node, (_walk_symbol(node),))
    return out


def base_features(c: Clause, state: ProofState | None = None) -> list[float]:
    return [
        float(c.age),
        float(c.weight()),
        float(c.literal_count()),
        1.0 if c.set_of_support else 0.0,
    ]


def vectorize_clause(c: Clause, state: ProofState | None, cfg: VectorizerConfig) -> SparseFeatureVector:
    """Concatenation: chains (2d) | walks l=1..3 | base features."""
    vec = SparseFeatureVector(cfg.dim)
    for pattern, count in chain_patterns(c, cfg).items():
        vec.add(hash_pattern(pattern, cfg.chain_dim), count)
    offset = 2 * cfg.chain_dim
    for l, wdim in enumerate(cfg.walk_dims, start=1):
        for walk, count in term_walks(c, l).items():
            vec.add(offset + md5_index(walk, wdim), count)
        offset += wdim
    for i, value in enumerate(base_features(c, state)):
        vec.set(offset + i, value)
    return vec


def rule_one_hot(action: Action) -> list[float]:
    onehot = [0.0] * NUM_RULES
    onehot[action.rule.rule_id] = 1.0
    return onehot


def vectorize_action(action: Action, state: ProofState, cfg: VectorizerConfig):
    """(clause features, inference-rule one-hot of size |rules|)."""
    clause = state.clauses[action.clause_id]
    return vectorize_clause(clause, state, cfg), rule_one_hot(action)
