"""Constituent-tree data model, discbracket I/O, head rules and random trees.

Terminals are 0-based word indices; a tree over n words uses exactly the
indices 0..n-1.  Internal nodes carry set-valued yields, so gapped
(discontinuous) constituents are representable.  All types are immutable
after construction and children are kept in canonical order (sorted by the
smallest element of their yield).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Union

from .errors import FormatError, StructuralError

PLACEHOLDER_POS = "--"
ROOT_LABEL = "VROOT"

Child = Union["ConstituentNode", int]


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    pos: str = PLACEHOLDER_POS

    @property
    def has_pos(self) -> bool:
        return self.pos != PLACEHOLDER_POS


@dataclass(frozen=True)
class ConstituentNode:
    label: str
    children: tuple[Child, ...]
    head_index: int | None = None

    @cached_property
    def yield_set(self) -> frozenset[int]:
        out: set[int] = set()
        for c in self.children:
            out.update(c.yield_set if isinstance(c, ConstituentNode) else (c,))
        return frozenset(out)

    def subtrees(self) -> Iterator["ConstituentNode"]:
        yield self
        for c in self.children:
            if isinstance(c, ConstituentNode):
                yield from c.subtrees()


def child_yield(c: Child) -> frozenset[int]:
    return c.yield_set if isinstance(c, ConstituentNode) else frozenset((c,))


def make_node(label: str, children: list[Child] | tuple[Child, ...],
              head_index: int | None = None) -> ConstituentNode:
    """Build a node with children in canonical (min-yield) order."""
    if not children:
        raise StructuralError(f"internal node {label!r} has no children")
    ordered = tuple(sorted(children, key=lambda c: min(child_yield(c))))
    return ConstituentNode(label, ordered, head_index)


def is_discontinuous(node: ConstituentNode) -> bool:
    ys = node.yield_set
    return max(ys) - min(ys) + 1 != len(ys)


@dataclass(frozen=True)
class ConstituentTree:
    tokens: tuple[Token, ...]
    root: Child  # bare int only for single-word trees

    def __post_init__(self):
        n = len(self.tokens)
        if n == 0:
            raise StructuralError("tree has no tokens")
        if {t.index for t in self.tokens} != set(range(n)):
            raise StructuralError("token indices are not 0..n-1")
        if child_yield(self.root) != frozenset(range(n)):
            raise StructuralError(
                f"root yield {sorted(child_yield(self.root))} does not cover 0..{n - 1}")
        if isinstance(self.root, ConstituentNode):
            _check_partition(self.root)

    @property
    def n(self) -> int:
        return len(self.tokens)

    def internal_nodes(self) -> Iterator[ConstituentNode]:
        if isinstance(self.root, ConstituentNode):
            yield from self.root.subtrees()


def _check_partition(node: ConstituentNode) -> None:
    seen: set[int] = set()
    for c in node.children:
        ys = child_yield(c)
        if seen & ys:
            raise StructuralError(
                f"overlapping child yields under {node.label!r}")
        seen |= ys
        if isinstance(c, ConstituentNode):
            _check_partition(c)


# ---------------------------------------------------------------------------
# discbracket parsing / emission


def _tokenize(line: str) -> list[tuple[str, int]]:
    toks, i = [], 0
    while i < len(line):
        ch = line[i]
        if ch in "()":
            toks.append((ch, i))
            i += 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < len(line) and not line[j].isspace() and line[j] not in "()":
                j += 1
            toks.append((line[i:j], i))
            i = j
    return toks


def _parse_terminal(atom: str, pos_in_line: int) -> tuple[int, str, str]:
    idx_s, _, rest = atom.partition("=")
    if not rest:
        raise FormatError(f"char {pos_in_line}: terminal {atom!r} lacks '='")
    try:
        idx = int(idx_s)
    except ValueError:
        raise FormatError(f"char {pos_in_line}: bad terminal index in {atom!r}")
    if "/" in rest:
        form, _, pos = rest.rpartition("/")
    else:
        form, pos = rest, PLACEHOLDER_POS
    return idx, form, pos


def parse_discbracket(line: str) -> ConstituentTree:
    """Parse one indexed-bracket tree, e.g. ``(S (NP 0=a 2=c) 1=b)``."""
    toks = _tokenize(line)
    if not toks:
        raise FormatError("empty tree line")
    terminals: dict[int, Token] = {}
    pos = 0

    def parse_node() -> Child:
        nonlocal pos
        tok, at = toks[pos]
        if tok == ")":
            raise FormatError(f"char {at}: unexpected ')'")
        if tok != "(":
            idx, form, ptag = _parse_terminal(tok, at)
            if idx in terminals:
                raise FormatError(f"char {at}: duplicate terminal index {idx}")
            terminals[idx] = Token(idx, form, ptag)
            pos += 1
            return idx
        pos += 1
        if pos >= len(toks) or toks[pos][0] in "()":
            raise FormatError(f"char {at}: missing node label")
        label = toks[pos][0]
        pos += 1
        children: list[Child] = []
        while pos < len(toks) and toks[pos][0] != ")":
            children.append(parse_node())
        if pos >= len(toks):
            raise FormatError(f"char {at}: unbalanced '(' (no matching ')')")
        if not children:
            raise FormatError(f"char {at}: empty node {label!r}")
        pos += 1
        return make_node(label, children)

    root = parse_node()
    if pos != len(toks):
        raise FormatError(f"char {toks[pos][1]}: trailing material after tree")
    n = len(terminals)
    if set(terminals) != set(range(n)):
        missing = sorted(set(range(max(terminals) + 1)) - set(terminals))
        raise FormatError(f"terminal indices not contiguous, missing {missing}")
    tokens = tuple(terminals[i] for i in range(n))
    return ConstituentTree(tokens, root)


def _emit_child(c: Child, tokens: tuple[Token, ...]) -> str:
    if isinstance(c, int):
        t = tokens[c]
        return f"{t.index}={t.form}/{t.pos}" if t.has_pos else f"{t.index}={t.form}"
    inner = " ".join(_emit_child(k, tokens) for k in c.children)
    return f"({c.label} {inner})"


def emit_discbracket(tree: ConstituentTree) -> str:
    if isinstance(tree.root, int):
        # bare single terminal: wrap in the root symbol to stay parseable
        return f"({ROOT_LABEL} {_emit_child(tree.root, tree.tokens)})"
    return _emit_child(tree.root, tree.tokens)


def read_treebank(path) -> list[ConstituentTree]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(parse_discbracket(line))
            except FormatError as e:
                raise FormatError(f"{path}:{ln}: {e}") from e
    return out


def write_treebank(path, trees) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in trees:
            fh.write(emit_discbracket(t) + "\n")


# ---------------------------------------------------------------------------
# transformations


def strip_unaries(tree: ConstituentTree) -> ConstituentTree:
    """Delete every single-child node bottom-up, promoting the child."""

    def strip(c: Child) -> Child:
        if isinstance(c, int):
            return c
        kids = [strip(k) for k in c.children]
        if len(kids) == 1:
            return kids[0]
        return make_node(c.label, kids, c.head_index)

    return ConstituentTree(tree.tokens, strip(tree.root))


@dataclass(frozen=True)
class HeadRuleSet:
    rules: dict[str, tuple[tuple[str, tuple[str, ...]], ...]]
    default_direction: str = "left"

    def groups_for(self, label: str) -> tuple[tuple[str, tuple[str, ...]], ...]:
        return self.rules.get(label, ((self.default_direction, ()),))


def load_head_rules(path, default_direction: str = "left") -> HeadRuleSet:
    rules: dict[str, list[tuple[str, tuple[str, ...]]]] = {}
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) < 2 or fields[1] not in ("left", "right"):
                raise FormatError(f"{path}:{ln}: expected 'NONTERM left|right CATS...'")
            rules.setdefault(fields[0], []).append((fields[1], tuple(fields[2:])))
    return HeadRuleSet({k: tuple(v) for k, v in rules.items()}, default_direction)


def assign_heads(tree: ConstituentTree, rules: HeadRuleSet) -> ConstituentTree:
    """Pick a head child per node by scanning priority categories in rule order."""

    def label_of(c: Child) -> str:
        return tree.tokens[c].pos if isinstance(c, int) else c.label

    def head_of(c: Child) -> int:
        return c if isinstance(c, int) else c.head_index  # type: ignore[return-value]

    def walk(c: Child) -> Child:
        if isinstance(c, int):
            return c
        kids = [walk(k) for k in c.children]
        groups = rules.groups_for(c.label)
        winner = None
        for direction, cats in groups:
            order = kids if direction == "left" else list(reversed(kids))
            for cat in cats:
                for k in order:
                    if label_of(k) == cat:
                        winner = k
                        break
                if winner is not None:
                    break
            if winner is not None:
                break
        if winner is None:
            direction = groups[0][0]
            winner = kids[0] if direction == "left" else kids[-1]
        return make_node(c.label, kids, head_of(winner))

    return ConstituentTree(tree.tokens, walk(tree.root))


@dataclass(frozen=True)
class Spine:
    word: int
    levels: tuple[str, ...]  # level 1 first (lowest constituent)


def spine_nodes(tree: ConstituentTree) -> dict[int, list[ConstituentNode]]:
    """Map each word to the chain of nodes it heads, lowest first.

    Raises StructuralError when the headed nodes of some word do not form an
    ancestor chain.
    """
    parent: dict[int, ConstituentNode | None] = {}
    depth: dict[int, int] = {}
    by_head: dict[int, list[ConstituentNode]] = {t.index: [] for t in tree.tokens}
    for node in tree.internal_nodes():
        if node.head_index is None:
            raise StructuralError(f"node {node.label!r} has no head assigned")
        by_head[node.head_index].append(node)
    if isinstance(tree.root, ConstituentNode):
        parent[id(tree.root)] = None
        depth[id(tree.root)] = 0
        for node in tree.internal_nodes():
            for c in node.children:
                if isinstance(c, ConstituentNode):
                    parent[id(c)] = node
                    depth[id(c)] = depth[id(node)] + 1
    for w, nodes in by_head.items():
        nodes.sort(key=lambda nd: -depth[id(nd)])
        for lower, upper in zip(nodes, nodes[1:]):
            anc = parent[id(lower)]
            while anc is not None and anc is not upper:
                anc = parent[id(anc)]
            if anc is not upper:
                raise StructuralError(
                    f"nodes headed by word {w} do not form an ancestor chain")
    return by_head


def extract_spines(tree: ConstituentTree) -> list[Spine]:
    by_head = spine_nodes(tree)
    return [Spine(w, tuple(nd.label for nd in by_head[w]))
            for w in range(tree.n)]


# ---------------------------------------------------------------------------
# random tree generation (property-test corpus)

WORD_POOL = (
    "der die das ein kam lief sah gab Hund Katze Mann Frau Kind Haus Buch "
    "Wagen heute gestern schnell leise nicht nichts etwas sehr gern rot alt "
    "neu gut dort hier wieder").split()
POS_POOL = ("ART", "NN", "VVFIN", "ADJA", "ADV", "PPER")
LABEL_POOL = ("S", "NP", "VP", "PP", "AP", "AVP")


def _partition(rng: random.Random, idxs: list[int], rate: float) -> list[list[int]]:
    k = rng.randint(2, min(4, len(idxs)))
    cuts = sorted(rng.sample(range(1, len(idxs)), k - 1))
    bounds = [0] + cuts + [len(idxs)]
    parts = [idxs[a:b] for a, b in zip(bounds, bounds[1:])]
    if len(idxs) >= 3 and rng.random() < rate:
        i, j = rng.sample(range(k), 2)
        a, b = rng.randrange(len(parts[i])), rng.randrange(len(parts[j]))
        parts[i][a], parts[j][b] = parts[j][b], parts[i][a]
        parts = [sorted(p) for p in parts]
    return parts


def generate_random_tree(n: int, discontinuity_rate: float, seed: int) -> ConstituentTree:
    """Deterministic random unaryless tree over n words."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    tokens = tuple(Token(i, rng.choice(WORD_POOL), rng.choice(POS_POOL))
                   for i in range(n))

    def build(idxs: list[int], label: str) -> Child:
        if len(idxs) == 1:
            return idxs[0]
        parts = _partition(rng, idxs, discontinuity_rate)
        kids: list[Child] = [build(p, rng.choice(LABEL_POOL)) for p in parts]
        return make_node(label, kids)

    return ConstituentTree(tokens, build(list(range(n)), ROOT_LABEL))
