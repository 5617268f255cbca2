"""Constituents as augmented dependencies: encode, decode, label repair.

A head-annotated unaryless constituent tree maps to one dependency arc per
word: each non-head child of a constituent with label X sitting at level p of
its head word's spine becomes an arc (head_word, child_head_word, X#p), and
the word heading the whole tree attaches to the dummy root (position 0) with
the bare label ``root``.  Decoding rebuilds every spine bottom-up from the
arcs grouped by attachment order.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import FormatError, StructuralError
from .trees import (PLACEHOLDER_POS, ROOT_LABEL, Child, ConstituentTree,
                    Token, make_node, spine_nodes)


@dataclass(frozen=True)
class AugmentedLabel:
    nonterminal: str | None
    order: int | None

    def __post_init__(self):
        if (self.nonterminal is None) != (self.order is None):
            raise ValueError("nonterminal and order must be both set or both absent")
        if self.order is not None and self.order < 1:
            raise ValueError("attachment order must be >= 1")

    @property
    def is_root(self) -> bool:
        return self.nonterminal is None

    def __str__(self) -> str:
        return "root" if self.is_root else f"{self.nonterminal}#{self.order}"

    @classmethod
    def parse(cls, s: str) -> "AugmentedLabel":
        if s == "root":
            return ROOT_ARC_LABEL
        nt, sep, p = s.rpartition("#")
        if not sep or not p.isdigit() or int(p) < 1 or not nt:
            raise FormatError(f"bad augmented label {s!r}")
        return cls(nt, int(p))


ROOT_ARC_LABEL = AugmentedLabel(None, None)


@dataclass(frozen=True)
class AugmentedDependencyTree:
    """Heads are 1-based word positions, 0 being the dummy root."""

    tokens: tuple[Token, ...]
    heads: tuple[int, ...]  # heads[i] = head of word i (0-based dependent)
    labels: tuple[AugmentedLabel, ...]

    def __post_init__(self):
        n = len(self.tokens)
        if len(self.heads) != n or len(self.labels) != n:
            raise StructuralError("heads/labels length mismatch")
        roots = [i for i, h in enumerate(self.heads) if h == 0]
        if len(roots) != 1:
            raise StructuralError(f"expected exactly one root attachment, got {len(roots)}")
        for i in range(n):
            if not 0 <= self.heads[i] <= n:
                raise StructuralError(f"head of word {i} out of range")
            seen, j = set(), i
            while self.heads[j] != 0:
                j = self.heads[j] - 1
                if j in seen:
                    raise StructuralError(f"cycle reached from word {i}")
                seen.add(j)

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def root_word(self) -> int:
        return next(i for i, h in enumerate(self.heads) if h == 0)

    def dependents_of(self, word: int) -> list[int]:
        return [d for d, h in enumerate(self.heads) if h == word + 1]


def encode(tree: ConstituentTree) -> AugmentedDependencyTree:
    """Reduce a head-annotated unaryless tree to augmented dependency arcs."""
    n = tree.n
    heads = [-1] * n
    labels: list[AugmentedLabel] = [ROOT_ARC_LABEL] * n
    by_head = spine_nodes(tree)  # validates head assignment
    for w, chain in by_head.items():
        for level, node in enumerate(chain, start=1):
            if len(node.children) < 2:
                raise StructuralError(
                    f"unary node {node.label!r}: encode requires a unaryless tree")
            for c in node.children:
                d = c if isinstance(c, int) else c.head_index
                if d == w:
                    continue
                heads[d] = w + 1
                labels[d] = AugmentedLabel(node.label, level)
    root_word = tree.root if isinstance(tree.root, int) else tree.root.head_index
    heads[root_word] = 0
    labels[root_word] = ROOT_ARC_LABEL
    if any(h < 0 for h in heads):
        raise StructuralError("some words were never attached")
    return AugmentedDependencyTree(tree.tokens, tuple(heads), tuple(labels))


def decode(dep: AugmentedDependencyTree) -> ConstituentTree:
    """Exact inverse of encode on well-formed label sets.

    Ill-formed labels (gapped orders, level conflicts) raise StructuralError;
    run repair_labels first to make decoding total.
    """
    levels: dict[int, dict[int, tuple[str, list[int]]]] = {i: {} for i in range(dep.n)}
    for d in range(dep.n):
        h, lab = dep.heads[d], dep.labels[d]
        if h == 0:
            continue
        if lab.is_root:
            raise StructuralError(f"non-root arc of word {d} carries the root label")
        nt, group = levels[h - 1].setdefault(lab.order, (lab.nonterminal, []))
        if nt != lab.nonterminal:
            raise StructuralError(
                f"conflicting nonterminals at level {lab.order} of word {h - 1}")
        group.append(d)

    def build(word: int) -> Child:
        spine = levels[word]
        unit: Child = word
        for p in range(1, len(spine) + 1):
            if p not in spine:
                raise StructuralError(
                    f"attachment orders of word {word} are not contiguous: "
                    f"{sorted(spine)}")
            nt, deps = spine[p]
            unit = make_node(nt, [unit] + [build(d) for d in deps], head_index=word)
        return unit

    root = build(dep.root_word)
    if isinstance(root, int) and dep.n > 1:
        # defensive: a rootless spine cannot arise from a structurally valid
        # multi-word tree, but keep decode total regardless
        root = make_node(ROOT_LABEL, [build(d) for d in range(dep.n)
                                      if dep.heads[d] == 0 or d == dep.root_word],
                         head_index=dep.root_word)
    return ConstituentTree(dep.tokens, root)


def repair_labels(dep: AugmentedDependencyTree) -> AugmentedDependencyTree:
    """Make an arbitrary label assignment decodable.

    Per head word, attachment orders are compressed to a contiguous 1..k run
    preserving relative order, and nonterminal conflicts within a level are
    resolved in favour of the leftmost dependent.  Stray ``root`` labels on
    non-root arcs become VROOT#1 before compression; the root arc is forced
    to ``root``.
    """
    labels = list(dep.labels)
    for d in range(dep.n):
        if dep.heads[d] == 0:
            labels[d] = ROOT_ARC_LABEL
        elif labels[d].is_root:
            labels[d] = AugmentedLabel(ROOT_LABEL, 1)
    for h in range(dep.n):
        deps = dep.dependents_of(h)
        if not deps:
            continue
        orders = sorted({labels[d].order for d in deps})
        remap = {p: i for i, p in enumerate(orders, start=1)}
        winner: dict[int, str] = {}
        for d in sorted(deps):
            winner.setdefault(labels[d].order, labels[d].nonterminal)
        for d in deps:
            old = labels[d]
            labels[d] = AugmentedLabel(winner[old.order], remap[old.order])
    return AugmentedDependencyTree(dep.tokens, dep.heads, tuple(labels))


def is_nonprojective(dep: AugmentedDependencyTree) -> bool:
    """True iff the tree, drawn with the dummy root at position 0, has
    crossing arcs."""
    arcs = [tuple(sorted((dep.heads[d], d + 1))) for d in range(dep.n)]
    for i, (a1, a2) in enumerate(arcs):
        for b1, b2 in arcs[i + 1:]:
            if a1 < b1 < a2 < b2 or b1 < a1 < b2 < a2:
                return True
    return False


# ---------------------------------------------------------------------------
# tab-separated dependency file format: ID FORM POS HEAD LABEL


def emit_dependencies(dep: AugmentedDependencyTree) -> str:
    lines = []
    for i, t in enumerate(dep.tokens):
        lines.append(f"{i + 1}\t{t.form}\t{t.pos}\t{dep.heads[i]}\t{dep.labels[i]}")
    return "\n".join(lines)


def parse_dependencies(block: str) -> AugmentedDependencyTree:
    tokens, heads, labels = [], [], []
    for ln in block.strip().splitlines():
        cols = ln.rstrip("\n").split("\t")
        if len(cols) != 5:
            raise FormatError(f"expected 5 tab-separated columns, got {len(cols)}: {ln!r}")
        wid, form, pos, head, label = cols
        tokens.append(Token(int(wid) - 1, form, pos or PLACEHOLDER_POS))
        heads.append(int(head))
        labels.append(AugmentedLabel.parse(label))
    return AugmentedDependencyTree(tuple(tokens), tuple(heads), tuple(labels))


def read_dependency_file(path) -> list[AugmentedDependencyTree]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return [parse_dependencies(b) for b in text.split("\n\n") if b.strip()]


def write_dependency_file(path, deps) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in deps:
            fh.write(emit_dependencies(d) + "\n\n")
