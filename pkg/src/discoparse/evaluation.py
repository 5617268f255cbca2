"""Bracket F1 / discontinuous-only F1 and attachment scores.

Bracket scoring ignores punctuation terminals and root-symbol brackets,
micro-averages counts over sentences, and matches duplicate brackets with
multiset semantics.  Attachment scores (LAS/UAS) are computed on augmented
dependency trees and include punctuation; they drive model selection only.
"""

from __future__ import annotations

import json
import unicodedata
from collections import Counter
from dataclasses import dataclass

from .encoding import AugmentedDependencyTree
from .errors import AlignmentError
from .trees import ConstituentTree

DEFAULT_PUNCT_POS = frozenset({"$.", "$,", "$("})
DEFAULT_ROOT_SYMBOLS = frozenset({"VROOT", "ROOT", "TOP"})


def _is_punct_form(form: str) -> bool:
    return bool(form) and all(unicodedata.category(ch).startswith("P")
                              for ch in form)


def punctuation_indices(tree: ConstituentTree,
                        punct_pos: frozenset[str]) -> set[int]:
    out = set()
    for tok in tree.tokens:
        if tok.pos in punct_pos or (not tok.has_pos and _is_punct_form(tok.form)):
            out.add(tok.index)
    return out


def tree_brackets(tree: ConstituentTree, punct_pos: frozenset[str] = DEFAULT_PUNCT_POS,
                  root_symbols: frozenset[str] = DEFAULT_ROOT_SYMBOLS,
                  disc_only: bool = False) -> Counter:
    """Multiset of (label, yield) pairs after punctuation/root filtering."""
    punct = punctuation_indices(tree, punct_pos)
    out: Counter = Counter()
    for node in tree.internal_nodes():
        if node.label in root_symbols:
            continue
        ys = frozenset(node.yield_set - punct)
        if not ys:
            continue
        if disc_only and max(ys) - min(ys) + 1 == len(ys):
            continue
        out[(node.label, ys)] += 1
    return out


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = 100.0 * tp / (tp + fp) if tp + fp else 0.0
    r = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass
class EvalReport:
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    disc_precision: float = 0.0
    disc_recall: float = 0.0
    disc_f1: float = 0.0
    las: float | None = None
    uas: float | None = None
    tp: int = 0
    fp: int = 0
    fn: int = 0
    disc_tp: int = 0
    disc_fp: int = 0
    disc_fn: int = 0
    sentences: int = 0

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)

    def format_table(self) -> str:
        rows = [
            ("F1", self.f1), ("Precision", self.precision), ("Recall", self.recall),
            ("Disc-F1", self.disc_f1), ("Disc-Precision", self.disc_precision),
            ("Disc-Recall", self.disc_recall),
        ]
        if self.las is not None:
            rows += [("LAS", self.las), ("UAS", self.uas)]
        width = max(len(k) for k, _ in rows)
        lines = [f"{k:<{width}}  {v:6.2f}" for k, v in rows]
        lines.append(f"{'Sentences':<{width}}  {self.sentences:6d}")
        return "\n".join(lines)


def _check_aligned(gold, pred) -> None:
    if len(gold) != len(pred):
        raise AlignmentError(
            f"gold has {len(gold)} sentences, prediction has {len(pred)}")
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g.tokens) != len(p.tokens) or any(
                gt.form != pt.form for gt, pt in zip(g.tokens, p.tokens)):
            raise AlignmentError(f"sentence {i}: token mismatch")


def bracket_f1(gold: list[ConstituentTree], pred: list[ConstituentTree],
               punct_pos: frozenset[str] = DEFAULT_PUNCT_POS,
               root_symbols: frozenset[str] = DEFAULT_ROOT_SYMBOLS) -> EvalReport:
    _check_aligned(gold, pred)
    report = EvalReport(sentences=len(gold))
    for g, p in zip(gold, pred):
        for disc in (False, True):
            gb = tree_brackets(g, punct_pos, root_symbols, disc_only=disc)
            pb = tree_brackets(p, punct_pos, root_symbols, disc_only=disc)
            tp = sum((gb & pb).values())
            fp = sum(pb.values()) - tp
            fn = sum(gb.values()) - tp
            if disc:
                report.disc_tp += tp
                report.disc_fp += fp
                report.disc_fn += fn
            else:
                report.tp += tp
                report.fp += fp
                report.fn += fn
    report.precision, report.recall, report.f1 = _prf(
        report.tp, report.fp, report.fn)
    report.disc_precision, report.disc_recall, report.disc_f1 = _prf(
        report.disc_tp, report.disc_fp, report.disc_fn)
    return report


def disc_f1(gold: list[ConstituentTree], pred: list[ConstituentTree],
            punct_pos: frozenset[str] = DEFAULT_PUNCT_POS,
            root_symbols: frozenset[str] = DEFAULT_ROOT_SYMBOLS
            ) -> tuple[float, float, float]:
    r = bracket_f1(gold, pred, punct_pos, root_symbols)
    return r.disc_precision, r.disc_recall, r.disc_f1


def las_uas(gold: list[AugmentedDependencyTree],
            pred: list[AugmentedDependencyTree]) -> tuple[float, float]:
    _check_aligned(gold, pred)
    total = correct_head = correct_both = 0
    for g, p in zip(gold, pred):
        for i in range(g.n):
            total += 1
            if g.heads[i] == p.heads[i]:
                correct_head += 1
                if g.labels[i] == p.labels[i]:
                    correct_both += 1
    if total == 0:
        return 0.0, 0.0
    return 100.0 * correct_both / total, 100.0 * correct_head / total


def evaluate(gold_trees, pred_trees, gold_deps=None, pred_deps=None,
             punct_pos: frozenset[str] = DEFAULT_PUNCT_POS,
             root_symbols: frozenset[str] = DEFAULT_ROOT_SYMBOLS) -> EvalReport:
    report = bracket_f1(gold_trees, pred_trees, punct_pos, root_symbols)
    if gold_deps is not None and pred_deps is not None:
        report.las, report.uas = las_uas(gold_deps, pred_deps)
    return report
