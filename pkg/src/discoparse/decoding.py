"""Left-to-right pointer decoding with cycle rejection, beam search,
label assignment, and constituent recovery.

All decoders rank full head assignments by the same quantity: the sum over
words of the log attention probability of the chosen head.  Labels are
assigned after head search and never take part in beam scoring.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .encoding import (AugmentedDependencyTree, AugmentedLabel,
                       ROOT_ARC_LABEL, decode, repair_labels)
from .model import Model
from .trees import ConstituentTree, Token


def creates_cycle(heads: dict[int, int], i: int, j: int) -> bool:
    """Would attaching word i (0-based) to head j (0=root, else word j-1)
    close a cycle, given the partial assignment in heads (same convention)?"""
    while j != 0:
        w = j - 1
        if w == i:
            return True
        if w not in heads:
            return False
        j = heads[w]
    return False


@dataclass
class BeamItem:
    heads: dict[int, int]
    logp: float


def _forward(model: Model, tokens: list[Token]):
    hs, ss, scores = model.forward(tokens, training=False)
    log_probs = np.stack([np.log(ad.softmax(v).data) for v in scores])
    return hs, ss, log_probs


def attention_log_probs(model: Model, tokens: list[Token]) -> np.ndarray:
    """[n, n+1] matrix of log attention probabilities (inference mode)."""
    return _forward(model, tokens)[2]


def assignment_log_prob(log_probs: np.ndarray, heads: dict[int, int]) -> float:
    return float(sum(log_probs[i, heads[i]] for i in range(log_probs.shape[0])))


def _greedy_heads(log_probs: np.ndarray) -> dict[int, int]:
    n = log_probs.shape[0]
    heads: dict[int, int] = {}
    for i in range(n):
        # ties and exclusions resolved toward the lowest candidate index;
        # j=0 never cycles, so a legal candidate always exists
        for j in np.argsort(-log_probs[i], kind="stable"):
            if not creates_cycle(heads, i, int(j)):
                heads[i] = int(j)
                break
    return heads


def _beam_heads(log_probs: np.ndarray, k: int) -> dict[int, int]:
    n = log_probs.shape[0]
    beam = [BeamItem({}, 0.0)]
    for i in range(n):
        candidates: list[BeamItem] = []
        for item in beam:
            for j in range(n + 1):
                if creates_cycle(item.heads, i, j):
                    continue
                candidates.append(
                    BeamItem({**item.heads, i: j}, item.logp + log_probs[i, j]))
        candidates.sort(key=lambda it: -it.logp)
        beam = candidates[:k]
    return max(beam, key=lambda it: it.logp).heads


def _repair_roots(heads: dict[int, int]) -> dict[int, int]:
    """Keep the first root attachment; re-point extra roots at it."""
    roots = sorted(i for i, h in heads.items() if h == 0)
    if not roots:
        raise AssertionError("acyclic head map must contain a root attachment")
    first = roots[0]
    return {i: (first + 1 if h == 0 and i != first else h)
            for i, h in heads.items()}


def _label_arcs(model: Model, tokens: list[Token], heads: dict[int, int],
                hs, ss) -> AugmentedDependencyTree:
    labels_inv = model.vocab.labels
    root_id = model.vocab.label2id.get("root")
    n = len(tokens)
    labels: list[AugmentedLabel] = []
    for i in range(n):
        if heads[i] == 0:
            labels.append(ROOT_ARC_LABEL)
            continue
        scores = model.label_scores(ss[i], hs[heads[i]], training=False).data.copy()
        if root_id is not None:
            scores[root_id] = -np.inf  # root label is reserved for the root arc
        labels.append(AugmentedLabel.parse(labels_inv[int(scores.argmax())]))
    dep = AugmentedDependencyTree(tuple(tokens),
                                  tuple(heads[i] for i in range(n)),
                                  tuple(labels))
    return repair_labels(dep)


def greedy_parse(model: Model, tokens: list[Token]) -> AugmentedDependencyTree:
    hs, ss, log_probs = _forward(model, tokens)
    heads = _repair_roots(_greedy_heads(log_probs))
    return _label_arcs(model, tokens, heads, hs, ss)


def beam_parse(model: Model, tokens: list[Token],
               k: int = 10) -> AugmentedDependencyTree:
    if k < 1:
        raise ValueError("beam width must be >= 1")
    hs, ss, log_probs = _forward(model, tokens)
    best = _beam_heads(log_probs, k)
    greedy = _greedy_heads(log_probs)
    # contract: the returned assignment never scores below greedy
    if assignment_log_prob(log_probs, greedy) > assignment_log_prob(log_probs, best):
        best = greedy
    return _label_arcs(model, tokens, _repair_roots(best), hs, ss)


def parse_to_constituents(model: Model, tokens: list[Token],
                          k: int = 10) -> ConstituentTree:
    return decode(beam_parse(model, tokens, k))
