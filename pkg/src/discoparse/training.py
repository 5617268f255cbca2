"""Multitask training: summed arc/label cross-entropy, Adam with decay and
global-norm clipping, LAS-based model selection."""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field, fields

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .decoding import greedy_parse
from .encoding import AugmentedDependencyTree, decode
from .errors import DiscoparseError, NumericError
from .evaluation import bracket_f1, las_uas
from .model import Model

log = logging.getLogger(__name__)


@dataclass
class OptimizerState:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.9
    decay_rate: float = 0.75
    decay_every: int = 5000   # steps between learning-rate decays
    clip: float = 5.0
    epsilon: float = 1e-8
    step_count: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def current_lr(self) -> float:
        return self.learning_rate * self.decay_rate ** (self.step_count // self.decay_every)

    def clip_gradients(self, params: dict[str, Tensor]) -> float:
        """Scale all gradients so their global norm is at most clip."""
        total = 0.0
        for p in params.values():
            if p.grad is not None:
                total += float((p.grad * p.grad).sum())
        norm = np.sqrt(total)
        if norm > self.clip > 0:
            scale = self.clip / norm
            for p in params.values():
                if p.grad is not None:
                    p.grad *= scale
        return norm

    def step(self, params: dict[str, Tensor]) -> None:
        lr = self.current_lr()
        self.step_count += 1
        t = self.step_count
        for name, p in params.items():
            g = p.grad
            if g is None:
                continue
            m = self.m.setdefault(name, np.zeros_like(p.data))
            v = self.v.setdefault(name, np.zeros_like(p.data))
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1 ** t)
            v_hat = v / (1 - self.beta2 ** t)
            p.data -= lr * m_hat / (np.sqrt(v_hat) + self.epsilon)


def sentence_losses(model: Model, dep: AugmentedDependencyTree,
                    training: bool = True) -> tuple[Tensor, Tensor]:
    """(L_arc, L_label) for one sentence under teacher forcing: the gold
    prefix drives nothing in the decoder LSTM, but gold heads pick the
    (head, dependent) pairs the labeler is scored on."""
    tokens = list(dep.tokens)
    hs, ss, scores = model.forward(tokens, training)
    arc = None
    lab = None
    for i in range(dep.n):
        a = ad.cross_entropy(scores[i], dep.heads[i])
        arc = a if arc is None else arc + a
        gold_label = model.vocab.label2id[str(dep.labels[i])]
        lscores = model.label_scores(ss[i], hs[dep.heads[i]], training)
        l = ad.cross_entropy(lscores, gold_label)
        lab = l if lab is None else lab + l
    return arc, lab


def arc_loss(model: Model, dep: AugmentedDependencyTree,
             training: bool = True) -> Tensor:
    return sentence_losses(model, dep, training)[0]


def label_loss(model: Model, dep: AugmentedDependencyTree,
               training: bool = True) -> Tensor:
    return sentence_losses(model, dep, training)[1]


def joint_step(model: Model, opt: OptimizerState,
               batch: list[AugmentedDependencyTree]) -> tuple[float, float]:
    """One update on the summed arc+label loss over the batch."""
    model.zero_grad()
    arc_total = lab_total = None
    for dep in batch:
        arc, lab = sentence_losses(model, dep, training=True)
        arc_total = arc if arc_total is None else arc_total + arc
        lab_total = lab if lab_total is None else lab_total + lab
    joint = arc_total + lab_total
    if not np.isfinite(joint.data):
        raise NumericError(f"non-finite loss {joint.data!r} in joint_step")
    ad.backward(joint)
    opt.clip_gradients(model.params)
    opt.step(model.params)
    model.zero_grad()
    return float(arc_total.data), float(lab_total.data)


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    patience: int = 20       # dev evaluations without LAS improvement
    seed: int = 1
    target_las: float | None = None
    target_f1: float | None = None


@dataclass
class TrainReport:
    epochs: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_las: float = -1.0

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2)


def _batches(deps, batch_size, rng):
    order = list(range(len(deps)))
    rng.shuffle(order)
    # bucket by length so batches hold similar-size sentences
    order.sort(key=lambda i: deps[i].n)
    chunks = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    rng.shuffle(chunks)
    return [[deps[i] for i in chunk] for chunk in chunks]


def evaluate_dev(model: Model, dev: list[AugmentedDependencyTree]):
    pred = [greedy_parse(model, list(d.tokens)) for d in dev]
    las, uas = las_uas(dev, pred)
    f1 = bracket_f1([decode(d) for d in dev], [decode(p) for p in pred]).f1
    return las, uas, f1


def train(model: Model, train_deps: list[AugmentedDependencyTree],
          dev_deps: list[AugmentedDependencyTree],
          tc: TrainConfig = TrainConfig(),
          opt: OptimizerState | None = None) -> tuple[dict, TrainReport]:
    """Optimize the joint loss; return (best-LAS parameter arrays, report)."""
    if not train_deps or not dev_deps:
        raise ValueError("training and dev corpora must be non-empty")
    opt = opt or OptimizerState()
    rng = random.Random(tc.seed)
    report = TrainReport()
    best_state = model.state_arrays()
    stale = 0
    for epoch in range(1, tc.epochs + 1):
        arc_sum = lab_sum = 0.0
        for batch in _batches(train_deps, tc.batch_size, rng):
            a, l = joint_step(model, opt, batch)
            arc_sum += a
            lab_sum += l
        las, uas, f1 = evaluate_dev(model, dev_deps)
        entry = {"epoch": epoch, "arc_loss": arc_sum / len(train_deps),
                 "label_loss": lab_sum / len(train_deps),
                 "las": las, "uas": uas, "f1": f1}
        report.epochs.append(entry)
        log.info("epoch %d arc %.4f label %.4f LAS %.2f UAS %.2f F1 %.2f",
                 epoch, entry["arc_loss"], entry["label_loss"], las, uas, f1)
        if las > report.best_las:
            report.best_las = las
            report.best_epoch = epoch
            best_state = model.state_arrays()
            stale = 0
        else:
            stale += 1
        if tc.target_las is not None and las >= tc.target_las and (
                tc.target_f1 is None or f1 >= tc.target_f1):
            break
        if stale >= tc.patience:
            break
    return best_state, report


# ---------------------------------------------------------------------------
# key = value configuration files


def parse_config_file(path) -> dict[str, object]:
    """Parse ``key = value`` lines; '#' starts a comment.  Values are coerced
    against the known ModelConfig / TrainConfig / OptimizerState fields."""
    from .model import ModelConfig
    types: dict[str, type] = {}
    for cls in (ModelConfig, TrainConfig, OptimizerState):
        for f in fields(cls):
            if f.name not in ("m", "v", "step_count"):
                types[f.name] = f.type
    out: dict[str, object] = {}
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DiscoparseError(f"{path}:{ln}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in types:
                raise DiscoparseError(f"{path}:{ln}: unknown config key {key!r}")
            t = str(types[key])
            if "bool" in t:
                out[key] = value.lower() in ("1", "true", "yes")
            elif "int" in t:
                out[key] = int(value)
            elif "float" in t:
                out[key] = float(value)
            else:
                out[key] = value
    return out


def split_config(values: dict[str, object]) -> tuple[dict, dict, dict]:
    """Partition flat config values into ModelConfig / TrainConfig /
    OptimizerState keyword dicts."""
    from .model import ModelConfig
    groups = []
    for cls in (ModelConfig, TrainConfig, OptimizerState):
        names = {f.name for f in fields(cls)}
        groups.append({k: v for k, v in values.items() if k in names})
    return tuple(groups)  # type: ignore[return-value]
