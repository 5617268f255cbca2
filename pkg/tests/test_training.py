"""Training tests: loss oracles, Adam arithmetic, clipping, determinism."""

import math

import numpy as np
import pytest

from discoparse.autodiff import Tensor
from discoparse.encoding import (AugmentedDependencyTree, AugmentedLabel,
                                 ROOT_ARC_LABEL)
from discoparse.model import Model, ModelConfig, Vocabulary
from discoparse.trees import Token
from discoparse.training import (OptimizerState, TrainConfig, arc_loss,
                                 joint_step, label_loss, parse_config_file,
                                 sentence_losses, split_config, train)

LABELS = ["root", "A#1", "B#1", "C#2"]


def dep_tree(forms, heads, labels):
    toks = tuple(Token(i, f, "NN") for i, f in enumerate(forms))
    labs = tuple(AugmentedLabel.parse(l) for l in labels)
    return AugmentedDependencyTree(toks, tuple(heads), labs)


ONE_WORD = dep_tree(["kam"], [0], ["root"])
THREE_WORDS = dep_tree(["a", "b", "c"], [2, 0, 2], ["A#1", "root", "A#1"])


@pytest.fixture()
def model():
    vocab = Vocabulary.build([list(THREE_WORDS.tokens), list(ONE_WORD.tokens)],
                             LABELS)
    return Model(ModelConfig.tiny(), vocab, seed=11)


def zero_out(model, names):
    for name in names:
        model.params[name].data[:] = 0.0


# -- loss oracles ------------------------------------------------------------


def test_uniform_arc_loss_is_log_candidates(model):
    """With the biaffine attention zeroed, every head distribution is uniform
    over n+1 candidates, so the arc loss is exactly n * ln(n+1)."""
    zero_out(model, ["arc/W", "arc/U", "arc/V", "arc/b"])
    assert math.isclose(arc_loss(model, ONE_WORD, training=False).data,
                        math.log(2), rel_tol=1e-12)
    assert math.isclose(arc_loss(model, THREE_WORDS, training=False).data,
                        3 * math.log(4), rel_tol=1e-12)


def test_uniform_label_loss_is_log_inventory(model):
    zero_out(model, ["lab/W", "lab/U", "lab/V", "lab/b"])
    L = len(LABELS)
    assert math.isclose(label_loss(model, THREE_WORDS, training=False).data,
                        3 * math.log(L), rel_tol=1e-12)


def test_losses_are_positive_and_finite(model):
    arc, lab = sentence_losses(model, THREE_WORDS, training=False)
    assert 0.0 < float(arc.data) < 100.0
    assert 0.0 < float(lab.data) < 100.0


def test_joint_is_sum_of_parts(model):
    arc, lab = sentence_losses(model, THREE_WORDS, training=False)
    a = arc_loss(model, THREE_WORDS, training=False)
    l = label_loss(model, THREE_WORDS, training=False)
    assert math.isclose(float(arc.data), float(a.data), rel_tol=1e-12)
    assert math.isclose(float(lab.data), float(l.data), rel_tol=1e-12)


# -- optimizer arithmetic ----------------------------------------------------


def adam_reference(p, g, lr, b1, b2, eps, steps):
    """Straightforward reimplementation of Adam with bias correction."""
    m = np.zeros_like(p)
    v = np.zeros_like(p)
    for t in range(1, steps + 1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        p = p - lr * m_hat / (np.sqrt(v_hat) + eps)
    return p


@pytest.mark.parametrize("steps", [1, 3])
def test_adam_matches_reference(steps):
    start = np.array([1.0, -2.0, 0.5])
    grad = np.array([2.0, 0.25, -1.5])
    t = Tensor(start.copy(), requires_grad=True)
    opt = OptimizerState()
    for _ in range(steps):
        t.grad = grad.copy()
        opt.step({"p": t})
    expected = adam_reference(start, grad, opt.learning_rate, opt.beta1,
                              opt.beta2, opt.epsilon, steps)
    np.testing.assert_allclose(t.data, expected, atol=1e-15)


def test_learning_rate_decay_schedule():
    opt = OptimizerState()
    assert opt.current_lr() == 0.001
    opt.step_count = 4999
    assert opt.current_lr() == 0.001
    opt.step_count = 5000
    assert math.isclose(opt.current_lr(), 0.001 * 0.75)
    opt.step_count = 10000
    assert math.isclose(opt.current_lr(), 0.001 * 0.75 ** 2)


def test_clip_scales_to_norm_and_keeps_direction():
    a = Tensor(np.zeros(2), requires_grad=True)
    b = Tensor(np.zeros(1), requires_grad=True)
    a.grad = np.array([30.0, 40.0])   # norm 50 together with b.grad = 0
    b.grad = np.array([0.0])
    opt = OptimizerState(clip=5.0)
    norm = opt.clip_gradients({"a": a, "b": b})
    assert math.isclose(norm, 50.0)
    np.testing.assert_allclose(a.grad, [3.0, 4.0], atol=1e-12)  # scaled by 0.1
    assert math.isclose(a.grad[1] / a.grad[0], 40.0 / 30.0)


def test_clip_leaves_small_gradients_alone():
    a = Tensor(np.zeros(2), requires_grad=True)
    a.grad = np.array([1.0, 2.0])
    OptimizerState(clip=5.0).clip_gradients({"a": a})
    np.testing.assert_array_equal(a.grad, [1.0, 2.0])


# -- joint step and full training -------------------------------------------


def test_joint_step_reduces_loss(model):
    opt = OptimizerState()
    before = sum(float(x.data)
                 for x in sentence_losses(model, THREE_WORDS, training=False))
    for _ in range(5):
        joint_step(model, opt, [THREE_WORDS])
    after = sum(float(x.data)
                for x in sentence_losses(model, THREE_WORDS, training=False))
    assert after < before


def test_joint_step_returns_batch_sums(model):
    opt = OptimizerState()
    arc1, lab1 = sentence_losses(model, ONE_WORD, training=False)
    arc3, lab3 = sentence_losses(model, THREE_WORDS, training=False)
    a, l = joint_step(model, opt, [ONE_WORD, THREE_WORDS])
    assert math.isclose(a, float(arc1.data) + float(arc3.data), rel_tol=1e-12)
    assert math.isclose(l, float(lab1.data) + float(lab3.data), rel_tol=1e-12)


def test_train_rejects_empty_corpora(model):
    with pytest.raises(ValueError):
        train(model, [], [ONE_WORD])
    with pytest.raises(ValueError):
        train(model, [ONE_WORD], [])


def test_train_is_deterministic():
    def run():
        vocab = Vocabulary.build([list(THREE_WORDS.tokens)], LABELS)
        model = Model(ModelConfig.tiny(), vocab, seed=2)
        tc = TrainConfig(epochs=3, batch_size=2, seed=2)
        _, report = train(model, [THREE_WORDS], [THREE_WORDS], tc)
        return report.epochs

    a, b = run(), run()
    assert a == b


def test_train_reports_best_epoch():
    vocab = Vocabulary.build([list(THREE_WORDS.tokens)], LABELS)
    model = Model(ModelConfig.tiny(), vocab, seed=2)
    tc = TrainConfig(epochs=4, batch_size=1, seed=2)
    best_state, report = train(model, [THREE_WORDS], [THREE_WORDS], tc)
    assert 1 <= report.best_epoch <= len(report.epochs)
    assert report.best_las == max(e["las"] for e in report.epochs)
    assert set(best_state) == set(model.params)


def test_target_stopping():
    vocab = Vocabulary.build([list(THREE_WORDS.tokens)], LABELS)
    model = Model(ModelConfig.tiny(), vocab, seed=2)
    tc = TrainConfig(epochs=200, batch_size=1, seed=2,
                     target_las=100.0, target_f1=100.0)
    _, report = train(model, [THREE_WORDS], [THREE_WORDS], tc)
    assert len(report.epochs) < 200
    assert report.epochs[-1]["las"] == 100.0


# -- configuration files -----------------------------------------------------


def test_parse_config_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text(
        "# comment\n"
        "encoder_size = 64   # inline comment\n"
        "dropout = 0.1\n"
        "use_pos = false\n"
        "epochs = 7\n"
        "learning_rate = 0.01\n")
    values = parse_config_file(path)
    assert values == {"encoder_size": 64, "dropout": 0.1, "use_pos": False,
                      "epochs": 7, "learning_rate": 0.01}
    model_kw, train_kw, opt_kw = split_config(values)
    assert model_kw == {"encoder_size": 64, "dropout": 0.1, "use_pos": False}
    assert train_kw == {"epochs": 7}
    assert opt_kw == {"learning_rate": 0.01}


def test_parse_config_rejects_unknown_key(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("definitely_not_a_key = 1\n")
    with pytest.raises(Exception):
        parse_config_file(path)


def test_parse_config_rejects_bad_line(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("no equals sign here\n")
    with pytest.raises(Exception):
        parse_config_file(path)
