"""Evaluation tests: bracket extraction, F1 arithmetic, attachment scores."""

import json
import math

import pytest

from discoparse.encoding import AugmentedDependencyTree, AugmentedLabel
from discoparse.errors import AlignmentError
from discoparse.evaluation import (DEFAULT_PUNCT_POS, bracket_f1, disc_f1,
                                   evaluate, las_uas, punctuation_indices,
                                   tree_brackets)
from discoparse.trees import Token, parse_discbracket

EXAMPLE_FLAT = "(VROOT (S (NP 0=Es 2=nichts 3=Interessantes) 1=kam) 4=.)"


def dep_tree(forms, heads, labels):
    toks = tuple(Token(i, f, "NN") for i, f in enumerate(forms))
    labs = tuple(AugmentedLabel.parse(l) for l in labels)
    return AugmentedDependencyTree(toks, tuple(heads), labs)


# -- punctuation and bracket extraction --------------------------------------


def test_punct_by_pos_tag():
    toks = tuple(Token(i, f, p) for i, (f, p) in enumerate(
        [("Es", "PPER"), (",", "$,"), (".", "$.")]))
    tree = parse_discbracket("(VROOT 0=x 1=y 2=z)")
    tree = type(tree)(toks, tree.root)
    assert punctuation_indices(tree, DEFAULT_PUNCT_POS) == {1, 2}


def test_punct_by_form_when_pos_missing(example_tree):
    # the example tokens carry no POS, so "." is recognized by its form
    assert punctuation_indices(example_tree, DEFAULT_PUNCT_POS) == {4}


def test_example_brackets(example_tree):
    """Root symbol and punctuation dropped, yields as sets."""
    brackets = tree_brackets(example_tree)
    assert brackets == {
        ("S", frozenset({0, 1, 2, 3})): 1,
        ("NP", frozenset({0, 2, 3})): 1,
        ("NP", frozenset({2, 3})): 1,
    }


def test_disc_only_brackets(example_tree):
    brackets = tree_brackets(example_tree, disc_only=True)
    # only the outer NP has a gap; the inner NP {2,3} and S are contiguous
    assert brackets == {("NP", frozenset({0, 2, 3})): 1}


# -- F1 arithmetic -----------------------------------------------------------


def test_identity_scores_100(example_tree):
    r = bracket_f1([example_tree], [example_tree])
    assert (r.precision, r.recall, r.f1) == (100.0, 100.0, 100.0)
    assert (r.disc_precision, r.disc_recall, r.disc_f1) == (100.0, 100.0, 100.0)
    assert r.fp == r.fn == 0


def test_missing_inner_np(example_tree):
    """Flattened prediction misses the inner NP: tp=2, fp=0, fn=1, so
    P=100, R=66.67, F1=80."""
    pred = parse_discbracket(EXAMPLE_FLAT)
    r = bracket_f1([example_tree], [pred])
    assert r.precision == 100.0
    assert math.isclose(r.recall, 200.0 / 3, abs_tol=1e-9)
    assert math.isclose(r.f1, 80.0, abs_tol=1e-9)


def test_disc_f1_arithmetic():
    """2 gold disc brackets, 3 predicted, 1 common:
    P = 1/3, R = 1/2, F1 = 40."""
    gold = parse_discbracket("(VROOT (A 0=a 2=c) (B 3=d 5=f) 1=b 4=e)")
    pred = parse_discbracket("(VROOT (A 0=a 2=c) (C (D 3=d 5=f) 1=b) 4=e)")
    p, r, f = disc_f1([gold], [pred])
    assert math.isclose(p, 100.0 / 3, abs_tol=1e-9)
    assert math.isclose(r, 50.0, abs_tol=1e-9)
    assert math.isclose(f, 40.0, abs_tol=1e-9)


def test_micro_average_pools_counts(example_tree):
    pred = parse_discbracket(EXAMPLE_FLAT)
    r = bracket_f1([example_tree, example_tree], [example_tree, pred])
    assert (r.tp, r.fp, r.fn) == (5, 0, 1)
    assert math.isclose(r.recall, 500.0 / 6, abs_tol=1e-9)


def test_duplicate_brackets_use_multiset_matching():
    # (A (A ...)) around the same yield after punct filtering would double;
    # here two distinct A brackets in gold, only one in pred
    gold = parse_discbracket("(VROOT (A 0=a (A 1=b 2=c)) 3=d)")
    pred = parse_discbracket("(VROOT (A 0=a 1=b 2=c) 3=d)")
    r = bracket_f1([gold], [pred])
    assert (r.tp, r.fp, r.fn) == (1, 0, 1)


def test_disc_counts_are_subset_of_total(example_tree):
    pred = parse_discbracket(EXAMPLE_FLAT)
    r = bracket_f1([example_tree], [pred])
    assert r.disc_tp <= r.tp
    assert r.disc_fp <= r.fp
    assert r.disc_fn <= r.fn


def test_empty_overlap_scores_zero():
    gold = parse_discbracket("(VROOT (A 0=a 1=b) 2=c)")
    pred = parse_discbracket("(VROOT (B 1=b 2=c) 0=a)")
    r = bracket_f1([gold], [pred])
    assert r.f1 == 0.0 and r.precision == 0.0 and r.recall == 0.0


def test_custom_root_symbols():
    gold = parse_discbracket("(TOP (A 0=a 1=b) 2=c)")
    brackets = tree_brackets(gold, root_symbols=frozenset({"TOP"}))
    assert set(brackets) == {("A", frozenset({0, 1}))}
    brackets = tree_brackets(gold, root_symbols=frozenset())
    assert ("TOP", frozenset({0, 1, 2})) in brackets


# -- attachment scores -------------------------------------------------------

GOLD_DEP = dep_tree(["Es", "kam", "nichts", "Interessantes", "."],
                    [4, 0, 4, 2, 2],
                    ["NP#2", "root", "NP#1", "S#1", "VROOT#2"])


def test_las_uas_identity():
    assert las_uas([GOLD_DEP], [GOLD_DEP]) == (100.0, 100.0)


def test_uas_80_on_one_wrong_head():
    """nichts re-attached to kam: 4 of 5 heads correct."""
    pred = dep_tree(["Es", "kam", "nichts", "Interessantes", "."],
                    [4, 0, 2, 2, 2],
                    ["NP#2", "root", "NP#1", "S#1", "VROOT#2"])
    las, uas = las_uas([GOLD_DEP], [pred])
    assert uas == 80.0
    assert las == 80.0  # label on the wrong arc cannot count


def test_las_strictly_below_uas_on_label_error():
    pred = dep_tree(["Es", "kam", "nichts", "Interessantes", "."],
                    [4, 0, 4, 2, 2],
                    ["NP#1", "root", "NP#1", "S#1", "VROOT#2"])
    las, uas = las_uas([GOLD_DEP], [pred])
    assert uas == 100.0
    assert las == 80.0  # order mismatch NP#1 vs NP#2 counts as a label error


def test_attachment_scores_include_punctuation():
    pred = dep_tree(["Es", "kam", "nichts", "Interessantes", "."],
                    [4, 0, 4, 2, 4],
                    ["NP#2", "root", "NP#1", "S#1", "VROOT#2"])
    _, uas = las_uas([GOLD_DEP], [pred])
    assert uas == 80.0  # the '.' arc is scored even though F1 ignores it


# -- report plumbing and alignment -------------------------------------------


def test_alignment_error_on_length_mismatch(example_tree):
    with pytest.raises(AlignmentError):
        bracket_f1([example_tree, example_tree], [example_tree])


def test_alignment_error_on_token_mismatch(example_tree):
    other = parse_discbracket("(VROOT (S (NP 0=Er (NP 2=nichts "
                              "3=Interessantes)) 1=kam) 4=.)")
    with pytest.raises(AlignmentError):
        bracket_f1([example_tree], [other])


def test_evaluate_combines_trees_and_deps(example_tree):
    r = evaluate([example_tree], [example_tree], [GOLD_DEP], [GOLD_DEP])
    assert r.f1 == 100.0 and r.las == 100.0 and r.uas == 100.0


def test_report_json_round_trips(example_tree):
    r = evaluate([example_tree], [example_tree])
    data = json.loads(r.to_json())
    assert data["f1"] == 100.0
    assert data["sentences"] == 1
    assert data["las"] is None


def test_format_table_hides_unset_las(example_tree):
    r = bracket_f1([example_tree], [example_tree])
    table = r.format_table()
    assert "LAS" not in table
    r.las, r.uas = 50.0, 60.0
    assert "LAS" in r.format_table()
