"""Paths to bundled desk-scale fixtures."""

from importlib import resources


def mini_treebank_path():
    return resources.files("discoparse") / "data" / "mini_treebank.discbracket"


def head_rules_path():
    return resources.files("discoparse") / "data" / "head_rules.txt"
