import pytest

from discoparse import trees
from discoparse.trees import HeadRuleSet


EXAMPLE_LINE = "(VROOT (S (NP 0=Es (NP 2=nichts 3=Interessantes)) 1=kam) 4=.)"


@pytest.fixture
def example_tree():
    return trees.parse_discbracket(EXAMPLE_LINE)


@pytest.fixture
def example_rules():
    # S and VROOT headed by the verb, NPs by the rightmost noun
    return HeadRuleSet(
        {
            "VROOT": (("left", ("S", "VVFIN")),),
            "S": (("left", ("VVFIN",)),),
            "NP": (("right", ("NN", "NP")),),
        },
        default_direction="left",
    )


@pytest.fixture
def example_headed(example_tree, example_rules):
    # attach POS tags the rules can see
    toks = tuple(
        trees.Token(t.index, t.form, pos)
        for t, pos in zip(example_tree.tokens, ("PPER", "VVFIN", "PIS", "NN", "$."))
    )
    tree = trees.ConstituentTree(toks, example_tree.root)
    return trees.assign_heads(tree, example_rules)
