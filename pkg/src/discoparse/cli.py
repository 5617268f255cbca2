"""Batch command-line front end: convert, train, parse, eval, gen, roundtrip."""

from __future__ import annotations

import argparse
import logging
import random
import sys

from . import autodiff as ad
from . import data as bundled
from .decoding import beam_parse, greedy_parse
from .encoding import (decode, encode, read_dependency_file, repair_labels,
                       write_dependency_file)
from .errors import DiscoparseError, FormatError
from .evaluation import (DEFAULT_PUNCT_POS, DEFAULT_ROOT_SYMBOLS, evaluate,
                         las_uas)
from .model import Model, ModelConfig, Vocabulary, load_pretrained_embeddings
from .trees import (PLACEHOLDER_POS, Token, assign_heads, emit_discbracket,
                    generate_random_tree, load_head_rules, parse_discbracket,
                    read_treebank, strip_unaries, write_treebank)
from .training import (OptimizerState, TrainConfig, parse_config_file,
                       split_config, train)

log = logging.getLogger("discoparse")


def _require_files(*paths) -> None:
    import os
    for p in paths:
        if p is not None and not os.path.exists(p):
            raise DiscoparseError(f"input file not found: {p}")


def _load_rules(path):
    return load_head_rules(path if path else bundled.head_rules_path())


def _to_dependencies(trees, rules):
    """strip unaries, assign heads, encode; returns (deps, unaries_removed)."""
    deps, removed = [], 0
    for t in trees:
        stripped = strip_unaries(t)
        removed += sum(1 for _ in t.internal_nodes()) - \
            sum(1 for _ in stripped.internal_nodes())
        deps.append(encode(assign_heads(stripped, rules)))
    return deps, removed


def cmd_convert(args) -> int:
    _require_files(args.input, args.rules)
    rules = _load_rules(args.rules)
    if args.direction == "c2d":
        trees = read_treebank(args.input)
        deps, removed = _to_dependencies(trees, rules)
        write_dependency_file(args.output, deps)
        print(f"converted {len(deps)} trees, stripped {removed} unary nodes")
    else:
        deps = read_dependency_file(args.input)
        trees = [decode(repair_labels(d)) for d in deps]
        write_treebank(args.output, trees)
        print(f"recovered {len(trees)} constituent trees")
    return 0


def _read_sentences(path):
    """Tokenized text (one sentence per line, tokens form/pos) or treebank."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    sentences = []
    for ln in lines:
        if ln.startswith("("):
            sentences.append(list(parse_discbracket(ln).tokens))
        else:
            toks = []
            for i, item in enumerate(ln.split()):
                if "/" in item:
                    form, _, pos = item.rpartition("/")
                else:
                    form, pos = item, PLACEHOLDER_POS
                toks.append(Token(i, form, pos))
            if not toks:
                raise FormatError(f"empty sentence line: {ln!r}")
            sentences.append(toks)
    return sentences


def cmd_train(args) -> int:
    _require_files(args.train, args.dev, args.config, args.rules, args.embeddings)
    overrides = parse_config_file(args.config) if args.config else {}
    model_kw, train_kw, opt_kw = split_config(overrides)
    if args.no_pos:
        model_kw["use_pos"] = False
    train_kw.setdefault("seed", args.seed)

    rules = _load_rules(args.rules)
    train_trees = read_treebank(args.train)
    dev_trees = read_treebank(args.dev)
    train_deps, _ = _to_dependencies(train_trees, rules)
    dev_deps, _ = _to_dependencies(dev_trees, rules)

    if args.tiny:
        config = ModelConfig.tiny(**model_kw)
    else:
        config = ModelConfig(**model_kw)
    labels = sorted({str(l) for d in train_deps for l in d.labels})
    vocab = Vocabulary.build([list(d.tokens) for d in train_deps], labels)
    pretrained = None
    if args.embeddings:
        pretrained = load_pretrained_embeddings(args.embeddings)
        config.use_pretrained = True
    model = Model(config, vocab, seed=args.seed, pretrained=pretrained)
    tc = TrainConfig(**train_kw)
    opt = OptimizerState(**opt_kw)
    print(f"seed {args.seed}")
    best_state, report = train(model, train_deps, dev_deps, tc, opt)
    model.load_state_arrays(best_state)
    model.save(args.model)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    best = report.epochs[report.best_epoch - 1]
    print(f"best epoch {report.best_epoch}: LAS {best['las']:.2f} "
          f"UAS {best['uas']:.2f} F1 {best['f1']:.2f}")
    return 0


def cmd_parse(args) -> int:
    _require_files(args.input, args.model)
    model = Model.load(args.model)
    sentences = _read_sentences(args.input)
    print(f"seed {args.seed}")
    deps = []
    for toks in sentences:
        if args.beam <= 1:
            deps.append(greedy_parse(model, toks))
        else:
            deps.append(beam_parse(model, toks, args.beam))
    trees = [decode(d) for d in deps]
    if args.output:
        write_treebank(args.output, trees)
    else:
        for t in trees:
            print(emit_discbracket(t))
    if args.deps_output:
        write_dependency_file(args.deps_output, deps)
    return 0


def cmd_eval(args) -> int:
    _require_files(args.gold, args.pred)
    gold = read_treebank(args.gold)
    pred = read_treebank(args.pred)
    punct = frozenset(args.punct.split(",")) if args.punct else DEFAULT_PUNCT_POS
    roots = frozenset(args.root_symbols.split(",")) if args.root_symbols \
        else DEFAULT_ROOT_SYMBOLS
    report = evaluate(gold, pred, punct_pos=punct, root_symbols=roots)
    if args.las:
        rules = _load_rules(args.rules)
        gold_deps, _ = _to_dependencies(gold, rules)
        pred_deps, _ = _to_dependencies(pred, rules)
        report.las, report.uas = las_uas(gold_deps, pred_deps)
    print(report.format_table())
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    return 0


def cmd_gen(args) -> int:
    rng = random.Random(args.seed)
    trees = []
    for _ in range(args.sentences):
        n = rng.randint(max(1, args.size // 2), args.size)
        trees.append(generate_random_tree(n, args.rate, rng.randrange(2 ** 31)))
    write_treebank(args.output, trees)
    print(f"seed {args.seed}")
    print(f"wrote {len(trees)} trees to {args.output}")
    return 0


def cmd_roundtrip(args) -> int:
    _require_files(args.input, args.rules)
    rules = _load_rules(args.rules)
    trees = read_treebank(args.input)
    failures = 0
    for i, t in enumerate(trees):
        headed = assign_heads(strip_unaries(t), rules)
        recovered = decode(encode(headed))
        if emit_discbracket(recovered) != emit_discbracket(headed):
            failures += 1
            print(f"sentence {i}: round-trip mismatch", file=sys.stderr)
    print(f"{len(trees) - failures}/{len(trees)} trees round-trip exactly")
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="discoparse",
        description="Discontinuous constituency parsing via augmented "
                    "non-projective dependencies and a pointer network.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=1)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert between tree formats",
                       parents=[common])
    p.add_argument("direction", choices=["c2d", "d2c"])
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--rules")
    p.set_defaults(fn=cmd_convert)

    p = sub.add_parser("train", help="train a parser", parents=[common])
    p.add_argument("train")
    p.add_argument("dev")
    p.add_argument("--model", required=True)
    p.add_argument("--config")
    p.add_argument("--rules")
    p.add_argument("--embeddings")
    p.add_argument("--no-pos", action="store_true")
    p.add_argument("--tiny", action="store_true",
                   help="start from the desk-scale configuration profile")
    p.add_argument("--report")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("parse", help="parse sentences with a checkpoint",
                       parents=[common])
    p.add_argument("input")
    p.add_argument("--model", required=True)
    p.add_argument("--beam", type=int, default=10)
    p.add_argument("--output")
    p.add_argument("--deps-output")
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("eval", help="score predicted trees against gold",
                       parents=[common])
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("--punct", help="comma-separated punctuation POS tags")
    p.add_argument("--root-symbols", help="comma-separated root labels")
    p.add_argument("--las", action="store_true",
                   help="also report LAS/UAS on the encoded dependencies")
    p.add_argument("--rules")
    p.add_argument("--report")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("gen", help="generate a synthetic treebank",
                       parents=[common])
    p.add_argument("sentences", type=int)
    p.add_argument("size", type=int)
    p.add_argument("rate", type=float)
    p.add_argument("--output", required=True)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("roundtrip", help="verify encode/decode losslessness",
                       parents=[common])
    p.add_argument("input")
    p.add_argument("--rules")
    p.set_defaults(fn=cmd_roundtrip)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except DiscoparseError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
