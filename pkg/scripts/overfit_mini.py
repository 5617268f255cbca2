#!/usr/bin/env python3
"""Overfit the desk-scale model on the bundled mini-treebank.

Trains the tiny configuration with dev = train and reports per-epoch losses
and scores; a quick end-to-end sanity run for the whole pipeline.

    python3 scripts/overfit_mini.py --epochs 200 --target 98 --model out.ckpt
"""

import argparse
import logging
import time

from discoparse import data as bundled
from discoparse.encoding import encode
from discoparse.model import Model, ModelConfig, Vocabulary
from discoparse.training import OptimizerState, TrainConfig, train
from discoparse.trees import (assign_heads, load_head_rules, read_treebank,
                              strip_unaries)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epochs", type=int, default=500)
    ap.add_argument("--batch-size", type=int, default=8)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--target", type=float, default=98.0,
                    help="stop once LAS and F1 both reach this value")
    ap.add_argument("--model", help="save the best checkpoint here")
    args = ap.parse_args()

    logging.basicConfig(level=logging.INFO, format="%(message)s")
    rules = load_head_rules(bundled.head_rules_path())
    trees = read_treebank(bundled.mini_treebank_path())
    deps = [encode(assign_heads(strip_unaries(t), rules)) for t in trees]
    labels = sorted({str(l) for d in deps for l in d.labels})
    vocab = Vocabulary.build([list(d.tokens) for d in deps], labels)
    model = Model(ModelConfig.tiny(), vocab, seed=args.seed)

    tc = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                     patience=args.epochs, seed=args.seed,
                     target_las=args.target, target_f1=args.target)
    start = time.monotonic()
    best_state, report = train(model, deps, deps, tc, OptimizerState())
    elapsed = time.monotonic() - start

    best = report.epochs[report.best_epoch - 1]
    print(f"{len(report.epochs)} epochs in {elapsed:.1f}s; best epoch "
          f"{report.best_epoch}: LAS {best['las']:.2f} UAS {best['uas']:.2f} "
          f"F1 {best['f1']:.2f}")
    if args.model:
        model.load_state_arrays(best_state)
        model.save(args.model)
        print(f"saved checkpoint to {args.model}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
