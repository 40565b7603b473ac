#!/usr/bin/env python3
"""Build the bundled generated-data artifacts.

Runs the data pipeline over the micro corpus with fixed seeds and commits
the outputs:
  data/heldout_items.jsonl   200 held-out items (seed 7)
  data/model.json            scorer trained on 1000 items (seed 1)

Regenerating is byte-identical; the test suite relies on that.
"""
from __future__ import annotations

import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from ruleforge.corpus import load_corpus
from ruleforge.scoring import TrainConfig, train_contextual
from ruleforge.selfsup import GenConfig, export_training, gen_dataset, read_training_file, save_items

DATA = ROOT / "data"

HELDOUT_SEED = 7
TRAIN_SEED = 1
TRAIN_ITEMS = 1000
NEG_CAP = 4


def main() -> None:
    corpus = load_corpus(DATA / "micro_corpus.jsonl")

    t0 = time.time()
    heldout = gen_dataset(corpus, 200, HELDOUT_SEED, GenConfig())
    save_items(heldout, DATA / "heldout_items.jsonl", seed=HELDOUT_SEED)
    print(f"held-out: {len(heldout)} items ({time.time()-t0:.0f}s)")

    t0 = time.time()
    items = gen_dataset(corpus, TRAIN_ITEMS, TRAIN_SEED, GenConfig())
    train_path = DATA / "train_examples.jsonl"
    count = export_training(items, train_path, neg_cap=NEG_CAP, seed=TRAIN_SEED)
    print(f"train: {len(items)} items, {count} examples ({time.time()-t0:.0f}s)")

    t0 = time.time()
    examples = read_training_file(train_path)
    model = train_contextual(examples, TrainConfig(seed=TRAIN_SEED))
    model.save(DATA / "model.json")
    print(f"model trained ({time.time()-t0:.0f}s)")
    # the flattened examples are an intermediate; keep the repo lean
    train_path.unlink()


if __name__ == "__main__":
    main()
