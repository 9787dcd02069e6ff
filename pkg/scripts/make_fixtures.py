#!/usr/bin/env python3
"""Write a small demo workspace (embeddings, config, sentences, tasks, pairs)
so the CLI can be exercised end to end without any external downloads."""
import argparse
from pathlib import Path

import numpy as np

from pmean.embeddings import save_text_embeddings
from pmean.evaluation import save_task
from pmean.pooling import ConfigEntry, format_config
from pmean.synthetic import (
    make_blobs_task,
    make_complementarity_task,
    merge_spaces,
    swap_dictionary,
    twin_space,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures", help="output directory")
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    root = Path(args.out)
    root.mkdir(parents=True, exist_ok=True)

    space_a, space_b, mixed = make_complementarity_task(seed=args.seed)
    save_text_embeddings(space_a, root / "space_a.txt")
    save_text_embeddings(space_b, root / "space_b.txt")
    save_task(mixed, root / "mixed.tsv")

    (root / "ab.cfg").write_text(format_config([
        ConfigEntry("A", [1.0, float("inf")], path="space_a.txt"),
        ConfigEntry("B", [1.0, float("inf")], path="space_b.txt"),
    ]))

    blob_space, blob_task = make_blobs_task(seed=args.seed)
    bilingual = merge_spaces(blob_space, twin_space(blob_space, "_f"), "bi")
    save_text_embeddings(bilingual, root / "bilingual.txt")
    save_task(blob_task, root / "blobs_en.tsv")
    save_task(swap_dictionary(blob_task, "_f", name="blobs_xx"), root / "blobs_xx.tsv")
    (root / "bi.cfg").write_text(format_config([
        ConfigEntry("bi", [1.0, float("inf")], path="bilingual.txt"),
    ]))

    rng = np.random.default_rng(args.seed)
    with open(root / "pairs.tsv", "w", encoding="utf-8") as fh:
        for label, text in blob_task.items[:100]:
            swapped = " ".join(f"{tok}_f" for tok in text.split())
            fh.write(f"{text}\t{swapped}\n")
    with open(root / "sentences.txt", "w", encoding="utf-8") as fh:
        for label, text in mixed.items[:50]:
            fh.write(text + "\n")

    print(f"fixtures written to {root}/")
    print("try, for example:")
    print(f"  pmean embed --config {root}/ab.cfg --input {root}/sentences.txt "
          f"--output /tmp/emb.tsv --znorm")
    print(f"  pmean eval --config {root}/ab.cfg --task {root}/mixed.tsv "
          f"--out /tmp/report --runs 10")
    print(f"  pmean sweep --config {root}/ab.cfg --p-set 1,inf,-inf "
          f"--p-set 1,inf,-inf,-1 --task {root}/mixed.tsv --out /tmp/sweep --runs 10")
    print(f"  pmean eval-transfer --source-config {root}/bi.cfg "
          f"--target-config {root}/bi.cfg --train-task {root}/blobs_en.tsv "
          f"--test-task {root}/blobs_xx.tsv --out /tmp/xfer --runs 10")


if __name__ == "__main__":
    main()
