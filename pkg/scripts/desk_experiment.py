"""Desk-scale learning experiment.

Generates train/test sets for S1-F3-NS and S2-F2-NS at 256x256, trains the
lite network (batch 16, patch 64, lr 1e-3) and compares it with the boxcar
filter and windowed amplitude coherence on the test sets.

    python scripts/desk_experiment.py data   --root /tmp/desk
    python scripts/desk_experiment.py train  --root /tmp/desk --iters 2000
    python scripts/desk_experiment.py eval   --root /tmp/desk

``train`` saves ``artifacts/desk/model.ckpt`` (plus an Adam state file and a
JSON-lines log) every logging window and resumes from them when rerun.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from insarlite.desk import (
    DESK_CHECKPOINT,
    DESK_HYPER,
    desk_datasets,
    desk_report,
    train_desk_model,
)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("stage", choices=["data", "train", "eval"])
    ap.add_argument("--root", default="/tmp/insarlite-desk", help="dataset directory")
    ap.add_argument("--iters", type=int, default=DESK_HYPER["iters"])
    ap.add_argument("--checkpoint", default=str(DESK_CHECKPOINT))
    args = ap.parse_args(argv)

    train_manifest, test_manifests = desk_datasets(args.root)
    if args.stage == "data":
        print(train_manifest, *test_manifests.values(), sep="\n", file=sys.stderr)
    elif args.stage == "train":
        train_desk_model(train_manifest, Path(args.checkpoint), args.iters, log_stream=sys.stderr)
    else:
        report = desk_report(Path(args.checkpoint), test_manifests)
        json.dump(report, sys.stdout, indent=2)
        print()


if __name__ == "__main__":
    main()
