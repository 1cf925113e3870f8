"""
Plug-in Table Inspection CLI

Loads a trained plug-in table artifact and reports what it learned: key
counts and vote margins per bit, and how the `local-table` decoder does on
freshly sampled blocks.

Usage:
    python test_models.py [path/to/plugin_table_m16.bin] [--blocks 200] [--seed 0x1]
"""

import argparse
import os
import sys

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))

import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from shared.decoders import LocalTableDecoder, PlugInTable  # noqa: E402
from shared.ensemble import EnsembleParams, sample_blocks  # noqa: E402
from shared.exceptions import CodecError  # noqa: E402
from shared.hashing import Rng  # noqa: E402
from shared.sils import SilsSpec  # noqa: E402

MODELS_DIR = "../models"


class TableInspector:
    """Handles loading and inspecting of plug-in tables."""

    def __init__(self, path):
        self.path = path
        self.table = None

    def load_table(self):
        """Load and validate the binary artifact."""
        print(f"Loading plug-in table from {self.path}...")
        if not os.path.exists(self.path):
            raise FileNotFoundError(f"Table artifact '{self.path}' not found. Run train.py first.")
        with open(self.path, "rb") as f:
            self.table = PlugInTable.from_bytes(f.read())
        print(f"Table loaded: m={self.table.m}, {self.table.size()} keys, digest {self.table.digest()}")

    def bit_summary(self):
        """One row per bit: keys, training votes, and how decided the majorities are."""
        rows = []
        for i in range(self.table.m):
            votes = [self.table.votes(i, key) for key in self.table.keys(i)]
            zeros = sum(z for z, _ in votes)
            ones = sum(o for _, o in votes)
            margins = [abs(o - z) / (o + z) for z, o in votes if o + z]
            rows.append(
                {
                    "bit": i,
                    "keys": len(votes),
                    "votes": zeros + ones,
                    "share_ones": ones / (zeros + ones) if zeros + ones else 0.0,
                    "mean_margin": float(np.mean(margins)) if margins else 0.0,
                    "ties": sum(1 for z, o in votes if z == o),
                }
            )
        return pd.DataFrame(rows)

    def evaluate(self, n_blocks, seed):
        """Success of the local-table decoder on fresh blocks at the table's m."""
        params = EnsembleParams(m=self.table.m)
        blocks = sample_blocks(params, n_blocks, Rng(seed), "inspect")
        decoder = LocalTableDecoder(self.table, SilsSpec())
        preds = decoder.predict([b.instance.public() for b in blocks])
        truths = [b.witness.x for b in blocks]
        bit_hits = np.array([(~(p ^ x).to_numpy().astype(bool)) for p, x in zip(preds, truths)])
        return {
            "decoder": decoder.identifier,
            "blocks": n_blocks,
            "bit_accuracy": float(bit_hits.mean()),
            "block_accuracy": float(bit_hits.all(axis=1).mean()),
        }


def main(argv=None):
    """Print the table summary and a fresh-block evaluation."""
    parser = argparse.ArgumentParser(description="Inspect a plug-in table artifact")
    parser.add_argument("path", nargs="?", default=os.path.join(MODELS_DIR, "plugin_table_m16.bin"))
    parser.add_argument("--blocks", type=int, default=200, help="Fresh blocks to evaluate on")
    parser.add_argument("--seed", type=lambda s: int(s, 0), default=1, help="Sampling seed")
    args = parser.parse_args(argv)

    print("USAT LAB - PLUG-IN TABLE INSPECTION")
    print("=" * 80)

    try:
        inspector = TableInspector(args.path)
        inspector.load_table()

        print("\n" + "-" * 60)
        print("PER-BIT SUMMARY")
        print("-" * 60)
        print(inspector.bit_summary().to_string(index=False, float_format=lambda v: f"{v:.3f}"))

        print("\n" + "-" * 60)
        print("FRESH-BLOCK EVALUATION")
        print("-" * 60)
        for key, value in inspector.evaluate(args.blocks, args.seed).items():
            print(f"{key}: {value:.3f}" if isinstance(value, float) else f"{key}: {value}")

    except (FileNotFoundError, CodecError) as e:
        print(f"Error: {str(e)}")
        print("Make sure you have run 'python train.py' first to train a table.")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
