"""
Plug-in Table Training Pipeline

Fits the per-bit majority tables used by the `local-table` decoder of the lab.
Blocks are sampled from the masked ensemble, grouped into tuples, and labeled
with the majority votes of the symmetrized local-parity decoder; each table
cell counts those surrogate labels per local input u = (i, z, a_i, b).

Key Features:
- Seeded sampling, so a (seed, m) pair always produces the same table
- Held-out tuples for per-bit and block-exact accuracy
- Binary table artifact plus a JSON dump and evaluation results

Usage:
    python train.py [--m 16] [--seed 0x5EED] [--tuples 64] [--out ../models]
"""

import argparse
import json
import os
import sys

# Add parent directory to path before imports
sys.path.append(os.path.join(os.path.dirname(__file__), ".."))

import numpy as np  # noqa: E402
from sklearn.metrics import accuracy_score  # noqa: E402
from sklearn.model_selection import train_test_split  # noqa: E402

from shared.decoders import LocalParityDecoder, LocalTableDecoder, PlugInTable, train_plugin_table  # noqa: E402
from shared.ensemble import EnsembleParams, sample_blocks  # noqa: E402
from shared.hashing import Rng, default_kappa, default_symmetrization_draws  # noqa: E402
from shared.sils import SilsSpec  # noqa: E402
from shared.symmetry import BackMapMode, local_inputs  # noqa: E402

# Configuration constants
RANDOM_SEED = 0x5EED
DEFAULT_M = 16
DEFAULT_TUPLES = 64
TEST_SIZE = 0.2
MODELS_DIR = "../models"


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description="Fit plug-in tables for the local-table decoder")
    parser.add_argument("--m", type=int, default=DEFAULT_M, help="Variables per block")
    parser.add_argument("--seed", type=lambda s: int(s, 0), default=RANDOM_SEED, help="Master seed")
    parser.add_argument("--tuples", type=int, default=DEFAULT_TUPLES, help="Tuples to sample")
    parser.add_argument("--backmap", choices=[m.value for m in BackMapMode], default=BackMapMode.COORDINATE.value)
    parser.add_argument("--out", default=MODELS_DIR, help="Artifact directory")
    return parser.parse_args(argv)


def load_data(params, n_tuples, rng):
    """Sample n_tuples tuples of round(c4 m) blocks each."""
    t = params.default_t
    print(f"Sampling {n_tuples} tuples of {t} blocks at m={params.m}...")
    blocks = sample_blocks(params, n_tuples * t, rng.substream("blocks"), "train")
    tuples = [blocks[j * t : (j + 1) * t] for j in range(n_tuples)]
    mean_trials = float(np.mean([b.trials for b in blocks]))
    print(f"Blocks sampled. Mean rejection trials: {mean_trials:.2f}")
    return tuples


def train_table(train_tuples, params, seed, spec, mode):
    """Fit one table over all training tuples, labeling each tuple with its own flips."""
    t = params.default_t
    s = default_symmetrization_draws(params.m, t)
    kappa = default_kappa(params.m, t)
    print(f"Training plug-in table (s={s}, kappa={kappa})...")
    instances = [b.instance.public() for tup in train_tuples for b in tup]
    table = train_plugin_table(LocalParityDecoder(), instances, s, kappa, seed, spec, mode, t)
    print(f"Table trained: {table.size()} keys over {params.m} bits")
    return table, {"s": s, "kappa": kappa, "t": t}


def evaluate_table(table, test_tuples, spec):
    """Per-bit and block-exact accuracy of the table and of its base decoder on held-out tuples."""
    print("\nEvaluating on held-out tuples...")
    instances = [b.instance.public() for tup in test_tuples for b in tup]
    truths = np.array([b.witness.x.to_numpy() for tup in test_tuples for b in tup])

    results = {}
    for name, decoder in (("local-table", LocalTableDecoder(table, spec)), ("local-parity", LocalParityDecoder())):
        preds = np.array([p.to_numpy() for p in decoder.predict(instances)])
        bit_accuracy = accuracy_score(truths.ravel(), preds.ravel())
        block_accuracy = float((preds == truths).all(axis=1).mean())
        results[name] = {"bit_accuracy": bit_accuracy, "block_accuracy": block_accuracy}
        print(f"{name}: bit accuracy {bit_accuracy:.3f}, block accuracy {block_accuracy:.3f}")

    unseen = 0
    total = 0
    for inst in instances:
        for i, u in enumerate(local_inputs(inst, spec)):
            total += 1
            unseen += int(table.votes(i, u.encode()) == (0, 0))
    results["unseen_key_rate"] = unseen / total if total else 0.0
    print(f"Unseen local inputs: {results['unseen_key_rate']:.3f}")
    return results


def save_table(table, results, metadata, out_dir):
    """Save the binary artifact, its JSON dump and the evaluation results."""
    print(f"\nSaving table to {out_dir}/...")
    os.makedirs(out_dir, exist_ok=True)
    m = metadata["m"]

    artifact = os.path.join(out_dir, f"plugin_table_m{m}.bin")
    with open(artifact, "wb") as f:
        f.write(table.to_bytes())

    with open(os.path.join(out_dir, f"plugin_table_m{m}.json"), "w", encoding="utf-8") as f:
        json.dump(table.to_json(), f, indent=2, sort_keys=True)

    evaluation = {"table_digest": table.digest(), **metadata, "results": results}
    with open(os.path.join(out_dir, f"evaluation_results_m{m}.json"), "w", encoding="utf-8") as f:
        json.dump(evaluation, f, indent=2, sort_keys=True)

    print("Table artifacts saved successfully!")
    return artifact


def main(argv=None):
    """Main training pipeline."""
    args = parse_args(argv)
    print("USAT LAB - PLUG-IN TABLE TRAINING PIPELINE")
    print("=" * 80)

    try:
        params = EnsembleParams(m=args.m)
        spec = SilsSpec()
        mode = BackMapMode(args.backmap)
        rng = Rng(args.seed)

        tuples = load_data(params, args.tuples, rng)

        print(f"\nSplitting tuples (test_size={TEST_SIZE})...")
        train_idx, test_idx = train_test_split(
            np.arange(len(tuples)), test_size=TEST_SIZE, random_state=args.seed % (1 << 32)
        )
        train_tuples = [tuples[j] for j in sorted(train_idx)]
        test_tuples = [tuples[j] for j in sorted(test_idx)]
        print(f"Training set: {len(train_tuples)} tuples")
        print(f"Test set: {len(test_tuples)} tuples")

        table, wrapper = train_table(train_tuples, params, rng.substream("symmetrize").word(64), spec, mode)
        results = evaluate_table(table, test_tuples, spec)

        metadata = {
            "m": params.m,
            "seed": f"0x{args.seed:016x}",
            "backmap": mode.value,
            "train_tuples": len(train_tuples),
            "test_tuples": len(test_tuples),
            **wrapper,
        }
        artifact = save_table(table, results, metadata, args.out)

        with open(artifact, "rb") as f:
            if PlugInTable.from_bytes(f.read()) != table:
                raise RuntimeError(f"Artifact {artifact} does not reload to the trained table")

        print("\n" + "=" * 80)
        print("TRAINING PIPELINE COMPLETED SUCCESSFULLY!")
        print("=" * 80)
        print(f"Point decoder.table_path at {artifact} and set decoder.name to 'local-table'.")
        print("Use test_models.py to inspect the table.")

    except Exception as e:
        print(f"Error in training pipeline: {str(e)}")
        raise


if __name__ == "__main__":
    main()
