#!/usr/bin/env python3
"""
Write a bundled synthetic classification dataset in LIBSVM format.

--kind gaussian (default) creates data/synthetic_1000.svm: 1000 samples,
20 Gaussian features, labels from a planted linear model with 10% of them
flipped. --kind categorical creates data/synthetic_categorical.svm: 8124
samples of 22 one-hot encoded nominal attributes (117 binary columns), the
stand-in for the mushroom file when that is not available.

Run: python scripts/make_synthetic_dataset.py [--kind K] [--samples N] [--dim D] [--seed S] [--out PATH]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from dotenv import load_dotenv
load_dotenv()

from src.services.datasets import make_synthetic_categorical, make_synthetic_classification, save_libsvm

DEFAULTS = {
    "gaussian": (1000, Path("data/synthetic_1000.svm")),
    "categorical": (8124, Path("data/synthetic_categorical.svm")),
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("--kind", choices=sorted(DEFAULTS), default="gaussian")
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--dim", type=int, default=20, help="Gaussian features only")
    parser.add_argument("--seed", type=int, default=20240501)
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args()

    samples, out = DEFAULTS[args.kind]
    samples = args.samples or samples
    out = args.out or out

    print("=" * 60)
    print(f" Generating {args.kind} synthetic dataset")
    print("=" * 60)

    if args.kind == "categorical":
        dataset = make_synthetic_categorical(samples, seed=args.seed)
    else:
        dataset = make_synthetic_classification(samples, args.dim, seed=args.seed)
    save_libsvm(dataset, out)
    positives = int((dataset.labels > 0).sum())

    print(f"\n✅ {dataset.num_samples} samples, dim {dataset.dim} -> {out}")
    print(f"   {positives} positive / {dataset.num_samples - positives} negative labels")
    return 0


if __name__ == "__main__":
    sys.exit(main())
