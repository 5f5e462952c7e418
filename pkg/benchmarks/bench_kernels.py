"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints best-of-N wall time per kernel and the speedup.
"""
import argparse
import random
import sys
import timeit
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from semforge.kernels import IMPLEMENTATIONS  # noqa: E402
from semforge.parse_core import serialize  # noqa: E402
from treegen import random_tree  # noqa: E402


def workloads():
    rng = random.Random(0)
    texts = [serialize(random_tree(rng)) for _ in range(5_000)]
    frames = np.random.default_rng(0).normal(size=(200_000, 16)).astype(np.float32)
    return texts, frames


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    texts, frames = workloads()
    chars = sum(len(t) for t in texts)
    results = {}
    for name, impl in sorted(IMPLEMENTATIONS.items()):

        def tok():
            for text in texts:
                impl.tokenize(text)

        def acc():
            impl.accumulate(frames, np.zeros(frames.shape[1]), np.zeros(frames.shape[1]))

        results[name] = {
            "tokenize": min(timeit.repeat(tok, number=1, repeat=args.repeat)),
            "accumulate": min(timeit.repeat(acc, number=1, repeat=args.repeat)),
        }

    print(f"tokenize: {len(texts)} parses, {chars} chars; accumulate: {frames.shape[0]} x {frames.shape[1]} frames")
    print(f"{'kernel':<12}{'impl':<10}{'best s':>10}")
    for kernel in ("tokenize", "accumulate"):
        for name, timings in results.items():
            print(f"{kernel:<12}{name:<10}{timings[kernel]:>10.4f}")
        if "cython" in results:
            print(f"{kernel:<12}{'speedup':<10}{results['python'][kernel] / results['cython'][kernel]:>9.1f}x")
    if "cython" not in results:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
