"""Compare the compiled kernels with the numpy fallback.

Runs kfill, smearing, k-NN grouping and SMO training on synthetic inputs
once per available backend and prints the best-of-N wall time of each.

    python benchmarks/bench_kernels.py [--repeats 3]
"""
import argparse
import contextlib
import time

import numpy as np

from hpsep import _backend, kdtree, preprocess, segment, svm
from hpsep.corpus import generate_page, random_page_spec
from hpsep.group import LabeledWord, build_index, regroup_constrained
from hpsep.raster import BinaryImage, BoundingBox
from hpsep.segment import PseudoWord
from hpsep.svm import KernelParams, LabelClass, train_binary


@contextlib.contextmanager
def using(backend):
    saved = [(m, m.kernels) for m in (kdtree, preprocess, segment, svm)]
    for m, _ in saved:
        m.kernels = backend
    try:
        yield
    finally:
        for m, k in saved:
            m.kernels = k


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def make_cases():
    rng = np.random.default_rng(0)
    page, _ = generate_page(random_page_spec(1, skew=0.0))

    words = []
    for i in range(5000):
        x, y = rng.integers(0, 3000, 2)
        pw = PseudoWord(i, 0, BoundingBox(int(x), int(y), int(x) + 20, int(y) + 10), (), 150)
        words.append(LabeledWord(pw, LabelClass(int(rng.integers(1, 4))), 0.8, (float(x), float(y))))

    X = rng.normal(size=(400, 35))
    yb = np.where(X[:, 0] + 0.5 * rng.normal(size=400) > 0, 1.0, -1.0)

    return {
        "kfill (1100x1400 page)": lambda: preprocess.kfill(page, 3),
        "rlsa (1100x1400 page)": lambda: segment.classical_rlsa(page, 30, 20),
        "knn grouping (5000 words)": lambda: regroup_constrained(words, build_index(words), 2, 300.0),
        "smo (400 x 35)": lambda: train_binary(X, yb, KernelParams(gamma=1 / 35)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    backends = _backend.available_backends()
    cases = make_cases()
    results = {}
    for name, mod in sorted(backends.items()):
        with using(mod):
            for case, fn in cases.items():
                results[case, name] = best_of(fn, args.repeats)

    names = sorted(backends)
    print(f"{'kernel':<28}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for case in cases:
        row = f"{case:<28}" + "".join(f"{results[case, n]:>11.3f}s" for n in names)
        if "cython" in backends:
            row += f"{results[case, 'python'] / results[case, 'cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
