"""Time the compiled kernels against the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--rows 5000] [--features 20] [--repeat 3]
"""
import argparse
import time

import numpy as np

from freightmode import _pykernels
from freightmode.learners.tree import presort

try:
    from freightmode import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(mod, rows, features, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, features))
    y = rng.integers(0, 5, rows).astype(np.int64)
    Xt, order = presort(X)
    counts = np.ones(rows, dtype=np.int64)
    g = rng.normal(size=rows)
    h = rng.uniform(0.01, 0.25, rows)
    Z = np.ascontiguousarray(rng.normal(size=(min(rows, 500), features)))
    t = _pykernels.build_classifier_tree(Xt, y, counts, order, 5, 8, 5, 0.0, features, False, seed)
    tree = (t["feature"], t["threshold"], t["left"], t["right"])
    return {
        "classifier tree": lambda: mod.build_classifier_tree(Xt, y, counts, order, 5, -1, 5, 0.0,
                                                             int(np.sqrt(features)), False, seed),
        "extra tree": lambda: mod.build_classifier_tree(Xt, y, counts, order, 5, -1, 5, 0.0,
                                                        int(np.sqrt(features)), True, seed),
        "regressor tree": lambda: mod.build_regressor_tree(Xt, g, h, order, 6, 1, 1.0, 0.0, 0.0),
        "apply": lambda: mod.apply_tree(Z, *tree),
        "tree_shap": lambda: mod.tree_shap(Z, *tree, t["value"], t["cover"]),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=5000)
    ap.add_argument("--features", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _ckernels is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    py_cases = cases(_pykernels, args.rows, args.features, args.seed)
    c_cases = cases(_ckernels, args.rows, args.features, args.seed)
    print(f"{'kernel':<16}{'python s':>12}{'compiled s':>12}{'speedup':>10}  identical")
    for name in py_cases:
        tp, a = best_of(py_cases[name], args.repeat)
        tc, b = best_of(c_cases[name], args.repeat)
        if isinstance(a, dict):
            same = all(np.array_equal(np.asarray(a[k]), np.asarray(b[k])) for k in a)
        else:
            same = np.array_equal(a, b)
        print(f"{name:<16}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x  {same}")


if __name__ == "__main__":
    main()
