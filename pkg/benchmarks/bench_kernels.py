"""Time the compiled and numpy kernel backends on random ILP-shaped data.

    python3 benchmarks/bench_kernels.py --words 10000 --affixes 500
"""
import argparse
import time

import numpy as np

from morphforest import _pykernels
from morphforest.kernels import backends


def random_arrays(n_words, n_affixes, max_cands, seed):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(1, max_cands + 1, size=n_words)
    word_ptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    n = int(word_ptr[-1])
    costs = -np.log(rng.uniform(size=n))
    n_aff = rng.integers(1, 3, size=n)
    n_aff[word_ptr[:-1]] = 0  # STOP uses no affix
    aff_ptr = np.concatenate([[0], np.cumsum(n_aff)]).astype(np.int64)
    aff_idx = rng.integers(0, n_affixes, size=int(aff_ptr[-1])).astype(np.int64)
    return costs, word_ptr, aff_ptr, aff_idx


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--words", type=int, default=10000)
    ap.add_argument("--affixes", type=int, default=500)
    ap.add_argument("--max-cands", type=int, default=12)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    costs, word_ptr, aff_ptr, aff_idx = random_arrays(args.words, args.affixes, args.max_cands,
                                                      args.seed)
    pen = np.full(args.affixes, 1e-3)
    pen[::7] = np.inf
    choice, _ = _pykernels.choose(costs, word_ptr, aff_ptr, aff_idx, pen)
    print(f"{args.words} words, {len(costs)} candidates, {args.affixes} affixes")

    results = {}
    for name, mod in sorted(backends().items()):
        results[name] = {
            "segment_softmax": best_of(lambda: mod.segment_softmax(costs, word_ptr), args.repeat),
            "choose": best_of(lambda: mod.choose(costs, word_ptr, aff_ptr, aff_idx, pen), args.repeat),
            "closure_losses": best_of(
                lambda: mod.closure_losses(costs, word_ptr, aff_ptr, aff_idx, pen, choice), args.repeat),
        }
    names = sorted(results)
    print(f"{'kernel':<16}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for kernel in results[names[0]]:
        row = f"{kernel:<16}" + "".join(f"{results[n][kernel] * 1e3:>10.3f}ms" for n in names)
        if "cython" in results and "python" in results:
            row += f"{results['python'][kernel] / results['cython'][kernel]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
