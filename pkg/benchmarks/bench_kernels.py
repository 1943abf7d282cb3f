"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is run on the same inputs with both backends; outputs are
checked for agreement before timings are reported.
"""

import argparse
import timeit

import numpy as np
import scipy.sparse as sp

from ghtm import kernels


def cooccurrence_inputs(n_docs=300, mean_len=150, n_terms=100, seed=0):
    rng = np.random.default_rng(seed)
    lengths = rng.poisson(mean_len, size=n_docs)
    # about a third of the tokens are target terms, the rest are ignored (-1)
    ids = rng.integers(-2 * n_terms, n_terms, size=int(lengths.sum()))
    ids[ids < 0] = -1
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    return ids.astype(np.int64), offsets.astype(np.int64), n_terms


def matmul_inputs(n_docs=2000, n_terms=5000, dim=100, density=0.01, seed=0):
    m = sp.random(n_docs, n_terms, density=density, format="csr", random_state=seed)
    dense = np.random.default_rng(seed).normal(size=(n_terms, dim))
    return m, dense


def bench(label, fn, repeat):
    best = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"  {label:10s} {best * 1e3:10.2f} ms")
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = ["python"] + (["compiled"] if kernels.BACKEND == "compiled" else [])
    if len(backends) == 1:
        print("compiled extension not available; timing the Python fallback only")

    ids, offsets, n_terms = cooccurrence_inputs()
    for window in (10, 110):
        print(f"window_cooccurrence: {ids.size} tokens, window {window}, {n_terms} targets")
        times, results = {}, {}
        for b in backends:
            name = None if b == "compiled" else b
            results[b] = kernels.window_cooccurrence(ids, offsets, window, n_terms, backend=name)
            times[b] = bench(b, lambda: kernels.window_cooccurrence(ids, offsets, window, n_terms, backend=name),
                             args.repeat)
        if "compiled" in results:
            assert results["python"][0] == results["compiled"][0]
            assert np.array_equal(results["python"][2], results["compiled"][2])
            print(f"  speedup    {times['python'] / times['compiled']:10.1f}x")

    m, dense = matmul_inputs()
    print(f"csr_dense_matmul: {m.shape[0]}x{m.shape[1]} ({m.nnz} nnz) @ {dense.shape[0]}x{dense.shape[1]}")
    times, results = {}, {}
    for b in backends:
        name = None if b == "compiled" else b
        results[b] = kernels.csr_dense_matmul(m.indptr, m.indices, m.data, dense, backend=name)
        times[b] = bench(b, lambda: kernels.csr_dense_matmul(m.indptr, m.indices, m.data, dense, backend=name),
                         args.repeat)
    bench("scipy", lambda: m @ dense, args.repeat)
    if "compiled" in results:
        assert np.allclose(results["python"], results["compiled"], rtol=0, atol=1e-10)
        print(f"  speedup    {times['python'] / times['compiled']:10.1f}x")


if __name__ == "__main__":
    main()
