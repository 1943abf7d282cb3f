"""Pure-Python fallback for the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def csr_dense_matmul(indptr, indices, data, dense):
    n_rows = len(indptr) - 1
    out = np.zeros((n_rows, dense.shape[1]), dtype=np.float64)
    for i in range(n_rows):
        row = out[i]
        for p in range(indptr[i], indptr[i + 1]):
            row += data[p] * dense[indices[p]]
    return out


def window_cooccurrence(ids, offsets, window_size, n_terms):
    term_count = np.zeros(n_terms, dtype=np.int64)
    pair_count = np.zeros((n_terms, n_terms), dtype=np.int64)
    n_windows = 0
    ids = ids.tolist()
    offsets = offsets.tolist()
    for doc in range(len(offsets) - 1):
        start, stop = offsets[doc], offsets[doc + 1]
        if stop == start:
            continue
        width = min(window_size, stop - start)
        counts = {}
        for tid in ids[start:start + width]:
            if tid >= 0:
                counts[tid] = counts.get(tid, 0) + 1
        w = start
        while True:
            n_windows += 1
            present = sorted(counts)
            for a, x in enumerate(present):
                term_count[x] += 1
                for y in present[a + 1:]:
                    pair_count[x, y] += 1
            if w + width >= stop:
                break
            old, new = ids[w], ids[w + width]
            if old >= 0:
                counts[old] -= 1
                if counts[old] == 0:
                    del counts[old]
            if new >= 0:
                counts[new] = counts.get(new, 0) + 1
            w += 1
    return n_windows, term_count, pair_count
