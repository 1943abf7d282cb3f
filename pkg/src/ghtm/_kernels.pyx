# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Signatures mirror ``_kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def csr_dense_matmul(const cnp.int64_t[::1] indptr,
                     const cnp.int64_t[::1] indices,
                     const double[::1] data,
                     const double[:, ::1] dense):
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef Py_ssize_t dim = dense.shape[1]
    out_arr = np.zeros((n_rows, dim), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, p, j, d
    cdef double w
    with nogil:
        for i in range(n_rows):
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                w = data[p]
                for d in range(dim):
                    out[i, d] += w * dense[j, d]
    return out_arr


def window_cooccurrence(const cnp.int64_t[::1] ids,
                        const cnp.int64_t[::1] offsets,
                        Py_ssize_t window_size,
                        Py_ssize_t n_terms):
    cdef Py_ssize_t n_docs = offsets.shape[0] - 1
    term_arr = np.zeros(n_terms, dtype=np.int64)
    pair_arr = np.zeros((n_terms, n_terms), dtype=np.int64)
    cdef cnp.int64_t[::1] term_count = term_arr
    cdef cnp.int64_t[:, ::1] pair_count = pair_arr
    cnt_arr = np.zeros(n_terms, dtype=np.int64)
    pos_arr = np.full(n_terms, -1, dtype=np.int64)
    present_arr = np.zeros(n_terms, dtype=np.int64)
    cdef cnp.int64_t[::1] cnt = cnt_arr
    cdef cnp.int64_t[::1] pos = pos_arr
    cdef cnp.int64_t[::1] present = present_arr
    cdef Py_ssize_t n_present = 0
    cdef cnp.int64_t n_windows = 0
    cdef Py_ssize_t doc, start, stop, length, width, t, a, b, w, last
    cdef cnp.int64_t x, y, tid

    with nogil:
        for doc in range(n_docs):
            start = offsets[doc]
            stop = offsets[doc + 1]
            length = stop - start
            if length == 0:
                continue
            width = window_size if window_size < length else length
            # fill first window
            for t in range(start, start + width):
                tid = ids[t]
                if tid >= 0:
                    if cnt[tid] == 0:
                        pos[tid] = n_present
                        present[n_present] = tid
                        n_present += 1
                    cnt[tid] += 1
            w = start
            while True:
                n_windows += 1
                for a in range(n_present):
                    x = present[a]
                    term_count[x] += 1
                    for b in range(a + 1, n_present):
                        y = present[b]
                        if x < y:
                            pair_count[x, y] += 1
                        else:
                            pair_count[y, x] += 1
                if w + width >= stop:
                    break
                # slide: drop ids[w], add ids[w + width]
                tid = ids[w]
                if tid >= 0:
                    cnt[tid] -= 1
                    if cnt[tid] == 0:
                        n_present -= 1
                        last = present[n_present]
                        present[pos[tid]] = last
                        pos[last] = pos[tid]
                        pos[tid] = -1
                tid = ids[w + width]
                if tid >= 0:
                    if cnt[tid] == 0:
                        pos[tid] = n_present
                        present[n_present] = tid
                        n_present += 1
                    cnt[tid] += 1
                w += 1
            # reset window state
            for a in range(n_present):
                x = present[a]
                cnt[x] = 0
                pos[x] = -1
            n_present = 0
    return n_windows, term_arr, pair_arr
