"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise the pure-Python
fallback is imported. Set ``GHTM_PURE_PYTHON=1`` to force the fallback.
Both backends return identical results.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("GHTM_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"


def csr_dense_matmul(indptr, indices, data, dense, backend=None):
    """Sparse (CSR) times dense product, skipping structural zeros."""
    impl = _kernels_py if backend == "python" else _impl
    return impl.csr_dense_matmul(
        np.ascontiguousarray(indptr, dtype=np.int64),
        np.ascontiguousarray(indices, dtype=np.int64),
        np.ascontiguousarray(data, dtype=np.float64),
        np.ascontiguousarray(dense, dtype=np.float64),
    )


def window_cooccurrence(ids, offsets, window_size, n_terms, backend=None):
    """Boolean sliding-window counts over concatenated documents.

    ``ids`` holds target-term indices (``-1`` for any other token) for all
    documents back to back; ``offsets`` has ``n_docs + 1`` entries. Returns
    ``(n_windows, term_count, pair_count)`` with ``pair_count`` symmetric and
    its diagonal equal to ``term_count``.
    """
    impl = _kernels_py if backend == "python" else _impl
    n_windows, term_count, pair_count = impl.window_cooccurrence(
        np.ascontiguousarray(ids, dtype=np.int64),
        np.ascontiguousarray(offsets, dtype=np.int64),
        int(window_size),
        int(n_terms),
    )
    pair_count = pair_count + pair_count.T
    pair_count[np.diag_indices(n_terms)] = term_count
    return int(n_windows), term_count, pair_count
