"""Numeric inner loops shared by instance validation and the generators.

Two kernels dominate: the all-pairs shortest-path closure (Floyd-Warshall)
used to repair/complete metrics, and the triangle-inequality scan used by
instance validation. Both carry a numba @njit implementation and a pure-numpy
fallback; set TSPMD_NO_NUMBA=1 to force the fallback. benchmarks/bench_kernels.py
compares the two paths.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("TSPMD_NO_NUMBA", "0") == "1"

if not _DISABLE:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
        njit = None
        _DISABLE = True
else:
    njit = None


def using_numba() -> bool:
    return not _DISABLE


# --- pure numpy paths --------------------------------------------------------

def metric_closure_numpy(mat: np.ndarray) -> np.ndarray:
    """Floyd-Warshall closure, one vectorized relaxation per pivot."""
    out = np.array(mat, dtype=np.float64)
    n = out.shape[0]
    for k in range(n):
        np.minimum(out, out[:, k : k + 1] + out[k : k + 1, :], out=out)
    return out


def worst_triangle_numpy(mat: np.ndarray) -> tuple[float, int, int, int]:
    """Largest slack d[i,j] - (d[i,k] + d[k,j]) over all triples.

    Returns (slack, i, k, j); slack <= 0 means the matrix is metric.
    """
    n = mat.shape[0]
    best = -np.inf
    arg = (0, 0, 0)
    for k in range(n):
        slack = mat - (mat[:, k : k + 1] + mat[k : k + 1, :])
        ij = int(np.argmax(slack))
        i, j = divmod(ij, n)
        if slack[i, j] > best:
            best = float(slack[i, j])
            arg = (i, k, j)
    i, k, j = arg
    return best, i, k, j


# --- numba paths --------------------------------------------------------------

if not _DISABLE:

    @njit(cache=True)
    def _closure_jit(out):  # pragma: no cover - executed via dispatch
        n = out.shape[0]
        for k in range(n):
            for i in range(n):
                dik = out[i, k]
                for j in range(n):
                    alt = dik + out[k, j]
                    if alt < out[i, j]:
                        out[i, j] = alt
        return out

    @njit(cache=True)
    def _worst_triangle_jit(mat):  # pragma: no cover - executed via dispatch
        n = mat.shape[0]
        best = -1e300
        bi = bk = bj = 0
        for k in range(n):
            for i in range(n):
                for j in range(n):
                    slack = mat[i, j] - mat[i, k] - mat[k, j]
                    if slack > best:
                        best = slack
                        bi, bk, bj = i, k, j
        return best, bi, bk, bj


def metric_closure(mat: np.ndarray) -> np.ndarray:
    if _DISABLE:
        return metric_closure_numpy(mat)
    return _closure_jit(np.array(mat, dtype=np.float64))


def worst_triangle(mat: np.ndarray) -> tuple[float, int, int, int]:
    if _DISABLE:
        return worst_triangle_numpy(mat)
    best, i, k, j = _worst_triangle_jit(np.ascontiguousarray(mat, dtype=np.float64))
    return float(best), int(i), int(k), int(j)
