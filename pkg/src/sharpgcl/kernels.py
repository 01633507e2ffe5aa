"""Hot numeric kernels: CSR matmul and per-edge attention.

Each kernel has a numba ``@njit`` implementation and a pure-numpy fallback.
Selection: numba is used when importable unless ``SHARPGCL_NUMBA=0`` is set
in the environment. ``benchmarks/bench_kernels.py`` times both paths.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np


def _numba_enabled() -> bool:
    if os.environ.get("SHARPGCL_NUMBA", "1") == "0":
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _numba_enabled()


@dataclass
class Csr:
    """Compressed sparse row matrix, square, float64 values."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    shape: tuple[int, int]

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for i in range(self.shape[0]):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            out[i, self.indices[lo:hi]] += self.data[lo:hi]
        return out

    def transpose(self) -> "Csr":
        n_rows, n_cols = self.shape
        rows = np.repeat(np.arange(n_rows, dtype=np.int64), np.diff(self.indptr))
        order = np.lexsort((rows, self.indices))
        new_indices = rows[order]
        new_data = self.data[order]
        counts = np.bincount(self.indices, minlength=n_cols)
        indptr = np.zeros(n_cols + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return Csr(indptr, new_indices, new_data, (n_cols, n_rows))


def csr_from_coo(rows, cols, vals, shape) -> Csr:
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    counts = np.bincount(rows, minlength=shape[0])
    indptr = np.zeros(shape[0] + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return Csr(indptr, cols, vals, tuple(shape))


def adjacency_csr(edges: np.ndarray, num_nodes: int, add_self_loops: bool = False,
                  values: np.ndarray | None = None) -> Csr:
    """Symmetric CSR from canonical (i < j) undirected edges.

    ``values`` gives one weight per undirected pair (mirrored to both
    directions); defaults to 1.0. Self-loops get weight 1.0.
    """
    e = edges.shape[0]
    if values is None:
        values = np.ones(e)
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    vals = np.concatenate([values, values])
    if add_self_loops:
        loop = np.arange(num_nodes, dtype=np.int64)
        rows = np.concatenate([rows, loop])
        cols = np.concatenate([cols, loop])
        vals = np.concatenate([vals, np.ones(num_nodes)])
    return csr_from_coo(rows, cols, vals, (num_nodes, num_nodes))


# ---------------------------------------------------------------------------
# CSR @ dense
# ---------------------------------------------------------------------------

def _csr_matmul_numpy(indptr, indices, data, dense):
    n = indptr.size - 1
    out = np.zeros((n, dense.shape[1]))
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    np.add.at(out, rows, data[:, None] * dense[indices])
    return out


if USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _csr_matmul_numba(indptr, indices, data, dense):  # pragma: no cover - jit
        n = indptr.size - 1
        k = dense.shape[1]
        out = np.zeros((n, k))
        for i in range(n):
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                v = data[p]
                for c in range(k):
                    out[i, c] += v * dense[j, c]
        return out

    @njit(cache=True)
    def _gat_head_forward_numba(indptr, indices, s_src, s_dst, values, slope):  # pragma: no cover - jit
        n = indptr.size - 1
        f = values.shape[1]
        out = np.zeros((n, f))
        alpha = np.zeros(indices.size)
        pos = np.zeros(indices.size, dtype=np.uint8)
        for i in range(n):
            lo, hi = indptr[i], indptr[i + 1]
            if hi == lo:
                continue
            m = -np.inf
            for p in range(lo, hi):
                e = s_src[i] + s_dst[indices[p]]
                if e > 0.0:
                    pos[p] = 1
                    l = e
                else:
                    l = slope * e
                alpha[p] = l
                if l > m:
                    m = l
            z = 0.0
            for p in range(lo, hi):
                w = np.exp(alpha[p] - m)
                alpha[p] = w
                z += w
            for p in range(lo, hi):
                a = alpha[p] / z
                alpha[p] = a
                j = indices[p]
                for c in range(f):
                    out[i, c] += a * values[j, c]
        return out, alpha, pos

    @njit(cache=True)
    def _gat_head_backward_numba(indptr, indices, alpha, pos, values, g_out, slope):  # pragma: no cover - jit
        n = indptr.size - 1
        f = values.shape[1]
        g_src = np.zeros(n)
        g_dst = np.zeros(n)
        g_val = np.zeros((n, f))
        for i in range(n):
            lo, hi = indptr[i], indptr[i + 1]
            if hi == lo:
                continue
            mean_c = 0.0
            for p in range(lo, hi):
                j = indices[p]
                c = 0.0
                for q in range(f):
                    c += g_out[i, q] * values[j, q]
                mean_c += alpha[p] * c
            for p in range(lo, hi):
                j = indices[p]
                c = 0.0
                for q in range(f):
                    c += g_out[i, q] * values[j, q]
                dl = alpha[p] * (c - mean_c)
                de = dl if pos[p] else dl * slope
                g_src[i] += de
                g_dst[j] += de
                a = alpha[p]
                for q in range(f):
                    g_val[j, q] += a * g_out[i, q]
        return g_src, g_dst, g_val


def _gat_head_forward_numpy(indptr, indices, s_src, s_dst, values, slope):
    n = indptr.size - 1
    f = values.shape[1]
    out = np.zeros((n, f))
    alpha = np.zeros(indices.size)
    pos = np.zeros(indices.size, dtype=np.uint8)
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        if hi == lo:
            continue
        nbr = indices[lo:hi]
        e = s_src[i] + s_dst[nbr]
        p = e > 0.0
        pos[lo:hi] = p
        logits = np.where(p, e, slope * e)
        w = np.exp(logits - logits.max())
        a = w / w.sum()
        alpha[lo:hi] = a
        out[i] = a @ values[nbr]
    return out, alpha, pos


def _gat_head_backward_numpy(indptr, indices, alpha, pos, values, g_out, slope):
    n = indptr.size - 1
    g_src = np.zeros(n)
    g_dst = np.zeros(n)
    g_val = np.zeros_like(values)
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        if hi == lo:
            continue
        nbr = indices[lo:hi]
        a = alpha[lo:hi]
        c = values[nbr] @ g_out[i]
        dl = a * (c - a @ c)
        de = np.where(pos[lo:hi], dl, slope * dl)
        g_src[i] = de.sum()
        np.add.at(g_dst, nbr, de)
        np.add.at(g_val, nbr, a[:, None] * g_out[i][None, :])
    return g_src, g_dst, g_val


def csr_matmul(csr: Csr, dense: np.ndarray, use_numba: bool | None = None) -> np.ndarray:
    """csr @ dense with a deterministic per-row accumulation order."""
    dense = np.ascontiguousarray(dense, dtype=np.float64)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba and USE_NUMBA:
        return _csr_matmul_numba(csr.indptr, csr.indices, csr.data, dense)
    return _csr_matmul_numpy(csr.indptr, csr.indices, csr.data, dense)


def gat_head_forward(csr: Csr, s_src: np.ndarray, s_dst: np.ndarray,
                     values: np.ndarray, slope: float, use_numba: bool | None = None):
    """Neighborhood-softmax attention for one head.

    Row i aggregates values[j] over j in its CSR neighborhood with weights
    softmax_j(leaky_relu(s_src[i] + s_dst[j])). Returns (out, alpha, pos)
    where alpha holds the per-entry attention weights and pos the
    leaky-relu branch taken (needed by the backward pass).
    """
    s_src = np.ascontiguousarray(s_src, dtype=np.float64).reshape(-1)
    s_dst = np.ascontiguousarray(s_dst, dtype=np.float64).reshape(-1)
    values = np.ascontiguousarray(values, dtype=np.float64)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba and USE_NUMBA:
        return _gat_head_forward_numba(csr.indptr, csr.indices, s_src, s_dst, values, slope)
    return _gat_head_forward_numpy(csr.indptr, csr.indices, s_src, s_dst, values, slope)


def gat_head_backward(csr: Csr, alpha: np.ndarray, pos: np.ndarray, values: np.ndarray,
                      g_out: np.ndarray, slope: float, use_numba: bool | None = None):
    values = np.ascontiguousarray(values, dtype=np.float64)
    g_out = np.ascontiguousarray(g_out, dtype=np.float64)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba and USE_NUMBA:
        return _gat_head_backward_numba(csr.indptr, csr.indices, alpha, pos, values, g_out, slope)
    return _gat_head_backward_numpy(csr.indptr, csr.indices, alpha, pos, values, g_out, slope)
