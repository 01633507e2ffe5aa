"""Dense-matrix reverse-mode differentiation on an explicit tape.

Everything is a 2-D float64 matrix; scalars are (1, 1). Operations run
eagerly and, when a Tape is active and some operand needs gradients,
register a backward rule. ``Tape.backward`` replays rules in exact reverse
append order. Sparse operands (Csr) are constants: adjacency is data.

Non-finite forward values or gradients are a hard error. Broadcasting is
limited to row/column/scalar shapes against a matrix.
"""

from __future__ import annotations

import math
import threading
from typing import Callable, Sequence

import numpy as np

from .kernels import Csr, csr_matmul, gat_head_backward, gat_head_forward

CHECK_FINITE = True


class ShapeError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


def _check_finite(arr: np.ndarray, what: str) -> None:
    if CHECK_FINITE and not math.isfinite(float(arr.sum())):
        raise NonFiniteError(f"non-finite values in {what}")


class Tensor:
    """A matrix plus its accumulated gradient."""

    __slots__ = ("value", "grad", "requires_grad", "needs_grad", "name")

    def __init__(self, value, requires_grad: bool = False, name: str = ""):
        arr = np.asarray(value, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        elif arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got shape {arr.shape}")
        self.value = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.needs_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def add_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g

    def __repr__(self) -> str:
        tag = self.name or "tensor"
        return f"<{tag} {self.shape[0]}x{self.shape[1]} requires_grad={self.requires_grad}>"


class _Node:
    __slots__ = ("output", "parents", "backward_fn")

    def __init__(self, output: Tensor, parents: Sequence[Tensor], backward_fn: Callable):
        self.output = output
        self.parents = parents
        self.backward_fn = backward_fn


_tls = threading.local()


def _tape_stack() -> list:
    if not hasattr(_tls, "stack"):
        _tls.stack = []
    return _tls.stack


def active_tape() -> "Tape | None":
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tape:
    """Append-only record of operations; single-threaded, single backward."""

    def __init__(self):
        self.nodes: list[_Node] = []
        self.used = False

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        stack = _tape_stack()
        assert stack and stack[-1] is self
        stack.pop()

    def backward(self, output: Tensor) -> None:
        if output.shape != (1, 1):
            raise ShapeError(f"backward needs a (1, 1) scalar, got {output.shape}")
        if self.used:
            raise RuntimeError("tape already consumed by a previous backward")
        if not self.nodes:
            raise RuntimeError("empty tape")
        self.used = True
        output.grad = np.ones((1, 1))
        for node in reversed(self.nodes):
            g = node.output.grad
            if g is None:
                continue
            grads = node.backward_fn(g)
            for parent, pg in zip(node.parents, grads):
                if pg is None or not parent.needs_grad:
                    continue
                _check_finite(pg, "gradient")
                parent.add_grad(pg)


def _record(out: Tensor, parents: Sequence[Tensor], backward_fn: Callable, what: str) -> Tensor:
    _check_finite(out.value, what)
    tape = active_tape()
    if tape is not None and any(p.needs_grad for p in parents):
        out.needs_grad = True
        tape.nodes.append(_Node(out, tuple(parents), backward_fn))
    return out


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if g.shape == shape:
        return g
    axes = tuple(ax for ax in (0, 1) if shape[ax] == 1 and g.shape[ax] != 1)
    return g.sum(axis=axes, keepdims=True)


def _broadcast_ok(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return all(x == y or x == 1 or y == 1 for x, y in zip(a, b))


def _binary(a, b, fwd, bwd_a, bwd_b, what: str) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if not _broadcast_ok(a.shape, b.shape):
        raise ShapeError(f"{what}: shapes {a.shape} and {b.shape} do not broadcast")
    out = Tensor(fwd(a.value, b.value))

    def backward(g):
        return (
            _unbroadcast(bwd_a(g, a.value, b.value), a.shape),
            _unbroadcast(bwd_b(g, a.value, b.value), b.shape),
        )

    return _record(out, (a, b), backward, what)


def add(a, b) -> Tensor:
    return _binary(a, b, np.add, lambda g, x, y: g, lambda g, x, y: g, "add")


def sub(a, b) -> Tensor:
    return _binary(a, b, np.subtract, lambda g, x, y: g, lambda g, x, y: -g, "sub")


def mul(a, b) -> Tensor:
    return _binary(a, b, np.multiply, lambda g, x, y: g * y, lambda g, x, y: g * x, "mul")


def div(a, b) -> Tensor:
    return _binary(
        a, b, np.divide,
        lambda g, x, y: g / y,
        lambda g, x, y: -g * x / (y * y),
        "div",
    )


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dims {a.shape} @ {b.shape}")
    out = Tensor(a.value @ b.value)

    def backward(g):
        return g @ b.value.T, a.value.T @ g

    return _record(out, (a, b), backward, "matmul")


def sparse_dense_matmul(s: Csr, b) -> Tensor:
    """Constant CSR times dense tensor; gradients flow into the dense side only."""
    b = as_tensor(b)
    if s.shape[1] != b.shape[0]:
        raise ShapeError(f"sparse_dense_matmul: {s.shape} @ {b.shape}")
    out = Tensor(csr_matmul(s, b.value))
    st = _cached_transpose(s)

    def backward(g):
        return (csr_matmul(st, g),)

    return _record(out, (b,), backward, "sparse_dense_matmul")


def _cached_transpose(s: Csr) -> Csr:
    cached = getattr(s, "_transpose_cache", None)
    if cached is None:
        cached = s.transpose()
        s._transpose_cache = cached
    return cached


def scalar_mul(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    out = Tensor(a.value * c)
    return _record(out, (a,), lambda g: (g * c,), "scalar_mul")


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.exp(a.value))
    return _record(out, (a,), lambda g: (g * out.value,), "exp")


def log(a) -> Tensor:
    a = as_tensor(a)
    if np.any(a.value <= 0):
        raise ValueError("log of nonpositive value")
    out = Tensor(np.log(a.value))
    return _record(out, (a,), lambda g: (g / a.value,), "log")


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.value > 0
    out = Tensor(np.where(mask, a.value, 0.0))
    return _record(out, (a,), lambda g: (g * mask,), "relu")


def prelu(a, slope: float = 0.25) -> Tensor:
    a = as_tensor(a)
    mask = a.value > 0
    out = Tensor(np.where(mask, a.value, slope * a.value))
    return _record(out, (a,), lambda g: (g * np.where(mask, 1.0, slope),), "prelu")


def elu(a, alpha: float = 1.0) -> Tensor:
    a = as_tensor(a)
    mask = a.value > 0
    out = Tensor(np.where(mask, a.value, alpha * (np.exp(a.value) - 1.0)))

    def backward(g):
        return (g * np.where(mask, 1.0, out.value + alpha),)

    return _record(out, (a,), backward, "elu")


def row_l2_normalize(a, strict: bool = False) -> Tensor:
    """Scale each row to unit L2 norm. Zero rows stay zero with zero
    gradient unless ``strict``, which raises on a degenerate embedding."""
    a = as_tensor(a)
    norms = np.linalg.norm(a.value, axis=1, keepdims=True)
    zero = norms == 0
    if strict and np.any(zero):
        raise ValueError("degenerate embedding: zero row cannot be normalized")
    safe = np.where(zero, 1.0, norms)
    out_val = a.value / safe
    out = Tensor(out_val)

    def backward(g):
        dot = np.sum(out_val * g, axis=1, keepdims=True)
        return ((g - out_val * dot) / safe * ~zero,)

    return _record(out, (a,), backward, "row_l2_normalize")


def row_sum(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.value.sum(axis=1, keepdims=True))
    return _record(out, (a,), lambda g: (np.broadcast_to(g, a.shape).copy(),), "row_sum")


def row_max(a) -> Tensor:
    a = as_tensor(a)
    idx = np.argmax(a.value, axis=1)
    out = Tensor(a.value[np.arange(a.shape[0]), idx].reshape(-1, 1))

    def backward(g):
        ga = np.zeros(a.shape)
        ga[np.arange(a.shape[0]), idx] = g[:, 0]
        return (ga,)

    return _record(out, (a,), backward, "row_max")


def mean_all(a) -> Tensor:
    a = as_tensor(a)
    size = a.value.size
    out = Tensor(np.array([[a.value.mean()]]))
    return _record(out, (a,), lambda g: (np.full(a.shape, g[0, 0] / size),), "mean_all")


def _extreme_all(a, pick, name):
    a = as_tensor(a)
    flat = pick(a.value)
    out = Tensor(np.array([[a.value.flat[flat]]]))

    def backward(g):
        ga = np.zeros(a.value.size)
        ga[flat] = g[0, 0]
        return (ga.reshape(a.shape),)

    return _record(out, (a,), backward, name)


def max_all(a) -> Tensor:
    return _extreme_all(a, np.argmax, "max_all")


def min_all(a) -> Tensor:
    return _extreme_all(a, np.argmin, "min_all")


def clamp_min(a, floor: float) -> Tensor:
    a = as_tensor(a)
    mask = a.value > floor
    out = Tensor(np.where(mask, a.value, floor))
    return _record(out, (a,), lambda g: (g * mask,), "clamp_min")


def transpose(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.value.T.copy())
    return _record(out, (a,), lambda g: (g.T.copy(),), "transpose")


def concat_rows(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"concat_rows: {a.shape} vs {b.shape}")
    out = Tensor(np.concatenate([a.value, b.value], axis=0))
    split = a.shape[0]
    return _record(out, (a, b), lambda g: (g[:split], g[split:]), "concat_rows")


def concat_cols(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"concat_cols: {a.shape} vs {b.shape}")
    out = Tensor(np.concatenate([a.value, b.value], axis=1))
    split = a.shape[1]
    return _record(out, (a, b), lambda g: (g[:, :split], g[:, split:]), "concat_cols")


def slice_cols(a, lo: int, hi: int) -> Tensor:
    a = as_tensor(a)
    if not (0 <= lo < hi <= a.shape[1]):
        raise ShapeError(f"slice_cols [{lo}:{hi}] of {a.shape}")
    out = Tensor(a.value[:, lo:hi].copy())

    def backward(g):
        ga = np.zeros(a.shape)
        ga[:, lo:hi] = g
        return (ga,)

    return _record(out, (a,), backward, "slice_cols")


def gat_head(s_src, s_dst, values, adj: Csr, slope: float) -> Tensor:
    """One attention head over CSR neighborhoods (self-loops included in adj).

    ``s_src``/``s_dst`` are (N, 1) per-node attention scores, ``values`` the
    (N, F) per-node messages. Output row i is the attention-weighted sum of
    neighbor messages with weights softmax_j(leaky_relu(s_src[i] + s_dst[j])).
    """
    s_src, s_dst, values = as_tensor(s_src), as_tensor(s_dst), as_tensor(values)
    n = adj.shape[0]
    if s_src.shape != (n, 1) or s_dst.shape != (n, 1) or values.shape[0] != n:
        raise ShapeError("gat_head: operand shapes do not match adjacency")
    out_val, alpha, pos = gat_head_forward(adj, s_src.value, s_dst.value, values.value, slope)
    out = Tensor(out_val)

    def backward(g):
        g_src, g_dst, g_val = gat_head_backward(adj, alpha, pos, values.value, g, slope)
        return g_src.reshape(-1, 1), g_dst.reshape(-1, 1), g_val

    return _record(out, (s_src, s_dst, values), backward, "gat_head")
