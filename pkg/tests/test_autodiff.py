import numpy as np
import pytest

from sharpgcl import autodiff as ad
from sharpgcl.kernels import adjacency_csr, csr_from_coo
from oracles import central_difference

RELTOL = 1e-4


def _fd_check(build, arrays, h=1e-4, tol=RELTOL):
    """build(*tensors) -> scalar Tensor; compare grads to central differences."""

    def run(*vals):
        tensors = [ad.Tensor(v, requires_grad=True) for v in vals]
        with ad.Tape() as tape:
            out = build(*tensors)
            tape.backward(out)
        return out.value[0, 0], [t.grad for t in tensors]

    _, grads = run(*arrays)
    numeric = central_difference(lambda *vals: run(*vals)[0], list(arrays), h=h)
    for g, n in zip(grads, numeric):
        scale = max(np.abs(n).max(), 1.0)
        assert np.abs(g - n).max() / scale < tol


def _away_from_kinks(rng, shape, gap=0.15):
    x = rng.uniform(0.15, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)
    return x


def _distinct(rng, shape):
    vals = rng.permutation(np.linspace(0.5, 3.0, int(np.prod(shape))))
    return vals.reshape(shape)


def _reduce(t):
    r = np.random.default_rng(99).normal(size=t.shape)
    return ad.mean_all(ad.mul(t, r))


def test_exp_of_zero_matrix():
    x = ad.Tensor(np.zeros((3, 3)), requires_grad=True)
    with ad.Tape() as tape:
        y = ad.exp(x)
        s = ad.mean_all(y)
        tape.backward(s)
    assert np.array_equal(y.value, np.ones((3, 3)))
    assert np.allclose(x.grad, np.full((3, 3), 1 / 9))


def test_row_l2_normalize_345():
    out = ad.row_l2_normalize(ad.Tensor([[3.0, 4.0]]))
    assert np.allclose(out.value, [[0.6, 0.8]])


def test_row_l2_normalize_zero_row_policy():
    x = ad.Tensor(np.array([[0.0, 0.0], [3.0, 4.0]]), requires_grad=True)
    with ad.Tape() as tape:
        y = ad.row_l2_normalize(x)
        tape.backward(ad.mean_all(y))
    assert np.array_equal(y.value[0], [0.0, 0.0])
    assert np.array_equal(x.grad[0], [0.0, 0.0])
    with pytest.raises(ValueError, match="degenerate"):
        ad.row_l2_normalize(ad.Tensor([[0.0, 0.0]]), strict=True)


def test_backward_of_sum_is_ones():
    w = ad.Tensor(np.arange(9.0).reshape(3, 3), requires_grad=True)
    with ad.Tape() as tape:
        tape.backward(ad.mean_all(ad.scalar_mul(w, 9.0)))
    assert np.allclose(w.grad, np.ones((3, 3)))


def test_backward_quadratic():
    w = ad.Tensor(np.array([[1.0, -2.0], [0.5, 3.0]]), requires_grad=True)
    with ad.Tape() as tape:
        loss = ad.mean_all(ad.mul(w, w))  # (1/4) sum w^2
        tape.backward(loss)
    assert np.allclose(w.grad, 2 * w.value / 4)


def test_backward_requires_scalar():
    w = ad.Tensor(np.ones((2, 2)), requires_grad=True)
    with ad.Tape() as tape:
        y = ad.mul(w, 2.0)
        with pytest.raises(ad.ShapeError):
            tape.backward(y)


def test_double_backward_rejected():
    w = ad.Tensor(np.ones((2, 2)), requires_grad=True)
    with ad.Tape() as tape:
        y = ad.mean_all(w)
        tape.backward(y)
        with pytest.raises(RuntimeError, match="already consumed"):
            tape.backward(y)


def test_empty_tape_rejected():
    with ad.Tape() as tape:
        with pytest.raises(RuntimeError, match="empty"):
            tape.backward(ad.Tensor([[1.0]]))


def test_log_of_nonpositive_rejected():
    with pytest.raises(ValueError, match="nonpositive"):
        ad.log(ad.Tensor([[0.0]]))


def test_shape_mismatch_rejected():
    with pytest.raises(ad.ShapeError):
        ad.matmul(ad.Tensor(np.ones((2, 3))), ad.Tensor(np.ones((2, 3))))
    with pytest.raises(ad.ShapeError):
        ad.add(ad.Tensor(np.ones((2, 3))), ad.Tensor(np.ones((3, 2))))


def test_nonfinite_forward_rejected():
    big = ad.Tensor(np.full((2, 2), 1e308))
    with np.errstate(over="ignore"):
        with pytest.raises(ad.NonFiniteError):
            ad.mul(big, big)


def test_deterministic_gradients(citation_graph):
    def run():
        w = ad.Tensor(np.linspace(-1, 1, 12).reshape(4, 3), requires_grad=True)
        x = np.linspace(0, 1, 8).reshape(2, 4)
        with ad.Tape() as tape:
            loss = ad.mean_all(ad.relu(ad.matmul(x, w)))
            tape.backward(loss)
        return w.grad

    a, b = run(), run()
    assert np.array_equal(a, b)


def test_chain_composition_closed_form():
    # d/dx mean(exp(2x)) = (2/size) exp(2x)
    x = ad.Tensor(np.array([[0.3, -0.7], [1.1, 0.0]]), requires_grad=True)
    with ad.Tape() as tape:
        tape.backward(ad.mean_all(ad.exp(ad.scalar_mul(x, 2.0))))
    assert np.allclose(x.grad, 2 * np.exp(2 * x.value) / 4)


@pytest.mark.parametrize("seed", range(4))
def test_fd_binary_ops(seed):
    rng = np.random.default_rng(seed)
    shape = (rng.integers(1, 5), rng.integers(1, 5))
    a = rng.normal(size=shape)
    b = rng.normal(size=shape) + 3.0  # keep div well-conditioned
    _fd_check(lambda x, y: _reduce(ad.add(x, y)), (a, b))
    _fd_check(lambda x, y: _reduce(ad.sub(x, y)), (a, b))
    _fd_check(lambda x, y: _reduce(ad.mul(x, y)), (a, b))
    _fd_check(lambda x, y: _reduce(ad.div(x, y)), (a, b))


@pytest.mark.parametrize("bshape", [(1, 1), (1, 4), (3, 1)])
def test_fd_broadcast_ops(bshape):
    rng = np.random.default_rng(hash(bshape) % 2**32)
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=bshape) + 2.5
    _fd_check(lambda x, y: _reduce(ad.add(x, y)), (a, b))
    _fd_check(lambda x, y: _reduce(ad.mul(x, y)), (a, b))
    _fd_check(lambda x, y: _reduce(ad.div(x, y)), (a, b))


def test_fd_outer_broadcast():
    rng = np.random.default_rng(17)
    a = rng.normal(size=(4, 1))
    b = rng.normal(size=(1, 5))
    _fd_check(lambda x, y: _reduce(ad.add(x, y)), (a, b))


@pytest.mark.parametrize("seed", range(4))
def test_fd_matmul(seed):
    rng = np.random.default_rng(seed + 10)
    n, k, m = rng.integers(1, 5, size=3)
    _fd_check(lambda x, y: _reduce(ad.matmul(x, y)),
              (rng.normal(size=(n, k)), rng.normal(size=(k, m))))


def test_fd_sparse_dense_matmul():
    rng = np.random.default_rng(3)
    s = csr_from_coo([0, 0, 1, 2, 2], [1, 2, 0, 0, 2], [0.5, -1.0, 2.0, 1.5, 0.3], (3, 3))
    _fd_check(lambda x: _reduce(ad.sparse_dense_matmul(s, x)), (rng.normal(size=(3, 4)),))


@pytest.mark.parametrize("seed", range(4))
def test_fd_elementwise_unary(seed):
    rng = np.random.default_rng(seed + 20)
    shape = (rng.integers(1, 5), rng.integers(1, 5))
    x = _away_from_kinks(rng, shape)
    _fd_check(lambda t: _reduce(ad.exp(t)), (x,))
    _fd_check(lambda t: _reduce(ad.relu(t)), (x,))
    _fd_check(lambda t: _reduce(ad.prelu(t, 0.25)), (x,))
    _fd_check(lambda t: _reduce(ad.elu(t)), (x,))
    _fd_check(lambda t: _reduce(ad.log(t)), (np.abs(x) + 0.5,))
    _fd_check(lambda t: _reduce(ad.scalar_mul(t, -1.7)), (x,))
    _fd_check(lambda t: _reduce(ad.clamp_min(t, 0.0)), (x,))


@pytest.mark.parametrize("seed", range(4))
def test_fd_reductions_and_structure(seed):
    rng = np.random.default_rng(seed + 30)
    shape = (int(rng.integers(2, 5)), int(rng.integers(2, 5)))
    x = _distinct(rng, shape)
    _fd_check(lambda t: _reduce(ad.row_sum(t)), (x,))
    _fd_check(lambda t: _reduce(ad.row_max(t)), (x,))
    _fd_check(lambda t: ad.mean_all(t), (x,))
    _fd_check(lambda t: ad.max_all(t), (x,))
    _fd_check(lambda t: ad.min_all(t), (x,))
    _fd_check(lambda t: _reduce(ad.transpose(t)), (x,))
    _fd_check(lambda t: _reduce(ad.row_l2_normalize(t)), (x,))
    _fd_check(lambda t: _reduce(ad.slice_cols(t, 0, shape[1] - 1)), (x,))


def test_fd_concat():
    rng = np.random.default_rng(44)
    a, b = rng.normal(size=(2, 3)), rng.normal(size=(4, 3))
    _fd_check(lambda x, y: _reduce(ad.concat_rows(x, y)), (a, b))
    c, d = rng.normal(size=(3, 2)), rng.normal(size=(3, 4))
    _fd_check(lambda x, y: _reduce(ad.concat_cols(x, y)), (c, d))


@pytest.mark.parametrize("seed", range(3))
def test_fd_gat_head(seed):
    rng = np.random.default_rng(seed + 60)
    edges = np.array([[0, 1], [1, 2], [0, 3], [2, 3], [1, 4]])
    adj = adjacency_csr(edges, 5, add_self_loops=True)
    s_src = rng.normal(size=(5, 1))
    s_dst = rng.normal(size=(5, 1))
    vals = rng.normal(size=(5, 3))
    _fd_check(lambda a, b, v: _reduce(ad.gat_head(a, b, v, adj, 0.2)),
              (s_src, s_dst, vals))


def test_fd_property_sweep_all_primitives():
    """Randomized shapes/seeds across the primitive set (>=100 cases)."""
    cases = 0
    for seed in range(25):
        rng = np.random.default_rng(seed + 1000)
        n, m = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        x = _away_from_kinks(rng, (n, m))
        y = _away_from_kinks(rng, (n, m)) + 2.0
        for build, args in (
            (lambda t, u: _reduce(ad.add(t, u)), (x, y)),
            (lambda t, u: _reduce(ad.mul(t, u)), (x, y)),
            (lambda t, u: _reduce(ad.div(t, u)), (x, y)),
            (lambda t: _reduce(ad.exp(t)), (x,)),
            (lambda t: _reduce(ad.row_l2_normalize(t)), (x,)),
            (lambda t: _reduce(ad.relu(t)), (x,)),
        ):
            _fd_check(build, args)
            cases += 1
    assert cases >= 100
