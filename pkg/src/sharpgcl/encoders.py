"""Two-layer GCN / GAT encoders, the MLP projector, and checkpoint files.

The GCN consumes the symmetrically normalized adjacency of a view; the GAT
consumes the raw view adjacency plus self-loops and learns its own edge
weights. Both views of a training step are encoded by the same object, so
weight tying holds by construction.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .graphs import DataError
from .kernels import Csr, adjacency_csr

CHECKPOINT_MAGIC = b"SGC1"
CHECKPOINT_VERSION = 1

_ACTIVATIONS = {
    "relu": ad.relu,
    "prelu": lambda t: ad.prelu(t, 0.25),
    "elu": ad.elu,
}


def activation_fn(name: str):
    try:
        return _ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f"unknown activation: {name!r}") from None


def glorot(shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """Glorot-uniform sample: U(-a, a) with a = sqrt(6 / (fan_in + fan_out))."""
    bound = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-bound, bound, size=shape)


def normalize_adjacency(edges: np.ndarray, num_nodes: int) -> Csr:
    """Symmetric GCN normalization of A + I.

    Entry (i, j) becomes 1/sqrt(d_i d_j) with d the degrees of A + I, so an
    isolated node keeps a unit self-loop.
    """
    with_loops = adjacency_csr(edges, num_nodes, add_self_loops=True)
    deg = np.zeros(num_nodes)
    np.add.at(deg, np.repeat(np.arange(num_nodes), np.diff(with_loops.indptr)), with_loops.data)
    inv_sqrt = 1.0 / np.sqrt(deg)
    rows = np.repeat(np.arange(num_nodes), np.diff(with_loops.indptr))
    data = with_loops.data * inv_sqrt[rows] * inv_sqrt[with_loops.indices]
    return Csr(with_loops.indptr, with_loops.indices, data, with_loops.shape)


class GcnEncoder:
    """H1 = act(A_hat X W0); out = A_hat H1 W1 (no final nonlinearity)."""

    kind = "gcn"

    def __init__(self, in_dim: int, hidden: int, activation: str = "relu",
                 rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_dim, self.hidden = in_dim, hidden
        self.activation = activation
        self.w0 = Tensor(glorot((in_dim, hidden), rng), requires_grad=True, name="gcn.w0")
        self.w1 = Tensor(glorot((hidden, hidden), rng), requires_grad=True, name="gcn.w1")

    def params(self) -> list[Tensor]:
        return [self.w0, self.w1]

    def build_structure(self, edges: np.ndarray, num_nodes: int) -> Csr:
        return normalize_adjacency(edges, num_nodes)

    def forward(self, structure: Csr, x) -> Tensor:
        act = activation_fn(self.activation)
        h1 = act(ad.sparse_dense_matmul(structure, ad.matmul(x, self.w0)))
        return ad.sparse_dense_matmul(structure, ad.matmul(h1, self.w1))

    def meta(self) -> dict:
        return {"in_dim": self.in_dim, "hidden": self.hidden, "activation": self.activation}


class GatEncoder:
    """Two attention layers: multi-head with concat fusion, then one head.

    Attention per head: softmax over j in N(i) plus self of
    leaky_relu(a_src . W x_i + a_dst . W x_j); messages are W x_j.
    """

    kind = "gat"

    def __init__(self, in_dim: int, hidden: int, heads: int = 8, slope: float = 0.2,
                 activation: str = "relu", bias: bool = True,
                 rng: np.random.Generator | None = None):
        if hidden % heads:
            raise ValueError(f"hidden={hidden} not divisible by heads={heads}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_dim, self.hidden, self.heads, self.slope = in_dim, hidden, heads, slope
        self.activation = activation
        self.bias = bias
        self.head_dim = hidden // heads
        self.w0 = Tensor(glorot((in_dim, hidden), rng), requires_grad=True, name="gat.w0")
        self.a0_src = Tensor(glorot((self.head_dim, heads), rng), requires_grad=True, name="gat.a0_src")
        self.a0_dst = Tensor(glorot((self.head_dim, heads), rng), requires_grad=True, name="gat.a0_dst")
        self.w1 = Tensor(glorot((hidden, hidden), rng), requires_grad=True, name="gat.w1")
        self.a1_src = Tensor(glorot((hidden, 1), rng), requires_grad=True, name="gat.a1_src")
        self.a1_dst = Tensor(glorot((hidden, 1), rng), requires_grad=True, name="gat.a1_dst")
        self.b0 = Tensor(np.zeros((1, hidden)), requires_grad=True, name="gat.b0")
        self.b1 = Tensor(np.zeros((1, hidden)), requires_grad=True, name="gat.b1")

    def params(self) -> list[Tensor]:
        ps = [self.w0, self.a0_src, self.a0_dst, self.w1, self.a1_src, self.a1_dst]
        if self.bias:
            ps += [self.b0, self.b1]
        return ps

    def build_structure(self, edges: np.ndarray, num_nodes: int) -> Csr:
        return adjacency_csr(edges, num_nodes, add_self_loops=True)

    def _layer(self, adj: Csr, x, w, a_src, a_dst, heads: int, head_dim: int) -> Tensor:
        wx = ad.matmul(x, w)
        outs = []
        for k in range(heads):
            v = ad.slice_cols(wx, k * head_dim, (k + 1) * head_dim) if heads > 1 else wx
            s_src = ad.matmul(v, ad.slice_cols(a_src, k, k + 1))
            s_dst = ad.matmul(v, ad.slice_cols(a_dst, k, k + 1))
            outs.append(ad.gat_head(s_src, s_dst, v, adj, self.slope))
        h = outs[0]
        for other in outs[1:]:
            h = ad.concat_cols(h, other)
        return h

    def forward(self, structure: Csr, x) -> Tensor:
        act = activation_fn(self.activation)
        h1 = self._layer(structure, x, self.w0, self.a0_src, self.a0_dst, self.heads, self.head_dim)
        if self.bias:
            h1 = ad.add(h1, self.b0)
        h1 = act(h1)
        out = self._layer(structure, h1, self.w1, self.a1_src, self.a1_dst, 1, self.hidden)
        if self.bias:
            out = ad.add(out, self.b1)
        return out

    def meta(self) -> dict:
        return {
            "in_dim": self.in_dim, "hidden": self.hidden, "heads": self.heads,
            "slope": self.slope, "activation": self.activation, "bias": self.bias,
        }


class MlpProjector:
    """z = act(h W0 + b0) W1 + b1, mapping embeddings into contrast space."""

    def __init__(self, in_dim: int, out_dim: int, activation: str = "elu",
                 bias: bool = True, rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_dim, self.out_dim = in_dim, out_dim
        self.activation = activation
        self.bias = bias
        self.w0 = Tensor(glorot((in_dim, out_dim), rng), requires_grad=True, name="proj.w0")
        self.w1 = Tensor(glorot((out_dim, out_dim), rng), requires_grad=True, name="proj.w1")
        self.b0 = Tensor(np.zeros((1, out_dim)), requires_grad=True, name="proj.b0")
        self.b1 = Tensor(np.zeros((1, out_dim)), requires_grad=True, name="proj.b1")

    def params(self) -> list[Tensor]:
        return [self.w0, self.w1] + ([self.b0, self.b1] if self.bias else [])

    def forward(self, h) -> Tensor:
        act = activation_fn(self.activation)
        z = ad.matmul(h, self.w0)
        if self.bias:
            z = ad.add(z, self.b0)
        z = ad.matmul(act(z), self.w1)
        if self.bias:
            z = ad.add(z, self.b1)
        return z

    def meta(self) -> dict:
        return {
            "in_dim": self.in_dim, "out_dim": self.out_dim,
            "activation": self.activation, "bias": self.bias,
        }


class ContrastiveModel:
    """Shared encoder plus projector; the unit a checkpoint stores."""

    def __init__(self, encoder, projector: MlpProjector):
        self.encoder = encoder
        self.projector = projector

    def params(self) -> list[Tensor]:
        return self.encoder.params() + self.projector.params()

    def embed(self, edges: np.ndarray, num_nodes: int, features: np.ndarray) -> np.ndarray:
        """Frozen-encoder embeddings of an unaugmented graph (no tape)."""
        structure = self.encoder.build_structure(edges, num_nodes)
        return self.encoder.forward(structure, Tensor(features)).value

    def project(self, edges: np.ndarray, num_nodes: int, features: np.ndarray) -> np.ndarray:
        structure = self.encoder.build_structure(edges, num_nodes)
        h = self.encoder.forward(structure, Tensor(features))
        return self.projector.forward(h).value


def build_model(encoder_kind: str, in_dim: int, hidden: int, projector_dim: int,
                activation: str, projector_activation: str = "elu",
                heads: int = 8, slope: float = 0.2, seed: int = 0) -> ContrastiveModel:
    rng = np.random.default_rng([seed, 7])
    if encoder_kind == "gcn":
        enc = GcnEncoder(in_dim, hidden, activation, rng=rng)
    elif encoder_kind == "gat":
        enc = GatEncoder(in_dim, hidden, heads=heads, slope=slope, activation=activation, rng=rng)
    else:
        raise ValueError(f"unknown encoder kind: {encoder_kind!r}")
    proj = MlpProjector(hidden, projector_dim, activation=projector_activation, rng=rng)
    return ContrastiveModel(enc, proj)


def save_checkpoint(path: str, model: ContrastiveModel) -> None:
    header = {
        "format_version": CHECKPOINT_VERSION,
        "encoder_kind": model.encoder.kind,
        "encoder": model.encoder.meta(),
        "projector": model.projector.meta(),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    chunks = [CHECKPOINT_MAGIC, struct.pack("<I", len(blob)), blob]
    for p in model.params():
        rows, cols = p.shape
        chunks.append(struct.pack("<II", rows, cols))
        chunks.append(np.ascontiguousarray(p.value, dtype="<f8").tobytes())
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(b"".join(chunks))
    os.replace(tmp, path)


def load_checkpoint(path: str) -> ContrastiveModel:
    if not os.path.isfile(path):
        raise DataError(f"missing file: {path}")
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise DataError("corrupted checkpoint header")
    (hlen,) = struct.unpack_from("<I", raw, 4)
    try:
        header = json.loads(raw[8:8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError("corrupted checkpoint header") from exc
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise DataError(f"unknown checkpoint version: {header.get('format_version')!r}")

    enc_meta = header["encoder"]
    proj_meta = header["projector"]
    if header["encoder_kind"] == "gcn":
        enc = GcnEncoder(enc_meta["in_dim"], enc_meta["hidden"], enc_meta["activation"])
    elif header["encoder_kind"] == "gat":
        enc = GatEncoder(enc_meta["in_dim"], enc_meta["hidden"], heads=enc_meta["heads"],
                         slope=enc_meta["slope"], activation=enc_meta["activation"],
                         bias=enc_meta["bias"])
    else:
        raise DataError(f"unknown encoder kind: {header['encoder_kind']!r}")
    proj = MlpProjector(proj_meta["in_dim"], proj_meta["out_dim"],
                        activation=proj_meta["activation"], bias=proj_meta["bias"])
    model = ContrastiveModel(enc, proj)

    offset = 8 + hlen
    for p in model.params():
        rows, cols = struct.unpack_from("<II", raw, offset)
        offset += 8
        count = rows * cols
        vals = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(rows, cols)
        offset += count * 8
        if (rows, cols) != p.shape:
            raise DataError(f"checkpoint matrix shape {(rows, cols)} != expected {p.shape}")
        p.value = vals.astype(np.float64)  # astype copies out of the read-only buffer
    if offset != len(raw):
        raise DataError("trailing bytes in checkpoint")
    return model
