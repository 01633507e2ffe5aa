"""Graph data model, on-disk dataset format, degrees, and node splits.

A dataset lives in a directory:

    meta.json       {"format_version": 1, "num_nodes": N, "num_features": M,
                     "num_classes": C, "num_edges": E}
    features.bin    row-major float32 little-endian, N*M values
    edges.csv       one "i,j" per line with i < j, no header
    labels.csv      one class id per line, N lines, -1 for unlabelled
    splits.json     optional {"train": [...], "val": [...], "test": [...]}

Edges are stored once per undirected pair in canonical (i < j) order;
symmetry is materialized when an adjacency matrix is built. Raw adjacency
never carries self-loops; those are added only by normalization.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

FORMAT_VERSION = 1


class DataError(ValueError):
    """Invalid dataset directory or graph content."""


def _atomic_write_bytes(path: str, payload: bytes) -> None:
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def atomic_write_text(path: str, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


@dataclass
class Graph:
    """Undirected attributed graph with optional per-node class labels.

    ``edges`` has shape (E, 2) with rows (i, j), i < j, sorted and unique.
    ``labels`` has shape (N,) with -1 marking an unlabelled node.
    """

    features: np.ndarray
    edges: np.ndarray
    labels: np.ndarray
    num_classes: int

    @property
    def num_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def has_labels(self) -> bool:
        return bool(np.any(self.labels >= 0))

    def validate(self) -> "Graph":
        n, m = self.features.shape
        if m < 1:
            raise DataError("feature matrix needs at least one column")
        if not np.all(np.isfinite(self.features)):
            raise DataError("non-finite feature values")
        if self.edges.ndim != 2 or (self.num_edges and self.edges.shape[1] != 2):
            raise DataError("edges must be an (E, 2) array")
        if self.num_edges:
            if self.edges.min() < 0 or self.edges.max() >= n:
                raise DataError("edge index out of range")
            if np.any(self.edges[:, 0] >= self.edges[:, 1]):
                raise DataError("edges must be canonical pairs with i < j (no self-loops)")
            packed = self.edges[:, 0].astype(np.int64) * n + self.edges[:, 1]
            if np.unique(packed).size != self.num_edges:
                raise DataError("duplicate undirected edge")
        if self.labels.shape != (n,):
            raise DataError(f"labels length {self.labels.shape} does not match {n} nodes")
        present = self.labels[self.labels != -1]
        if present.size and (present.min() < 0 or present.max() >= self.num_classes):
            raise DataError("label out of range")
        return self


def canonical_edges(pairs: np.ndarray, num_nodes: int) -> np.ndarray:
    """Canonicalize an edge array: i < j rows, self-loops dropped, sorted, unique."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    keep = lo != hi
    lo, hi = lo[keep], hi[keep]
    packed = lo * np.int64(num_nodes) + hi
    packed = np.unique(packed)
    out = np.stack([packed // num_nodes, packed % num_nodes], axis=1)
    return out


def build_graph(features, edges, labels=None, num_classes: int = 0) -> Graph:
    """Construct a validated Graph from loose arrays (edges in any order)."""
    feats = np.ascontiguousarray(np.asarray(features, dtype=np.float64))
    n = feats.shape[0]
    edge_arr = canonical_edges(np.asarray(edges, dtype=np.int64), n) if len(edges) else np.zeros((0, 2), dtype=np.int64)
    if labels is None:
        lab = np.full(n, -1, dtype=np.int64)
    else:
        lab = np.asarray(labels, dtype=np.int64)
    return Graph(feats, edge_arr, lab, int(num_classes)).validate()


def load_graph(path: str) -> Graph:
    """Load a dataset directory, checking every declared count and range."""
    meta_path = os.path.join(path, "meta.json")
    if not os.path.isfile(meta_path):
        raise DataError(f"missing file: {meta_path}")
    with open(meta_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unknown format version: {meta.get('format_version')!r}")
    n = int(meta["num_nodes"])
    m = int(meta["num_features"])
    c = int(meta["num_classes"])
    e = int(meta["num_edges"])

    feat_path = os.path.join(path, "features.bin")
    if not os.path.isfile(feat_path):
        raise DataError(f"missing file: {feat_path}")
    raw = np.fromfile(feat_path, dtype="<f4")
    if raw.size != n * m:
        raise DataError(f"features.bin holds {raw.size} values, expected {n}*{m}")
    features = raw.reshape(n, m).astype(np.float64)

    edge_path = os.path.join(path, "edges.csv")
    if not os.path.isfile(edge_path):
        raise DataError(f"missing file: {edge_path}")
    with open(edge_path, "r", encoding="utf-8") as fh:
        text = fh.read().strip()
    if text:
        try:
            edges = np.array(
                [[int(a), int(b)] for a, b in (line.split(",") for line in text.splitlines())],
                dtype=np.int64,
            )
        except ValueError as exc:
            raise DataError(f"malformed edges.csv: {exc}") from exc
    else:
        edges = np.zeros((0, 2), dtype=np.int64)
    if edges.shape[0] != e:
        raise DataError(f"edges.csv holds {edges.shape[0]} pairs, meta declares {e}")
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise DataError("edge index out of range")

    label_path = os.path.join(path, "labels.csv")
    if not os.path.isfile(label_path):
        raise DataError(f"missing file: {label_path}")
    with open(label_path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if len(lines) != n:
        raise DataError(f"labels.csv has {len(lines)} rows, expected {n}")
    labels = np.array([int(v) for v in lines], dtype=np.int64)

    graph = Graph(features, canonical_edges(edges, n), labels, c)
    if graph.num_edges != e:
        raise DataError(f"edges.csv contains duplicates or self-loops ({graph.num_edges} != {e})")
    graph.validate()
    degrees = compute_degrees(graph)
    assert int(degrees.sum()) == 2 * graph.num_edges
    return graph


def save_graph(graph: Graph, path: str) -> None:
    """Write a dataset directory in the neutral on-disk layout."""
    os.makedirs(path, exist_ok=True)
    meta = {
        "format_version": FORMAT_VERSION,
        "num_nodes": graph.num_nodes,
        "num_features": graph.num_features,
        "num_classes": graph.num_classes,
        "num_edges": graph.num_edges,
    }
    atomic_write_text(os.path.join(path, "meta.json"), json.dumps(meta, sort_keys=True) + "\n")
    _atomic_write_bytes(
        os.path.join(path, "features.bin"),
        graph.features.astype("<f4").tobytes(),
    )
    edge_lines = "\n".join(f"{i},{j}" for i, j in graph.edges)
    atomic_write_text(os.path.join(path, "edges.csv"), edge_lines + ("\n" if edge_lines else ""))
    atomic_write_text(os.path.join(path, "labels.csv"), "\n".join(str(v) for v in graph.labels) + "\n")


def compute_degrees(graph: Graph) -> np.ndarray:
    """Number of incident raw edges per node (self-loop-free by construction)."""
    deg = np.zeros(graph.num_nodes, dtype=np.int64)
    if graph.num_edges:
        np.add.at(deg, graph.edges[:, 0], 1)
        np.add.at(deg, graph.edges[:, 1], 1)
    return deg


@dataclass
class DataSplit:
    """Disjoint node index sets; the train set is further divided into a
    labelled part and an unlabelled fraction ``r`` sampled with ``seed``."""

    train_labelled: np.ndarray
    train_unlabelled: np.ndarray
    val: np.ndarray
    test: np.ndarray
    r: float = 0.0
    seed: int = 0

    @property
    def train(self) -> np.ndarray:
        return np.sort(np.concatenate([self.train_labelled, self.train_unlabelled]))

    def validate(self, num_nodes: int) -> "DataSplit":
        parts = [self.train_labelled, self.train_unlabelled, self.val, self.test]
        allidx = np.concatenate(parts) if any(p.size for p in parts) else np.zeros(0, np.int64)
        if allidx.size and (allidx.min() < 0 or allidx.max() >= num_nodes):
            raise DataError("split index out of range")
        if np.unique(allidx).size != allidx.size:
            raise DataError("split sets overlap")
        return self


def split_nodes(num_nodes: int, train_frac: float, val_frac: float,
                r: float = 0.0, seed: int = 0) -> DataSplit:
    """Random disjoint train/val/test split, then carve the unlabelled
    sub-training set of size round(r * |train|) out of the train set.

    Pure function of (num_nodes, fractions, r, seed).
    """
    if not (0 < train_frac <= 1) or not (0 < val_frac < 1):
        raise DataError("fractions out of range")
    if train_frac + val_frac > 1 + 1e-12:
        raise DataError("train_frac + val_frac exceeds 1")
    if not (0 <= r < 1):
        raise DataError("r out of [0, 1)")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(num_nodes)
    n_train = int(round(train_frac * num_nodes))
    n_val = int(round(val_frac * num_nodes))
    train = perm[:n_train]
    val = perm[n_train:n_train + n_val]
    test = perm[n_train + n_val:]
    n_unlab = int(round(r * n_train))
    unlab_pick = rng.choice(n_train, size=n_unlab, replace=False) if n_unlab else np.zeros(0, np.int64)
    mask = np.zeros(n_train, dtype=bool)
    mask[unlab_pick] = True
    return DataSplit(
        train_labelled=np.sort(train[~mask]),
        train_unlabelled=np.sort(train[mask]),
        val=np.sort(val),
        test=np.sort(test),
        r=r,
        seed=seed,
    ).validate(num_nodes)


def relabel_unlabelled_split(train: np.ndarray, r: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Divide a fixed train index set into labelled/unlabelled parts.

    Used when train/val/test come from splits.json and only the r-division
    is owned by the run config. Same sampling law as split_nodes.
    """
    train = np.sort(np.asarray(train, dtype=np.int64))
    if not (0 <= r < 1):
        raise DataError("r out of [0, 1)")
    n_unlab = int(round(r * train.size))
    rng = np.random.default_rng(seed)
    pick = rng.choice(train.size, size=n_unlab, replace=False) if n_unlab else np.zeros(0, np.int64)
    mask = np.zeros(train.size, dtype=bool)
    mask[pick] = True
    return train[~mask], train[mask]


def save_splits(split: DataSplit, path: str) -> None:
    payload = {
        "train": [int(v) for v in split.train],
        "val": [int(v) for v in split.val],
        "test": [int(v) for v in split.test],
    }
    atomic_write_text(path, json.dumps(payload) + "\n")


def load_splits(path: str, r: float = 0.0, seed: int = 0) -> DataSplit:
    if not os.path.isfile(path):
        raise DataError(f"missing file: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    try:
        train = np.asarray(payload["train"], dtype=np.int64)
        val = np.asarray(payload["val"], dtype=np.int64)
        test = np.asarray(payload["test"], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"splits file missing key: {exc}") from exc
    labelled, unlabelled = relabel_unlabelled_split(train, r, seed)
    return DataSplit(labelled, unlabelled, np.sort(val), np.sort(test), r=r, seed=seed)


def induced_subgraph(graph: Graph, nodes) -> tuple[Graph, np.ndarray]:
    """Subgraph on ``nodes`` keeping exactly the edges with both endpoints
    inside. Returns (subgraph, node_ids) where node_ids[new] = old index.
    """
    node_ids = np.unique(np.asarray(nodes, dtype=np.int64))
    if node_ids.size and (node_ids.min() < 0 or node_ids.max() >= graph.num_nodes):
        raise DataError("index out of range")
    old_to_new = np.full(graph.num_nodes, -1, dtype=np.int64)
    old_to_new[node_ids] = np.arange(node_ids.size)
    if graph.num_edges:
        keep = (old_to_new[graph.edges[:, 0]] >= 0) & (old_to_new[graph.edges[:, 1]] >= 0)
        edges = old_to_new[graph.edges[keep]]
    else:
        edges = np.zeros((0, 2), dtype=np.int64)
    sub = Graph(
        features=graph.features[node_ids].copy(),
        edges=canonical_edges(edges, node_ids.size),
        labels=graph.labels[node_ids].copy(),
        num_classes=graph.num_classes,
    ).validate()
    return sub, node_ids


def graphs_equal(a: Graph, b: Graph) -> bool:
    return (
        a.num_classes == b.num_classes
        and a.features.shape == b.features.shape
        and np.array_equal(a.features.astype("<f4"), b.features.astype("<f4"))
        and np.array_equal(a.edges, b.edges)
        and np.array_equal(a.labels, b.labels)
    )
