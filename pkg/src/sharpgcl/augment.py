"""Stochastic view generation: Bernoulli edge dropping and feature masking.

Each undirected pair gets one Bernoulli draw (keep probability 1 - p_e), so
the masked adjacency stays symmetric. Feature masking draws a single
0/1 vector over the M dimensions (keep probability 1 - p_f) and applies it
to every node row, zeroing whole columns.

Per-epoch resampling: the two views of epoch t use independent substreams
seeded by (seed, view_id, epoch), so a run seed reproduces every mask.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import Graph


@dataclass
class AugmentationConfig:
    p_e: float
    p_f: float
    seed: int = 0

    def __post_init__(self):
        if not (0 <= self.p_e <= 1) or not (0 <= self.p_f <= 1):
            raise ValueError("drop probabilities must lie in [0, 1]")


@dataclass
class AugmentedView:
    """Masked copy of a graph; row i still refers to original node i."""

    edges: np.ndarray
    features: np.ndarray


def mask_edges(edges: np.ndarray, p_e: float, rng: np.random.Generator) -> np.ndarray:
    """Keep each undirected pair independently with probability 1 - p_e."""
    if not (0 <= p_e <= 1):
        raise ValueError("p_e out of [0, 1]")
    if edges.shape[0] == 0:
        return edges.copy()
    keep = rng.random(edges.shape[0]) >= p_e
    return edges[keep].copy()


def mask_features(features: np.ndarray, p_f: float, rng: np.random.Generator) -> np.ndarray:
    """Zero whole feature columns: one Bernoulli draw per dimension."""
    if not (0 <= p_f <= 1):
        raise ValueError("p_f out of [0, 1]")
    keep = (rng.random(features.shape[1]) >= p_f).astype(features.dtype)
    return features * keep[None, :]


def view_rng(seed: int, view_id: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng([seed, view_id, epoch])


def augment_view(graph: Graph, config: AugmentationConfig, view_id: int, epoch: int = 0) -> AugmentedView:
    rng = view_rng(config.seed, view_id, epoch)
    edges = mask_edges(graph.edges, config.p_e, rng)
    feats = mask_features(graph.features, config.p_f, rng)
    return AugmentedView(edges=edges, features=feats)


def augment_pair(graph: Graph, config: AugmentationConfig, epoch: int = 0) -> tuple[AugmentedView, AugmentedView]:
    """Two independently masked views of the same graph."""
    return augment_view(graph, config, 0, epoch), augment_view(graph, config, 1, epoch)
