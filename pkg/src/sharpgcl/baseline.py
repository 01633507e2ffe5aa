"""Plain supervised GCN classifier, the reference model for degree-level
comparisons. Trains transductively on the full graph with cross-entropy on
the labelled train nodes and early stopping on validation micro-F1."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .encoders import glorot, normalize_adjacency
from .evaluation import EvalResult, degree_report, f1_scores
from .graphs import DataSplit, Graph, compute_degrees
from .optim import Adam


def _cross_entropy(logits, onehot: np.ndarray, sel_weight: np.ndarray):
    """Mean cross-entropy over the rows selected by ``sel_weight``."""
    rmax = ad.row_max(logits)
    lse = ad.add(ad.log(ad.row_sum(ad.exp(ad.sub(logits, rmax)))), rmax)
    picked = ad.row_sum(ad.mul(logits, onehot))
    per_node = ad.mul(ad.sub(lse, picked), sel_weight)
    n = logits.shape[0]
    return ad.scalar_mul(ad.mean_all(per_node), n)


class GcnClassifier:
    def __init__(self, in_dim: int, hidden: int, num_classes: int,
                 activation_seed: int = 0):
        rng = np.random.default_rng([activation_seed, 11])
        self.w0 = Tensor(glorot((in_dim, hidden), rng), requires_grad=True, name="clf.w0")
        self.w1 = Tensor(glorot((hidden, num_classes), rng), requires_grad=True, name="clf.w1")

    def params(self):
        return [self.w0, self.w1]

    def logits(self, a_hat, x) -> Tensor:
        h1 = ad.relu(ad.sparse_dense_matmul(a_hat, ad.matmul(x, self.w0)))
        return ad.sparse_dense_matmul(a_hat, ad.matmul(h1, self.w1))


def train_gcn_classifier(graph: Graph, split: DataSplit, hidden: int = 128,
                         epochs: int = 300, lr: float = 0.01,
                         weight_decay: float = 5e-4, patience: int = 20,
                         seed: int = 0,
                         reference: dict[str, float] | None = None) -> EvalResult:
    """Train and return test-set metrics plus the degree report."""
    clf = GcnClassifier(graph.num_features, hidden, graph.num_classes, activation_seed=seed)
    a_hat = normalize_adjacency(graph.edges, graph.num_nodes)
    x = graph.features
    onehot = np.zeros((graph.num_nodes, graph.num_classes))
    labelled = split.train_labelled
    onehot[labelled, graph.labels[labelled]] = 1.0
    sel = np.zeros((graph.num_nodes, 1))
    sel[labelled, 0] = 1.0 / labelled.size
    opt = Adam(clf.params(), lr=lr, weight_decay=weight_decay)

    best = {"f1": -np.inf, "params": [p.value.copy() for p in clf.params()], "stale": 0}
    for _ in range(epochs):
        with Tape() as tape:
            logits = clf.logits(a_hat, Tensor(x))
            loss = _cross_entropy(logits, onehot, sel)
            tape.backward(loss)
        opt.step()
        opt.zero_grad()
        preds_val = np.argmax(logits.value[split.val], axis=1)
        f1 = f1_scores(preds_val, graph.labels[split.val], graph.num_classes).micro
        if f1 > best["f1"]:
            best.update(f1=f1, params=[p.value.copy() for p in clf.params()], stale=0)
        else:
            best["stale"] += 1
            if best["stale"] >= patience:
                break
    for p, v in zip(clf.params(), best["params"]):
        p.value = v

    logits = clf.logits(a_hat, Tensor(x)).value
    preds = np.argmax(logits[split.test], axis=1)
    truths = graph.labels[split.test]
    rep = f1_scores(preds, truths, graph.num_classes)
    degrees = compute_degrees(graph)[split.test]
    deg = degree_report(preds, truths, degrees, reference)
    return EvalResult(micro_f1=rep.micro, macro_f1=rep.macro, degree=deg,
                      predictions=preds, probe=None)
