"""Linear-probe evaluation, F1 metrics, degree-grouped reports, exports.

The probe is a multinomial logistic regression trained by full-batch
gradient descent with backtracking line search from a zero initialization,
which makes every evaluation deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import DataSplit, Graph, atomic_write_text, compute_degrees
from .losses import HarConfig, build_masks, similarity_bundle, top_k_hard_negatives

DEGREE_BUCKETS = list(range(8))  # individual buckets 0..7, then "8+"


class ProbeDivergenceError(RuntimeError):
    def __init__(self, iteration: int):
        super().__init__(f"probe fit diverged at iteration {iteration}")
        self.iteration = iteration


@dataclass
class LogisticProbe:
    weights: np.ndarray
    bias: np.ndarray
    converged: bool
    iterations: int
    losses: list[float] = field(default_factory=list)

    def predict_logits(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weights + self.bias

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_logits(x), axis=1)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def probe_loss_grad(w: np.ndarray, b: np.ndarray, x: np.ndarray, onehot: np.ndarray,
                    l2: float):
    n = x.shape[0]
    p = _softmax(x @ w + b)
    # cross-entropy against the true class, plus l2 on the weight matrix
    loss = -np.log(np.maximum((p * onehot).sum(axis=1), 1e-300)).mean() + 0.5 * l2 * (w * w).sum()
    diff = (p - onehot) / n
    return loss, x.T @ diff + l2 * w, diff.sum(axis=0)


def fit_probe(embeddings: np.ndarray, labels: np.ndarray, l2: float = 1e-4,
              max_iter: int = 500, tol: float = 1e-6) -> LogisticProbe:
    """Multinomial logistic regression; stops when the gradient norm drops
    below ``tol`` or after ``max_iter`` line-searched descent steps."""
    x = np.asarray(embeddings, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.shape[0] != y.shape[0]:
        raise ValueError("embeddings and labels disagree on row count")
    classes = int(y.max()) + 1
    if np.unique(y).size < 2:
        raise ValueError("probe needs at least two classes present")
    onehot = np.zeros((y.size, classes))
    onehot[np.arange(y.size), y] = 1.0

    w = np.zeros((x.shape[1], classes))
    b = np.zeros(classes)
    losses: list[float] = []
    converged = False
    it = 0
    loss, gw, gb = probe_loss_grad(w, b, x, onehot, l2)
    for it in range(1, max_iter + 1):
        if not np.isfinite(loss):
            raise ProbeDivergenceError(it)
        losses.append(loss)
        gnorm2 = (gw * gw).sum() + (gb * gb).sum()
        if np.sqrt(gnorm2) < tol:
            converged = True
            break
        step = 1.0
        while step > 1e-20:
            w_new = w - step * gw
            b_new = b - step * gb
            new_loss, new_gw, new_gb = probe_loss_grad(w_new, b_new, x, onehot, l2)
            if new_loss <= loss - 1e-4 * step * gnorm2:
                break
            step *= 0.5
        w, b, loss, gw, gb = w_new, b_new, new_loss, new_gw, new_gb
    return LogisticProbe(weights=w, bias=b, converged=converged, iterations=it, losses=losses)


@dataclass
class F1Report:
    micro: float
    macro: float
    per_class: np.ndarray  # rows (precision, recall, f1) per class


def f1_scores(predictions: np.ndarray, truths: np.ndarray,
              num_classes: int | None = None) -> F1Report:
    """Confusion-matrix precision/recall/F1; micro pools TP/FP/FN over
    classes (equals accuracy for single-label prediction), macro averages
    the per-class F1, with 0/0 ratios defined as 0."""
    pred = np.asarray(predictions, dtype=np.int64)
    true = np.asarray(truths, dtype=np.int64)
    if pred.shape != true.shape or pred.ndim != 1:
        raise ValueError("predictions and truths must be equal-length vectors")
    if pred.size == 0:
        raise ValueError("empty input")
    c = num_classes if num_classes else int(max(pred.max(), true.max())) + 1
    conf = np.zeros((c, c), dtype=np.int64)
    np.add.at(conf, (true, pred), 1)
    tp = np.diag(conf).astype(np.float64)
    fp = conf.sum(axis=0) - tp
    fn = conf.sum(axis=1) - tp
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(tp + fp > 0, tp / (tp + fp), 0.0)
        recall = np.where(tp + fn > 0, tp / (tp + fn), 0.0)
        f1 = np.where(precision + recall > 0,
                      2 * precision * recall / (precision + recall), 0.0)
    micro_tp, micro_fp, micro_fn = tp.sum(), fp.sum(), fn.sum()
    micro_p = micro_tp / (micro_tp + micro_fp)
    micro_r = micro_tp / (micro_tp + micro_fn)
    if micro_p == micro_r:
        micro = micro_p  # single-label case: pooled FP == FN, so F1 is accuracy
    elif micro_p + micro_r:
        micro = 2 * micro_p * micro_r / (micro_p + micro_r)
    else:
        micro = 0.0
    return F1Report(micro=float(micro), macro=float(f1.mean()),
                    per_class=np.stack([precision, recall, f1], axis=1))


@dataclass
class DegreeBucketRow:
    bucket: str
    count: int
    f1: float | None
    delta_pct: float | None


@dataclass
class DegreeReport:
    rows: list[DegreeBucketRow]

    def bucket_f1(self, bucket: str) -> float | None:
        for row in self.rows:
            if row.bucket == bucket:
                return row.f1
        return None


def bucket_of(degree: int) -> str:
    return str(degree) if degree < 8 else "8+"


def degree_report(predictions: np.ndarray, truths: np.ndarray, degrees: np.ndarray,
                  reference: dict[str, float] | None = None) -> DegreeReport:
    """Micro-F1 per degree bucket 0..7 plus an aggregated 8+ bucket.

    ``reference`` maps bucket label to a baseline F1; deltas are reported in
    percentage points. Empty buckets get count 0 and no F1.
    """
    pred = np.asarray(predictions)
    true = np.asarray(truths)
    deg = np.asarray(degrees)
    if not (pred.shape == true.shape == deg.shape):
        raise ValueError("inputs must align on the test index set")
    rows = []
    labels = [str(b) for b in DEGREE_BUCKETS] + ["8+"]
    for label in labels:
        sel = (deg >= 8) if label == "8+" else (deg == int(label))
        count = int(sel.sum())
        if count == 0:
            rows.append(DegreeBucketRow(label, 0, None, None))
            continue
        f1 = f1_scores(pred[sel], true[sel]).micro
        delta = None
        if reference is not None and reference.get(label) is not None:
            delta = (f1 - reference[label]) * 100.0
        rows.append(DegreeBucketRow(label, count, f1, delta))
    return DegreeReport(rows)


def write_degree_csv(report: DegreeReport, path: str) -> None:
    lines = ["degree,count,f1,delta_pct"]
    for row in report.rows:
        f1 = "" if row.f1 is None else repr(row.f1)
        delta = "" if row.delta_pct is None else repr(row.delta_pct)
        lines.append(f"{row.bucket},{row.count},{f1},{delta}")
    atomic_write_text(path, "\n".join(lines) + "\n")


@dataclass
class EvalResult:
    micro_f1: float
    macro_f1: float
    degree: DegreeReport
    predictions: np.ndarray
    probe: LogisticProbe | None


def evaluate_embeddings(embeddings: np.ndarray, graph: Graph, split: DataSplit,
                        probe_l2: float = 1e-4, probe_max_iter: int = 500,
                        probe_tol: float = 1e-6,
                        reference: dict[str, float] | None = None,
                        eval_nodes: np.ndarray | None = None) -> EvalResult:
    """Fit the probe on labelled-train embeddings and score ``eval_nodes``
    (default: the test set) globally and per degree bucket."""
    train_idx = split.train_labelled
    nodes = split.test if eval_nodes is None else eval_nodes
    probe = fit_probe(embeddings[train_idx], graph.labels[train_idx],
                      l2=probe_l2, max_iter=probe_max_iter, tol=probe_tol)
    preds = probe.predict(embeddings[nodes])
    truths = graph.labels[nodes]
    rep = f1_scores(preds, truths, num_classes=graph.num_classes)
    degrees = compute_degrees(graph)[nodes]
    deg_rep = degree_report(preds, truths, degrees, reference)
    return EvalResult(micro_f1=rep.micro, macro_f1=rep.macro, degree=deg_rep,
                      predictions=preds, probe=probe)


def evaluate_checkpoint(model, graph: Graph, split: DataSplit,
                        probe_l2: float = 1e-4, probe_max_iter: int = 500,
                        probe_tol: float = 1e-6,
                        reference: dict[str, float] | None = None) -> EvalResult:
    """Embed the full unaugmented graph with the frozen encoder, then probe."""
    embeddings = model.embed(graph.edges, graph.num_nodes, graph.features)
    return evaluate_embeddings(embeddings, graph, split, probe_l2, probe_max_iter,
                               probe_tol, reference)


def export_embeddings(model, graph: Graph, path: str) -> np.ndarray:
    """CSV of node id, label, degree, and the embedding row; floats use the
    shortest representation that round-trips exactly."""
    emb = model.embed(graph.edges, graph.num_nodes, graph.features)
    degrees = compute_degrees(graph)
    header = "node_id,label,degree," + ",".join(f"e_{i}" for i in range(emb.shape[1]))
    lines = [header]
    for i in range(graph.num_nodes):
        vals = ",".join(repr(float(v)) for v in emb[i])
        lines.append(f"{i},{graph.labels[i]},{degrees[i]},{vals}")
    atomic_write_text(path, "\n".join(lines) + "\n")
    return emb


def hard_negative_rows(z: np.ndarray, labels: np.ndarray, degrees: np.ndarray,
                       k: int, config: HarConfig, rng: np.random.Generator):
    """Top-k hard negatives per anchor plus a uniformly drawn baseline
    negative degree per emitted row (the unweighted reference)."""
    masks = build_masks(labels)
    bundle = similarity_bundle(z, z, masks, config)
    rows = []
    for anchor in range(z.shape[0]):
        neg_row = masks.mask_neg[anchor]
        candidates = np.flatnonzero(neg_row)
        if candidates.size == 0:
            continue
        top = top_k_hard_negatives(bundle.s_neg[anchor], neg_row, k)
        for rank, j in enumerate(top, start=1):
            baseline = int(degrees[rng.choice(candidates)])
            rows.append((anchor, rank, int(j), int(degrees[j]),
                         float(bundle.s_neg[anchor, j]), baseline))
    return rows


def export_hard_negative_degrees(models_by_epoch: dict, graph: Graph, k: int,
                                 path: str, config: HarConfig, seed: int = 0) -> None:
    """One CSV row per (epoch checkpoint, anchor, rank): the hard negative,
    its degree, the kernel similarity, and a uniform-negative baseline degree.

    Anchors are the labelled nodes; similarities come from the projected
    embeddings of the unaugmented graph.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    degrees = compute_degrees(graph)
    labelled = np.flatnonzero(graph.labels >= 0)
    lines = ["epoch,anchor_node,rank,negative_node,negative_degree,similarity,baseline_degree"]
    for epoch in sorted(models_by_epoch):
        model = models_by_epoch[epoch]
        rng = np.random.default_rng([seed, int(epoch)])
        z = model.project(graph.edges, graph.num_nodes, graph.features)[labelled]
        rows = hard_negative_rows(z, graph.labels[labelled], degrees[labelled],
                                  k, config, rng)
        for anchor, rank, j, deg_j, sim, baseline in rows:
            lines.append(
                f"{epoch},{labelled[anchor]},{rank},{labelled[j]},{deg_j},{repr(sim)},{baseline}"
            )
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_global_csv(path: str, rows: list[dict]) -> None:
    header = "model,dataset,encoder,r,seed,micro_f1,macro_f1"
    lines = [header]
    for row in rows:
        lines.append(
            f"{row['model']},{row['dataset']},{row['encoder']},{row['r']},{row['seed']},"
            f"{repr(row['micro_f1'])},{repr(row['macro_f1'])}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")
