"""Two-step semi-supervised training.

Step 1 pre-trains encoder+projector with the configured contrastive loss on
the induced subgraph of the labelled train nodes. Step 2 predicts
pseudo-labels for the unlabelled train nodes with a linear probe on the
frozen encoder, then fine-tunes on their induced subgraph, validating after
every round and stopping once the best validation F1 stalls for
``patience`` consecutive rounds. The checkpoint of the best round wins.

True labels are never mutated; pseudo-labels travel as a separate array.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .augment import AugmentationConfig, augment_pair
from .autodiff import NonFiniteError, Tape, Tensor
from .encoders import ContrastiveModel, build_model, save_checkpoint
from .evaluation import EvalResult, evaluate_checkpoint, evaluate_embeddings, fit_probe
from .graphs import DataSplit, Graph, atomic_write_text, induced_subgraph
from .losses import HarConfig, debias_loss, grace_loss, har_loss, scl_loss
from .optim import Adam

FINETUNE_STREAM_OFFSET = 1_000_000  # keeps fine-tune masks off the pretrain streams


class ConfigError(ValueError):
    pass


class TrainingDivergedError(RuntimeError):
    def __init__(self, phase: str, epoch: int):
        super().__init__(f"non-finite loss during {phase} at epoch {epoch}")
        self.phase = phase
        self.epoch = epoch


ENCODERS = ("gcn", "gat")
LOSSES = ("har", "grace", "scl", "debias")
ACTIVATIONS = ("relu", "prelu", "elu")


@dataclass
class TrainConfig:
    dataset: str = "dataset"
    encoder: str = "gcn"
    loss: str = "har"
    tau: float = 0.4
    alpha: float = 1.0
    beta: float = 1.0
    tau_plus: float | None = None
    p_e: float = 0.3
    p_f: float = 0.3
    hidden: int = 128
    projector: int = 128
    activation: str = "relu"
    projector_activation: str = "elu"
    heads: int = 8
    slope: float = 0.2
    epochs: int = 300
    lr: float = 5e-4
    weight_decay: float = 1e-5
    patience: int = 20
    r: float = 0.0
    seed: int = 0
    exclude_intra_self: bool = False
    per_row_minmax: bool = False
    neg_mean_negatives_only: bool = False
    finetune_full_train: bool = False
    probe_l2: float = 1e-4
    probe_max_iter: int = 500
    probe_tol: float = 1e-6
    checkpoint_epochs: tuple = ()

    def validate(self) -> "TrainConfig":
        if self.encoder not in ENCODERS:
            raise ConfigError(f"encoder must be one of {ENCODERS}, got {self.encoder!r}")
        if self.loss not in LOSSES:
            raise ConfigError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.tau <= 0:
            raise ConfigError("tau must be positive")
        if not (0 < self.alpha <= 1):
            raise ConfigError("alpha out of (0,1]")
        if not (0 < self.beta <= 1):
            raise ConfigError("beta out of (0,1]")
        if self.tau_plus is not None and not (0 < self.tau_plus < 1):
            raise ConfigError("tau_plus out of (0,1)")
        if not (0 <= self.p_e <= 0.4) or not (0 <= self.p_f <= 0.4):
            raise ConfigError("drop rates out of [0, 0.4]")
        if self.hidden < 1 or self.projector < 1:
            raise ConfigError("hidden and projector widths must be at least 1")
        if self.activation not in ACTIVATIONS or self.projector_activation not in ACTIVATIONS:
            raise ConfigError(f"activations must be one of {ACTIVATIONS}")
        if self.encoder == "gat" and self.hidden % self.heads:
            raise ConfigError("hidden must be divisible by heads for the gat encoder")
        if self.epochs < 0:
            raise ConfigError("epochs must be nonnegative")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay must be nonnegative")
        if self.patience < 1:
            raise ConfigError("patience must be at least 1")
        if not (0 <= self.r < 1):
            raise ConfigError("r out of [0, 1)")
        return self

    def har_config(self) -> HarConfig:
        return HarConfig(tau=self.tau, alpha=self.alpha, beta=self.beta,
                         tau_plus=self.tau_plus,
                         exclude_intra_self=self.exclude_intra_self,
                         per_row_minmax=self.per_row_minmax,
                         neg_mean_negatives_only=self.neg_mean_negatives_only)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "checkpoint_epochs":
                v = ",".join(str(e) for e in v)
            elif v is None:
                v = ""
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


def _parse_value(name: str, kind, raw: str):
    raw = raw.strip()
    if name == "checkpoint_epochs":
        return tuple(int(p) for p in raw.split(",") if p.strip()) if raw else ()
    if name == "tau_plus":
        return None if raw == "" else float(raw)
    if kind is bool or kind == "bool":
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    try:
        if kind is int or kind == "int":
            return int(raw)
        if kind is float or kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from None
    return raw


def parse_config_text(text: str) -> TrainConfig:
    """Parse the flat "key = value" run-config format ('#' starts a comment)."""
    fields = {f.name: f for f in dataclasses.fields(TrainConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in fields:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        f = fields[key]
        base = TrainConfig()
        kind = type(getattr(base, f.name)) if getattr(base, f.name) is not None else float
        values[key] = _parse_value(key, kind, raw)
    return TrainConfig(**values).validate()


def load_config(path: str) -> TrainConfig:
    if not os.path.isfile(path):
        raise ConfigError(f"missing config file: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


@dataclass
class RunRecord:
    phase: str
    seed: int
    epoch_losses: list = field(default_factory=list)
    val_f1: list = field(default_factory=list)
    best_f1: float | None = None
    best_epoch: int | None = None
    best_f1_history: list = field(default_factory=list)
    wall_clock_sec: float = 0.0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def make_loss_fn(config: TrainConfig, num_classes: int):
    if config.loss == "har":
        hc = config.har_config()
        return lambda z1, z2, labels: har_loss(z1, z2, labels, hc, num_classes)
    if config.loss == "grace":
        return lambda z1, z2, labels: grace_loss(z1, z2, config.tau)
    if config.loss == "scl":
        return lambda z1, z2, labels: scl_loss(z1, z2, labels, config.tau)
    if config.loss == "debias":
        tp = config.tau_plus if config.tau_plus is not None else 1.0 / max(num_classes, 2)
        return lambda z1, z2, labels: debias_loss(z1, z2, config.tau, tp)
    raise ConfigError(f"unknown loss: {config.loss!r}")


def _train_epochs(model: ContrastiveModel, graph: Graph, labels: np.ndarray,
                  config: TrainConfig, num_epochs: int, stream_offset: int,
                  phase: str, record: RunRecord,
                  epoch_hook=None, snapshot_epochs: dict | None = None) -> None:
    """Full-graph contrastive steps with fresh masks every epoch."""
    loss_fn = make_loss_fn(config, graph.num_classes)
    opt = Adam(model.params(), lr=config.lr, weight_decay=config.weight_decay)
    aug = AugmentationConfig(p_e=config.p_e, p_f=config.p_f, seed=config.seed)
    n = graph.num_nodes
    for epoch in range(num_epochs):
        v1, v2 = augment_pair(graph, aug, epoch=stream_offset + epoch)
        s1 = model.encoder.build_structure(v1.edges, n)
        s2 = model.encoder.build_structure(v2.edges, n)
        try:
            with Tape() as tape:
                z1 = model.projector.forward(model.encoder.forward(s1, Tensor(v1.features)))
                z2 = model.projector.forward(model.encoder.forward(s2, Tensor(v2.features)))
                loss = loss_fn(z1, z2, labels)
                tape.backward(loss)
        except NonFiniteError as exc:
            raise TrainingDivergedError(phase, epoch + 1) from exc
        opt.step()
        opt.zero_grad()
        record.epoch_losses.append(float(loss.value[0, 0]))
        if snapshot_epochs is not None and (epoch + 1) in snapshot_epochs:
            snapshot_epochs[epoch + 1] = _snapshot(model)
        if epoch_hook is not None and epoch_hook(epoch):
            break


def _snapshot(model: ContrastiveModel) -> list:
    return [p.value.copy() for p in model.params()]


def _restore(model: ContrastiveModel, snapshot: list) -> None:
    for p, v in zip(model.params(), snapshot):
        p.value = v.copy()


def pretrain(graph_labelled: Graph, config: TrainConfig,
             snapshot_epochs: dict | None = None) -> tuple[ContrastiveModel, RunRecord]:
    """Step 1: contrastive training on the labelled subgraph for the fixed
    epoch budget (no early stopping here)."""
    if config.loss in ("har", "scl") and np.any(graph_labelled.labels < 0):
        raise ValueError("pretrain requires a label on every node of the labelled split")
    model = build_model(config.encoder, graph_labelled.num_features, config.hidden,
                        config.projector, config.activation, config.projector_activation,
                        heads=config.heads, slope=config.slope, seed=config.seed)
    record = RunRecord(phase="pretrain", seed=config.seed)
    start = time.perf_counter()
    _train_epochs(model, graph_labelled, graph_labelled.labels, config,
                  config.epochs, 0, "pretrain", record, snapshot_epochs=snapshot_epochs)
    record.wall_clock_sec = time.perf_counter() - start
    return model, record


def generate_pseudo_labels(model: ContrastiveModel, graph_labelled: Graph,
                           graph_unlabelled: Graph, config: TrainConfig) -> np.ndarray:
    """Probe fitted on frozen labelled embeddings predicts a class for every
    unlabelled node; empty unlabelled split yields an empty vector."""
    if graph_unlabelled.num_nodes == 0:
        return np.zeros(0, dtype=np.int64)
    emb_l = model.embed(graph_labelled.edges, graph_labelled.num_nodes,
                        graph_labelled.features)
    probe = fit_probe(emb_l, graph_labelled.labels, l2=config.probe_l2,
                      max_iter=config.probe_max_iter, tol=config.probe_tol)
    emb_u = model.embed(graph_unlabelled.edges, graph_unlabelled.num_nodes,
                        graph_unlabelled.features)
    return probe.predict(emb_u)


def finetune(model: ContrastiveModel, graph_tune: Graph, tune_labels: np.ndarray,
             full_graph: Graph, split: DataSplit, config: TrainConfig) -> tuple[ContrastiveModel, RunRecord]:
    """Step 2: continue training on the pseudo-labelled subgraph; validate
    every round, keep the best round's weights, stop after ``patience``
    rounds without improvement (capped at the pretrain epoch budget)."""
    record = RunRecord(phase="finetune", seed=config.seed)
    start = time.perf_counter()
    best = {"f1": -np.inf, "epoch": None, "params": _snapshot(model), "stale": 0}

    def after_epoch(epoch: int) -> bool:
        emb = model.embed(full_graph.edges, full_graph.num_nodes, full_graph.features)
        res = evaluate_embeddings(emb, full_graph, split, config.probe_l2,
                                  config.probe_max_iter, config.probe_tol,
                                  eval_nodes=split.val)
        f1 = res.micro_f1
        record.val_f1.append(f1)
        if f1 > best["f1"]:
            best.update(f1=f1, epoch=epoch + 1, params=_snapshot(model), stale=0)
        else:
            best["stale"] += 1
        record.best_f1_history.append(best["f1"])
        return best["stale"] >= config.patience

    _train_epochs(model, graph_tune, tune_labels, config, config.epochs,
                  FINETUNE_STREAM_OFFSET, "finetune", record, epoch_hook=after_epoch)
    _restore(model, best["params"])
    record.best_f1 = None if best["epoch"] is None else best["f1"]
    record.best_epoch = best["epoch"]
    record.wall_clock_sec = time.perf_counter() - start
    return model, record


def run_sharp(graph: Graph, split: DataSplit, config: TrainConfig,
              out_dir: str | None = None) -> tuple[ContrastiveModel, dict, EvalResult]:
    """Pretrain, pseudo-label, fine-tune, evaluate on the test set.

    With r = 0 the unlabelled split is empty and fine-tuning is skipped, so
    the final checkpoint equals the pretrain output.
    """
    config.validate()
    sub_l, _ = induced_subgraph(graph, split.train_labelled)
    snapshots = {e: None for e in config.checkpoint_epochs} if config.checkpoint_epochs else None
    model, pre_record = pretrain(sub_l, config, snapshot_epochs=snapshots)
    pretrain_params = _snapshot(model)

    tune_record = None
    pseudo = None
    if split.train_unlabelled.size:
        sub_u, _ = induced_subgraph(graph, split.train_unlabelled)
        pseudo = generate_pseudo_labels(model, sub_l, sub_u, config)
        if config.finetune_full_train:
            train_all = np.sort(np.concatenate([split.train_labelled, split.train_unlabelled]))
            sub_t, ids_t = induced_subgraph(graph, train_all)
            mixed = np.full(sub_t.num_nodes, -1, dtype=np.int64)
            pos_l = np.searchsorted(ids_t, split.train_labelled)
            pos_u = np.searchsorted(ids_t, np.sort(split.train_unlabelled))
            mixed[pos_l] = graph.labels[split.train_labelled]
            mixed[pos_u] = pseudo
            model, tune_record = finetune(model, sub_t, mixed, graph, split, config)
        else:
            model, tune_record = finetune(model, sub_u, pseudo, graph, split, config)

    result = evaluate_checkpoint(model, graph, split, config.probe_l2,
                                 config.probe_max_iter, config.probe_tol)

    records = {
        "pretrain": pre_record.to_dict(),
        "finetune": tune_record.to_dict() if tune_record else None,
        "eval": {"micro_f1": result.micro_f1, "macro_f1": result.macro_f1},
    }
    if out_dir is not None:
        os.makedirs(os.path.join(out_dir, "reports"), exist_ok=True)
        save_checkpoint(os.path.join(out_dir, "checkpoint.bin"), model)
        pre_model_copy = model
        current = _snapshot(model)
        _restore(pre_model_copy, pretrain_params)
        save_checkpoint(os.path.join(out_dir, "pretrain.bin"), pre_model_copy)
        _restore(pre_model_copy, current)
        if snapshots:
            ck_dir = os.path.join(out_dir, "checkpoints")
            os.makedirs(ck_dir, exist_ok=True)
            for epoch, snap in snapshots.items():
                if snap is None:
                    continue
                _restore(pre_model_copy, snap)
                save_checkpoint(os.path.join(ck_dir, f"epoch_{epoch}.bin"), pre_model_copy)
            _restore(pre_model_copy, current)
        atomic_write_text(os.path.join(out_dir, "config.resolved"), config.to_text())
        atomic_write_text(os.path.join(out_dir, "runrecord.json"),
                          json.dumps(records, sort_keys=True, indent=1) + "\n")
    return model, records, result
