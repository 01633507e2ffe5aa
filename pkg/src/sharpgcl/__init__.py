"""Degree-bias-aware graph contrastive learning.

Core pieces: a neutral graph dataset format, Bernoulli edge/feature view
augmentation, a small reverse-mode autodiff engine with numba-accelerated
sparse kernels, GCN/GAT encoders, hardness-adaptive reweighted contrastive
training with a two-step semi-supervised pipeline, and a degree-grouped
evaluation harness.
"""

from .augment import AugmentationConfig, AugmentedView, augment_pair, mask_edges, mask_features
from .autodiff import NonFiniteError, ShapeError, Tape, Tensor
from .encoders import (ContrastiveModel, GatEncoder, GcnEncoder, MlpProjector,
                       build_model, glorot, load_checkpoint, normalize_adjacency,
                       save_checkpoint)
from .evaluation import (DegreeReport, LogisticProbe, degree_report,
                         evaluate_checkpoint, export_embeddings, f1_scores,
                         fit_probe)
from .graphs import (DataError, DataSplit, Graph, build_graph, compute_degrees,
                     graphs_equal, induced_subgraph, load_graph, load_splits,
                     save_graph, save_splits, split_nodes)
from .losses import (HarConfig, MaskPair, SimilarityBundle, build_masks,
                     cosine_sim, debias_loss, ftau, grace_loss, har_loss,
                     har_loss_np, har_node_losses, har_node_losses_np,
                     negative_term, positive_term, scl_loss,
                     similarity_bundle, top_k_hard_negatives)
from .optim import Adam, Sgd
from .pipeline import (ConfigError, RunRecord, TrainConfig,
                       TrainingDivergedError, finetune, generate_pseudo_labels,
                       load_config, parse_config_text, pretrain, run_sharp)

__version__ = "0.1.0"
