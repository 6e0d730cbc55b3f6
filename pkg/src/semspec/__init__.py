"""Semantic specialization of word vector spaces.

Injects synonym/antonym knowledge into pre-trained word vectors by
margin-based fine-tuning of the constraint-covered subspace, then learns
a global mapping network with adversarial losses so the whole vocabulary
benefits, and evaluates the result on word-similarity benchmarks.
"""

from .attract_repel import ArConfig, run_attract_repel
from .constraints import ConstraintSet, filter_for_setting, load_constraint_pairs, merge_and_deconflict
from .embeddings import SeenVocab, VectorSpace, cosine, load_embeddings, save_embeddings, unit_normalize
from .errors import DivergenceError, SemspecError, ValidationError
from .evaluation import SimilarityDataset, evaluate_similarity, load_similarity_dataset, spearman_rho
from .harness import SynthTask, make_cluster_task, make_linear_task
from .neuralnet import Mlp, OptimizerState, finite_diff_check, mlp_forward, mlp_init
from .postspec import (
    MappingPairs,
    PostSpecConfig,
    apply_global_mapping,
    gan_losses,
    train_post_specializer,
    wgan_losses,
)

__version__ = "0.1.0"

__all__ = [
    "ArConfig",
    "ConstraintSet",
    "DivergenceError",
    "MappingPairs",
    "Mlp",
    "OptimizerState",
    "PostSpecConfig",
    "SeenVocab",
    "SemspecError",
    "SimilarityDataset",
    "SynthTask",
    "ValidationError",
    "VectorSpace",
    "apply_global_mapping",
    "cosine",
    "evaluate_similarity",
    "filter_for_setting",
    "finite_diff_check",
    "gan_losses",
    "load_constraint_pairs",
    "load_embeddings",
    "load_similarity_dataset",
    "make_cluster_task",
    "make_linear_task",
    "merge_and_deconflict",
    "mlp_forward",
    "mlp_init",
    "run_attract_repel",
    "save_embeddings",
    "spearman_rho",
    "train_post_specializer",
    "unit_normalize",
    "wgan_losses",
]
