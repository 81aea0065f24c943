"""Augmentation-free self-supervised node embeddings on graphs.

The heavy lifting lives in the compiled extension; this package re-exports
the main operations: dataset generation and IO, training, positive discovery
primitives and the node-level evaluation protocols.
"""

from afgrl._core import (
    AfgrlConfigError,
    AfgrlDataError,
    AfgrlNumericError,
    Graph,
    afgrl_loss,
    correct_ratio_curve,
    generate_sbm,
    homogeneity,
    kmeans,
    kmeans_eval,
    knn_cross,
    linear_probe,
    load_graph,
    make_splits,
    nmi,
    normalize_adjacency,
    save_graph,
    set_max_threads,
    sim_at_n,
    symmetrized_loss,
    train,
)

__all__ = [
    "AfgrlConfigError",
    "AfgrlDataError",
    "AfgrlNumericError",
    "Graph",
    "afgrl_loss",
    "correct_ratio_curve",
    "generate_sbm",
    "homogeneity",
    "kmeans",
    "kmeans_eval",
    "knn_cross",
    "linear_probe",
    "load_graph",
    "make_splits",
    "nmi",
    "normalize_adjacency",
    "save_graph",
    "set_max_threads",
    "sim_at_n",
    "symmetrized_loss",
    "train",
]

__version__ = "0.1.0"
