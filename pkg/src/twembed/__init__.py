"""Clustering chains, stochastic balanced cuts and bounded-treewidth embeddings."""
from .chain import ClusteringChain, build_chain, verify_chain
from .cops import CopDecomposition, build_cop_decomposition, verify_cop_decomposition
from .cuts import (
    ContractionSequence,
    CutFamily,
    build_cut_family,
    contraction_sequence_from_chain,
    grid_contraction_sequence,
    net_points,
    sample_cut,
    verify_contraction_sequence,
    verify_cut,
)
from .embed import EmbeddingResult, embed, measure_distortion, verify_embedding
from .graph import GraphError, WeightedGraph, normalize
from .rng import RandomSource
from .shortcut import ShortcutPartition, shortcut_partition, verify_shortcut_partition
from .treewidth import TreeDecomposition, exact_treewidth, weighted_balanced_separator

__version__ = "0.1.0"
