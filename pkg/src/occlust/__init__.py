"""Occupation-embedding clustering with dimensionality reduction and
taxonomy-based validation."""

from .cluster import (
    CLUSTERERS,
    ClusterAssignment,
    DBSCAN,
    KMeans,
    KMedoids,
    SpectralClustering,
    dbscan_sweep,
    select_k_by_silhouette,
)
from .corpus import (
    EmbeddingSet,
    GroundTruth,
    OccupationRecord,
    distance_matrix,
    load_corpus,
    major_group_labels,
    normalize_rows,
    write_corpus,
)
from .linalg import EigenPairs, NeighborGraph, gen_eig, knn_graph, pairwise_distances, sym_eig
from .metrics import (
    MetricReport,
    PairConfusion,
    accuracy,
    adjusted_mutual_information,
    adjusted_rand_index,
    mutual_information,
    pair_confusion,
    silhouette_mean,
    silhouette_values,
    youden,
)
from .pipeline import (
    BestModelRow,
    ExperimentConfig,
    ExperimentResult,
    RunSettings,
    emit_report,
    reduction_dims,
    run_baseline,
    run_fixed_pipeline,
    run_silhouette_pipeline,
    select_best,
)
from .reduction import (
    REDUCTIONS,
    ClassicalMDS,
    LaplacianEigenmaps,
    LocalityPreservingProjection,
    LocallyLinearEmbedding,
    NeighborhoodPreservingEmbedding,
    PCA,
    ReductionSpec,
    TSNE,
)

__version__ = "0.1.0"
