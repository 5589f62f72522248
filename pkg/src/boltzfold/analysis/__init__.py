"""Topic models, spectral clustering, ridge attribution and t-SNE."""

from .attribution import (AttributionModel, ClusterAnomalyReport, RestrictedAnalysis, cluster_delta, recommend,
                          restrict_and_rerun, ridge_fit)
from .clustering import Clustering, knn_similarity, laplacian, silhouette_sweep, spectral_clustering
from .topics import TopicModel, nmf
from .tsne import TsneResult, tsne

__all__ = [
    "AttributionModel", "ClusterAnomalyReport", "Clustering", "RestrictedAnalysis", "TopicModel", "TsneResult",
    "cluster_delta", "knn_similarity", "laplacian", "nmf", "recommend", "restrict_and_rerun", "ridge_fit",
    "silhouette_sweep", "spectral_clustering", "tsne",
]
