from .agglomerative import LINKAGES, agglomerative, linkage_matrix
from .gmm import gmm_em, gmm_responsibilities, gmm_select_k_bic
from .hdbscan import hdbscan, mutual_reachability, prim_mst
from .kmeans import chord_elbow, elbow_select_k, kmeans
from .pam import pam
from .result import (
    ClusteringResult,
    CondensedTree,
    GmmModel,
    KmeansDiagnostics,
    MergeTable,
    WssCurve,
    as_values,
    assign_to_clusters,
)

__all__ = [
    "LINKAGES",
    "ClusteringResult",
    "CondensedTree",
    "GmmModel",
    "KmeansDiagnostics",
    "MergeTable",
    "WssCurve",
    "agglomerative",
    "as_values",
    "assign_to_clusters",
    "chord_elbow",
    "elbow_select_k",
    "gmm_em",
    "gmm_responsibilities",
    "gmm_select_k_bic",
    "hdbscan",
    "kmeans",
    "linkage_matrix",
    "mutual_reachability",
    "pam",
    "prim_mst",
]
