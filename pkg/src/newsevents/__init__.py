"""News event detection: embedding pipelines, clustering algorithms, and
stability-based cluster validation, with post-detection event reports."""

from .cluster import (
    ClusteringResult,
    agglomerative,
    assign_to_clusters,
    elbow_select_k,
    gmm_em,
    gmm_select_k_bic,
    hdbscan,
    kmeans,
    pam,
)
from .corpus import (
    CleanDocument,
    Corpus,
    Document,
    PartitionPlan,
    load_corpus,
    parse_gkg,
    preprocess,
    split_partitions,
)
from .dimred import PcaModel, UmapParams, fit_curve_params, pca_fit, pca_transform, umap_fit_transform
from .embed import (
    EmbeddingMatrix,
    Keyword,
    TfidfModel,
    WordVectorTable,
    average_word_embedding,
    extract_keywords,
    fit_tfidf,
    load_word_vectors,
    provider_embed,
    refine_keywords,
    tfidf_transform,
)
from .llm_client import ProviderClient, ProviderConfig, mock_embed
from .validate import CsaiInputs, CsaiReport, calinski_harabasz, csai, silhouette, stability_profile

__version__ = "0.1.0"
