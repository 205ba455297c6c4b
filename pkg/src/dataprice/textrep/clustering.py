"""Topic clusters over document vectors with c-TF-IDF keyword extraction.

Pipeline: centered principal components for dimensionality reduction,
k-means for clustering, and class-based TF-IDF over cluster-merged
documents for per-topic keywords. Document vectors are pluggable (average
pooled embeddings by default, or vectors loaded from file).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tokenizer import tokenize
from .vocab import Vocabulary


@dataclass
class ClusterTopics:
    labels: np.ndarray          # per-document cluster id, -1 marks outliers
    membership: np.ndarray      # (N, n_clusters) probabilities, rows sum to 1
    keyword_weights: np.ndarray  # (n_clusters, V) c-TF-IDF scores
    terms: list[str]
    centroids: np.ndarray = field(default=None)

    def __post_init__(self):
        if np.max(np.abs(self.membership.sum(axis=1) - 1.0)) > 1e-8:
            raise ValueError("membership rows must sum to 1")
        if not np.isfinite(self.keyword_weights).all():
            raise ValueError("keyword weights must be finite")

    def top_keywords(self, cluster: int, k: int = 10) -> list[str]:
        order = np.argsort(-self.keyword_weights[cluster], kind="stable")
        return [self.terms[i] for i in order[:k]]


class PCAReducer:
    """Centered principal-component projection, fitted on training vectors
    so held-out vectors can be reduced consistently."""

    def __init__(self, mean: np.ndarray, components: np.ndarray | None):
        self.mean = mean
        self.components = components  # (r, d) rows, or None for identity

    @staticmethod
    def fit(vectors: np.ndarray, r: int) -> "PCAReducer":
        X = np.asarray(vectors, dtype=np.float64)
        mean = X.mean(axis=0)
        if r >= min(X.shape):
            return PCAReducer(mean, None)
        _, _, vt = np.linalg.svd(X - mean, full_matrices=False)
        return PCAReducer(mean, vt[:r])

    def transform(self, vectors: np.ndarray) -> np.ndarray:
        Xc = np.asarray(vectors, dtype=np.float64) - self.mean
        return Xc if self.components is None else Xc @ self.components.T


def reduce_dimensions(vectors: np.ndarray, r: int) -> np.ndarray:
    """Project onto the top r centered principal components."""
    return PCAReducer.fit(vectors, r).transform(vectors)


def membership_probabilities(reduced: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Softmax of negative centroid distances, one row per document."""
    dist = np.linalg.norm(reduced[:, None, :] - centroids[None, :, :], axis=2)
    scores = -(dist - dist.min(axis=1, keepdims=True))
    expd = np.exp(scores)
    return expd / expd.sum(axis=1, keepdims=True)


def kmeans(X: np.ndarray, n_clusters: int, seed: int = 0,
           max_iter: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm with seeded initial centroids drawn from the data.
    Returns (labels, centroids)."""
    n = X.shape[0]
    if n_clusters > n:
        raise ValueError("n_clusters exceeds number of documents")
    rng = np.random.default_rng(seed)
    centroids = X[rng.choice(n, size=n_clusters, replace=False)].copy()
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        dist = np.linalg.norm(X[:, None, :] - centroids[None, :, :], axis=2)
        new_labels = np.argmin(dist, axis=1)
        if np.array_equal(new_labels, labels) and _ > 0:
            break
        labels = new_labels
        for c in range(n_clusters):
            mask = labels == c
            if mask.any():
                centroids[c] = X[mask].mean(axis=0)
    return labels, centroids


def ctfidf(cluster_token_counts: np.ndarray) -> np.ndarray:
    """Class-based TF-IDF: weight(t, c) = tf_tc * ln(1 + A / tf_t), where
    tf_t sums the term over all cluster-merged documents and A is the
    average token count of a cluster-merged document."""
    counts = np.asarray(cluster_token_counts, dtype=np.float64)
    tf_t = counts.sum(axis=0)
    A = counts.sum() / counts.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(tf_t > 0, np.log1p(A / np.where(tf_t > 0, tf_t, 1.0)), 0.0)
    return counts * factor[None, :]


def cluster_topics(doc_vectors: np.ndarray, corpus: list[str], vocab: Vocabulary,
                   reduce_dims: int = 5, n_clusters: int = 8,
                   min_cluster_size: int = 1, seed: int = 0,
                   outlier_quantile: float | None = None) -> ClusterTopics:
    """Cluster document vectors and extract per-cluster keywords.

    Documents farther from their centroid than the given quantile of
    within-cluster distances (when configured), or in clusters smaller than
    min_cluster_size, are labeled -1. Membership probabilities are the
    softmax of negative distances to the centroids and are computed for
    every document, outliers included.
    """
    X = np.asarray(doc_vectors, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("no document vectors")
    if len(corpus) != X.shape[0]:
        raise ValueError("corpus / vector count mismatch")
    Xr = reduce_dimensions(X, reduce_dims)
    labels, centroids = kmeans(Xr, n_clusters, seed=seed)

    dist = np.linalg.norm(Xr[:, None, :] - centroids[None, :, :], axis=2)
    own = dist[np.arange(len(labels)), labels]
    final = labels.copy()
    if outlier_quantile is not None:
        final[own > np.quantile(own, outlier_quantile)] = -1
    for c in range(n_clusters):
        if np.sum(final == c) < min_cluster_size:
            final[final == c] = -1

    membership = membership_probabilities(Xr, centroids)

    counts = np.zeros((n_clusters, len(vocab)))
    for text, lab in zip(corpus, labels):
        for t in tokenize(text):
            j = vocab.index.get(t)
            if j is not None:
                counts[lab, j] += 1.0
    return ClusterTopics(final, membership, ctfidf(counts), list(vocab.terms),
                         centroids)
