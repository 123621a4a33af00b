"""Brute-force k-nearest-neighbour scoring and classification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from csmescreen.dataset import LabeledDataset


@dataclass(frozen=True)
class KnnConfig:
    """k-NN settings.

    ``normalize`` z-scores features with the training-set mean/SD before
    distances are taken. It is off by default and off throughout the pipeline.
    """

    k: int = 3
    distance: str = "euclidean"
    normalize: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.distance != "euclidean":
            raise ValueError(f"unsupported distance {self.distance!r}")


def squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact pairwise squared Euclidean distances, shape (len(a), len(b)).

    Summed per pair from explicit differences (not the Gram-matrix shortcut) so
    near-ties are ordered the same way regardless of which rows are involved.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.empty((a.shape[0], b.shape[0]))
    # bound the temporary at roughly 4M doubles
    step = max(1, 4_000_000 // max(1, b.shape[0] * max(1, a.shape[1])))
    for lo in range(0, a.shape[0], step):
        diff = a[lo : lo + step, None, :] - b[None, :, :]
        out[lo : lo + step] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def nearest_rows(dist: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the k smallest entries per row, ties to the lower index.

    Same result as the first k columns of a stable argsort, provided each row
    has at least k finite entries.
    """
    if k > 8:
        return np.argsort(dist, axis=1, kind="stable")[:, :k]
    # argmin returns the first occurrence, which is the lower-index tie-break
    d = np.array(dist, dtype=float, copy=True)
    rows = np.arange(d.shape[0])
    out = np.empty((d.shape[0], k), dtype=int)
    for j in range(k):
        idx = d.argmin(axis=1)
        out[:, j] = idx
        d[rows, idx] = np.inf
    return out


def _prepare(train: LabeledDataset, queries: np.ndarray, cfg: KnnConfig):
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    if queries.shape[1] != train.n:
        raise ValueError(f"query has {queries.shape[1]} features, training set has {train.n}")
    if cfg.k > len(train):
        raise ValueError(f"k={cfg.k} exceeds training size {len(train)}")
    x = train.features
    if cfg.normalize:
        mu = x.mean(axis=0)
        sd = x.std(axis=0)
        sd[sd == 0] = 1.0
        x = (x - mu) / sd
        queries = (queries - mu) / sd
    return x, queries


def knn_scores(train: LabeledDataset, queries: np.ndarray, cfg: KnnConfig = KnnConfig()) -> np.ndarray:
    """Minority fraction among the k nearest training rows, for each query row."""
    x, q = _prepare(train, queries, cfg)
    nn = nearest_rows(squared_distances(q, x), cfg.k)
    return train.labels[nn].sum(axis=1) / cfg.k


def knn_score(train: LabeledDataset, query, cfg: KnnConfig = KnnConfig()) -> float:
    q = np.asarray(query, dtype=float)
    if q.ndim != 1:
        raise ValueError("query must be a single feature vector")
    return float(knn_scores(train, q[None, :], cfg)[0])


def knn_classify(
    train: LabeledDataset,
    queries: LabeledDataset,
    cfg: KnnConfig = KnnConfig(),
    threshold: float = 0.5,
) -> np.ndarray:
    """Label 1 where the neighbour score is strictly above ``threshold``."""
    return (knn_scores(train, queries.features, cfg) > threshold).astype(np.int8)
