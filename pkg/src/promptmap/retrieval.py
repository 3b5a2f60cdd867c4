"""Exact top-k nearest-neighbor search over corpus image features.

The search space is the image features only: near-identical prompts produce
very different images, so image similarity discriminates better than prompt
similarity.  Corpora are desk-scale, so an exhaustive scan is both fast
enough and trivially exact; approximate indexes are a non-goal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import CorpusHandle
from .errors import DimensionMismatch, EmptyCorpus, ZeroVector


@dataclass(frozen=True)
class ScoredRecord:
    id: str
    distance: float


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - cos(a, b); symmetric, in [0, 2] for any nonzero vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine distance is undefined for zero vectors")
    return float(1.0 - np.dot(a, b) / (na * nb))


def retrieve_top_k(handle: CorpusHandle, query: np.ndarray, k: int) -> list[ScoredRecord]:
    """k nearest source=db records by cosine distance, ties broken by id.

    Equal to a full (distance, id)-sorted scan; uses a partition to avoid
    sorting the whole corpus when k is small.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    db_records = [r for r in handle.records if r.source == "db"]
    if not db_records:
        raise EmptyCorpus("corpus has no source=db records to search")
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (handle.image_features.shape[1],):
        raise DimensionMismatch(
            f"query {q.shape} vs features dim {handle.image_features.shape[1]}"
        )
    qn = np.linalg.norm(q)
    if qn == 0.0:
        raise ZeroVector("zero query vector")
    q = q / qn

    rows = np.array([r.row for r in db_records])
    feats = handle.image_features[rows].astype(np.float64)
    # per-row dot products keep each distance bit-identical under corpus
    # reordering (a blocked matmul would not)
    dists = np.array(
        [1.0 - np.dot(feats[i], q) / np.linalg.norm(feats[i]) for i in range(len(db_records))]
    )

    if len(db_records) <= k:
        candidates = range(len(db_records))
    else:
        kth = np.partition(dists, k - 1)[k - 1]
        candidates = np.nonzero(dists <= kth)[0]
    ranked = sorted(candidates, key=lambda i: (dists[i], db_records[i].id))[:k]
    return [ScoredRecord(db_records[i].id, float(dists[i])) for i in ranked]
