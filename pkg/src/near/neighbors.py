"""Exact cosine k-NN and candidate-set construction.

Brute-force n^2 cosine on unit-norm embeddings; no approximate index.
Neighbor order is similarity-descending with the image itself winning
any tie at its own similarity, then ascending index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import EmbeddingDataset, LabelSpace


@dataclass
class CandidateState:
    """Per-image candidate label sets and confidence vectors over the label space.

    candidate_sets[i] is an ordered list of distinct labels (own label first);
    confidence[i] is a length-k simplex vector supported exactly on S_i.
    """

    candidate_sets: list[list[str]]
    confidence: np.ndarray  # (n, k)

    def support(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.confidence[i] > 0)


def knn_indices(dataset: EmbeddingDataset, kappa: int) -> np.ndarray:
    """(n, kappa) index matrix of each image's nearest neighbors, self included."""
    n = len(dataset)
    if kappa < 1 or kappa > n:
        raise ValueError(f"kappa must be in [1, {n}], got {kappa}")
    emb = dataset.embedding_matrix()
    sims = emb @ emb.T
    out = np.empty((n, kappa), dtype=np.int64)
    idx = np.arange(n)
    for i in range(n):
        not_self = (idx != i).astype(np.int64)
        # lexsort: last key is primary
        order = np.lexsort((idx, not_self, -sims[i]))
        out[i] = order[:kappa]
    return out


def build_candidate_sets(
    dataset: EmbeddingDataset,
    space: LabelSpace,
    kappa: int,
    mode: str = "knn",
    seed: int = 0,
) -> CandidateState:
    """Candidate sets from k-NN (or random) neighbors with uniform confidence.

    Duplicate labels among the selected neighbors collapse to a distinct set
    before the uniform initialization, so confidence rows are proper simplex
    vectors.
    """
    n = len(dataset)
    labels = dataset.mllm_labels()
    if mode == "knn":
        neigh = knn_indices(dataset, kappa)
        rows = [list(neigh[i]) for i in range(n)]
    elif mode == "random":
        if kappa < 1 or kappa > n:
            raise ValueError(f"kappa must be in [1, {n}], got {kappa}")
        rng = np.random.default_rng(seed)
        rows = []
        for i in range(n):
            others = np.delete(np.arange(n), i)
            picked = rng.choice(others, size=kappa - 1, replace=False) if kappa > 1 else []
            rows.append([i, *picked])
    else:
        raise ValueError(f"unknown candidate mode {mode!r}")

    sets: list[list[str]] = []
    conf = np.zeros((n, space.k))
    for i, row in enumerate(rows):
        s = [labels[i]]  # own label first
        for j in row:
            if labels[j] not in s:
                s.append(labels[j])
        sets.append(s)
        for lbl in s:
            conf[i, space.index[lbl]] = 1.0 / len(s)
    return CandidateState(candidate_sets=sets, confidence=conf)
