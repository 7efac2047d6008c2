"""Vocabulary-free evaluation metrics.

Clustering accuracy solves an exact maximum-weight assignment between
distinct predicted and ground-truth labels (contingency matrix padded to
square), which equals the max over injective relabelings of predictions.
Semantic accuracy is mean cosine between label embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .neighbors import CandidateState


@dataclass
class EvalReport:
    cacc: float
    sacc: float
    n_test: int
    label_space_size: int
    candidate_quality: Optional[float] = None

    def to_dict(self) -> dict:
        d = {
            "cacc": self.cacc,
            "sacc": self.sacc,
            "n_test": self.n_test,
            "label_space_size": self.label_space_size,
        }
        if self.candidate_quality is not None:
            d["candidate_quality"] = self.candidate_quality
        return d


def cluster_accuracy(gt: list[str], pred: list[str]) -> float:
    if len(gt) != len(pred):
        raise ValueError("gt and pred must have equal lengths")
    m = len(gt)
    if m == 0:
        raise ValueError("empty input")
    pred_ids = {c: i for i, c in enumerate(sorted(set(pred)))}
    gt_ids = {c: i for i, c in enumerate(sorted(set(gt)))}
    size = max(len(pred_ids), len(gt_ids))
    counts = np.zeros((size, size), dtype=np.int64)
    for p, g in zip(pred, gt):
        counts[pred_ids[p], gt_ids[g]] += 1
    rows, cols = linear_sum_assignment(counts, maximize=True)
    return float(counts[rows, cols].sum()) / m


def _mean_cosine(a: list[str], b: list[str], label_embeddings: dict) -> float:
    sims = []
    for la, lb in zip(a, b):
        sims.append(float(np.dot(_emb(label_embeddings, la), _emb(label_embeddings, lb))))
    return float(np.mean(sims))


def _emb(label_embeddings: dict, label: str) -> np.ndarray:
    try:
        return label_embeddings[label]
    except KeyError:
        raise KeyError(f"no embedding for label {label!r}") from None


def semantic_accuracy(pred: list[str], gt: list[str], label_embeddings: dict) -> float:
    if len(pred) != len(gt):
        raise ValueError("pred and gt must have equal lengths")
    return _mean_cosine(pred, gt, label_embeddings)


def candidate_quality(candidates: CandidateState, gt: list[str], label_embeddings: dict) -> float:
    """Mean over images of the best cosine between any candidate label and gt."""
    if len(candidates.candidate_sets) != len(gt):
        raise ValueError("candidate state and gt must have equal lengths")
    best = []
    for s_i, g in zip(candidates.candidate_sets, gt):
        g_emb = _emb(label_embeddings, g)
        best.append(max(float(np.dot(_emb(label_embeddings, c), g_emb)) for c in s_i))
    return float(np.mean(best))
