import numpy as np
import pytest

from near.data import EmbeddingDataset, ImageRecord


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def make_dataset(embeddings, labels, gt=None, label_embeddings=None, dim=None):
    """Small helper: build a validated-shape dataset from raw vectors."""
    embeddings = [unit(e) for e in embeddings]
    dim = dim or len(embeddings[0])
    if label_embeddings is None:
        rng = np.random.default_rng(7)
        names = sorted(set(labels) | (set(gt) if gt else set()))
        label_embeddings = {c: unit(rng.standard_normal(dim)) for c in names}
    images = [
        ImageRecord(id=f"im{i}", embedding=e, mllm_label=l,
                    gt_label=gt[i] if gt else None)
        for i, (e, l) in enumerate(zip(embeddings, labels))
    ]
    return EmbeddingDataset(dim=dim, images=images, label_embeddings=label_embeddings)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
