"""Dataset schema, validation, ingestion and label-space handling.

The on-disk format is a single UTF-8 JSON document:

    {
      "dim": 4,
      "images": [{"id": "a", "embedding": [...], "mllm_label": "...",
                  "gt_label": "..."}, ...],
      "label_embeddings": {"label": [...], ...}
    }

Embeddings are stored as decimal floats and held internally as float64.
Image embeddings must be unit-norm within 1e-3 of 1.0 on load (they are
renormalized to exact unit norm), and within 1e-6 after validation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

NORM_LOAD_TOL = 1e-3
NORM_TOL = 1e-6


class DatasetError(ValueError):
    """Raised when a dataset file or structure violates the schema."""


class UnknownLabelError(KeyError):
    """Raised when a label is not present in the label space."""


@dataclass
class ImageRecord:
    id: str
    embedding: np.ndarray
    mllm_label: str
    gt_label: Optional[str] = None


@dataclass
class EmbeddingDataset:
    dim: int
    images: list[ImageRecord]
    label_embeddings: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.images)

    def embedding_matrix(self) -> np.ndarray:
        """(n, dim) float64 matrix of image embeddings, in image order."""
        return np.stack([im.embedding for im in self.images]).astype(np.float64)

    def mllm_labels(self) -> list[str]:
        return [im.mllm_label for im in self.images]

    def gt_labels(self) -> list[str]:
        """Ground-truth labels (evaluation only). Errors if any is missing."""
        out = []
        for im in self.images:
            if im.gt_label is None:
                raise DatasetError(f"image {im.id!r} has no gt_label")
            out.append(im.gt_label)
        return out

    def has_gt(self) -> bool:
        return all(im.gt_label is not None for im in self.images)

    def label_embedding(self, label: str) -> np.ndarray:
        try:
            return self.label_embeddings[label]
        except KeyError:
            raise UnknownLabelError(f"no embedding for label {label!r}") from None


@dataclass
class LabelSpace:
    """Distinct generated labels, lexicographically sorted (byte order)."""

    labels: list[str]
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {c: j for j, c in enumerate(self.labels)}

    @property
    def k(self) -> int:
        return len(self.labels)

    def __contains__(self, label: str) -> bool:
        return label in self.index


def _as_unit(vec, what: str, dim: int) -> np.ndarray:
    v = np.asarray(vec, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != dim:
        raise DatasetError(f"{what}: expected {dim}-dim vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DatasetError(f"{what}: non-finite values")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > NORM_LOAD_TOL:
        raise DatasetError(f"{what}: norm {norm:.6f} not within {NORM_LOAD_TOL} of 1")
    return v / norm


def validate_dataset(ds: EmbeddingDataset) -> EmbeddingDataset:
    seen = set()
    for im in ds.images:
        if im.id in seen:
            raise DatasetError(f"duplicate image id {im.id!r}")
        seen.add(im.id)
        if not im.mllm_label:
            raise DatasetError(f"image {im.id!r}: empty mllm_label")
        if abs(float(np.linalg.norm(im.embedding)) - 1.0) > NORM_TOL:
            raise DatasetError(f"image {im.id!r}: embedding not unit-norm")
        for lbl in (im.mllm_label, im.gt_label):
            if lbl is not None and lbl not in ds.label_embeddings:
                raise DatasetError(f"missing label embedding for {lbl!r}")
    return ds


def load_dataset(path) -> EmbeddingDataset:
    """Load and validate a dataset file. Raises DatasetError on any violation."""
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DatasetError(f"cannot parse dataset file {path}: {e}") from e
    if not isinstance(raw, dict):
        raise DatasetError("top level must be a JSON object")
    try:
        dim = int(raw["dim"])
        images_raw = raw["images"]
        lab_raw = raw["label_embeddings"]
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetError(f"malformed dataset document: {e}") from e
    if dim < 1:
        raise DatasetError("dim must be positive")

    images = []
    for rec in images_raw:
        try:
            img_id = str(rec["id"])
            emb = _as_unit(rec["embedding"], f"image {rec.get('id')!r} embedding", dim)
            mllm = rec["mllm_label"]
            gt = rec.get("gt_label")
        except DatasetError:
            raise
        except (KeyError, TypeError) as e:
            raise DatasetError(f"malformed image record: {e}") from e
        images.append(ImageRecord(id=img_id, embedding=emb, mllm_label=mllm, gt_label=gt))

    label_embeddings = {
        str(lbl): _as_unit(vec, f"label embedding {lbl!r}", dim)
        for lbl, vec in lab_raw.items()
    }
    return validate_dataset(EmbeddingDataset(dim=dim, images=images, label_embeddings=label_embeddings))


def save_dataset(ds: EmbeddingDataset, path) -> None:
    """Write the dataset JSON. Deterministic bytes for identical content."""
    doc = {
        "dim": ds.dim,
        "images": [
            {
                "id": im.id,
                "embedding": [float(x) for x in im.embedding],
                "mllm_label": im.mllm_label,
                **({"gt_label": im.gt_label} if im.gt_label is not None else {}),
            }
            for im in ds.images
        ],
        "label_embeddings": {
            lbl: [float(x) for x in vec] for lbl, vec in sorted(ds.label_embeddings.items())
        },
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, sort_keys=True)


def build_label_space(ds: EmbeddingDataset) -> LabelSpace:
    """Distinct mllm labels of the dataset, sorted lexicographically."""
    if len(ds) == 0:
        raise DatasetError("empty dataset")
    return LabelSpace(labels=sorted(set(ds.mllm_labels())))


def one_hot(label: str, space: LabelSpace) -> np.ndarray:
    if label not in space:
        raise UnknownLabelError(f"label {label!r} not in label space")
    y = np.zeros(space.k)
    y[space.index[label]] = 1.0
    return y
