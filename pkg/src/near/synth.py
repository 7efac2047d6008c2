"""Deterministic synthetic dataset generator.

Emulates MLLM labeling noise over a fine-grained embedding task: class
centers are random unit vectors kept below 0.8 pairwise cosine, image
embeddings are noisy copies of their center, and each training label is
either correct, a semantically-close spurious variant ("<name>#v<r>"), or
a hard confusion with the nearest other class.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import EmbeddingDataset, ImageRecord

MAX_CENTER_COS = 0.8
SPURIOUS_JITTER = 0.1
_MAX_DRAWS = 10000


@dataclass
class SynthConfig:
    num_classes: int = 20
    dim: int = 64
    shots: int = 3
    shots_list: Optional[list[int]] = None  # per-class counts, overrides shots
    test_per_class: int = 20
    noise_rate: float = 0.3
    spurious_fraction: float = 0.2
    intra_class_noise: float = 0.25
    seed: int = 0

    def validate(self):
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        counts = self.per_class_shots()
        if any(c < 1 for c in counts):
            raise ValueError("shots must be >= 1 per class")
        if self.test_per_class < 1:
            raise ValueError("test_per_class must be >= 1")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError("noise_rate must lie in [0, 1]")
        if not 0.0 <= self.spurious_fraction <= 1.0:
            raise ValueError("spurious_fraction must lie in [0, 1]")
        if self.intra_class_noise <= 0:
            raise ValueError("intra_class_noise must be positive")
        return self

    def per_class_shots(self) -> list[int]:
        if self.shots_list is not None:
            if len(self.shots_list) != self.num_classes:
                raise ValueError("shots_list length must equal num_classes")
            return list(self.shots_list)
        return [self.shots] * self.num_classes


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _draw_centers(rng: np.random.Generator, g: int, d: int) -> np.ndarray:
    centers: list[np.ndarray] = []
    for _ in range(_MAX_DRAWS):
        cand = _unit(rng.standard_normal(d))
        if all(float(np.dot(cand, c)) <= MAX_CENTER_COS for c in centers):
            centers.append(cand)
            if len(centers) == g:
                return np.stack(centers)
    raise RuntimeError("could not place class centers below the cosine cap")


def generate(config: SynthConfig) -> tuple[EmbeddingDataset, EmbeddingDataset]:
    """Build (train, test) datasets sharing one label-embedding table."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    g, d = config.num_classes, config.dim
    centers = _draw_centers(rng, g, d)
    names = [f"class{c:03d}" for c in range(g)]
    label_embeddings = {names[c]: centers[c] for c in range(g)}

    # nearest other class center per class, for hard confusions
    sims = centers @ centers.T
    np.fill_diagonal(sims, -np.inf)
    nearest_other = sims.argmax(axis=1)

    spurious_counter = [0] * g
    train_images: list[ImageRecord] = []
    for c, count in enumerate(config.per_class_shots()):
        for s in range(count):
            emb = _unit(centers[c] + config.intra_class_noise * rng.standard_normal(d))
            if rng.random() < 1.0 - config.noise_rate:
                label = names[c]
            elif rng.random() < config.spurious_fraction:
                spurious_counter[c] += 1
                label = f"{names[c]}#v{spurious_counter[c]}"
                label_embeddings[label] = _unit(
                    centers[c] + SPURIOUS_JITTER * rng.standard_normal(d))
            else:
                label = names[nearest_other[c]]
            train_images.append(ImageRecord(
                id=f"train-{c:03d}-{s:03d}", embedding=emb,
                mllm_label=label, gt_label=names[c]))

    test_images = [
        ImageRecord(
            id=f"test-{c:03d}-{s:03d}",
            embedding=_unit(centers[c] + config.intra_class_noise * rng.standard_normal(d)),
            mllm_label=names[c], gt_label=names[c])
        for c in range(g) for s in range(config.test_per_class)
    ]

    train = EmbeddingDataset(dim=d, images=train_images, label_embeddings=label_embeddings)
    test = EmbeddingDataset(dim=d, images=test_images, label_embeddings=label_embeddings)
    return train, test
