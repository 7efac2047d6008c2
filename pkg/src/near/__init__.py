"""Noisy-label fine-grained classifier pipeline over precomputed embeddings."""

from .data import (
    DatasetError,
    EmbeddingDataset,
    ImageRecord,
    LabelSpace,
    build_label_space,
    load_dataset,
    one_hot,
    save_dataset,
)
from .mixture import GmmFit, adaptive_threshold, clean_posteriors, fit_gmm_1d, partition
from .neighbors import CandidateState, build_candidate_sets, knn_indices
from .refine import refine_label, rescale, sharpen, update_confidence
from .trainer import TrainConfig, TrainedModel, run

__version__ = "0.1.0"

__all__ = [
    "DatasetError", "EmbeddingDataset", "ImageRecord", "LabelSpace",
    "build_label_space", "load_dataset", "one_hot", "save_dataset",
    "GmmFit", "adaptive_threshold", "clean_posteriors", "fit_gmm_1d", "partition",
    "CandidateState", "build_candidate_sets", "knn_indices",
    "refine_label", "rescale", "sharpen", "update_confidence",
    "TrainConfig", "TrainedModel", "run",
]
