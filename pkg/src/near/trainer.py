"""Training orchestration: warm-up, per-epoch GMM partitioning, refined-label
SGD over balanced clean/noisy batches, confidence updates, and label filtering.

Refinement and confidence updates both use the epoch-start full-set forward
pass; refined targets stay frozen for the epoch's batches. Baseline modes:
"naive" trains plain cross entropy on the generated labels for all epochs
(no refinement, no filtering), "zeroshot" does no training at all.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import classifier as clf
from . import mixture, refine
from .data import EmbeddingDataset, LabelSpace, build_label_space, one_hot
from .metrics import EvalReport, candidate_quality, cluster_accuracy, semantic_accuracy
from .neighbors import CandidateState, build_candidate_sets

MODES = ("near", "naive", "zeroshot")


@dataclass
class TrainConfig:
    kappa: int = 3
    shots: int = 3               # informational; generator decides actual counts
    temperature: float = 2.0
    total_epochs: int = 50
    warm_epochs: int = 10
    base_lr: float = 0.002
    batch_size: int = 32
    logit_scale: float = 100.0
    threshold_mode: str = "adaptive"   # "adaptive" | "static"
    static_tau: float = 0.5
    candidate_mode: str = "knn"        # "knn" | "random"
    classifier_mode: str = clf.SHARED_OFFSET
    trainer_mode: str = "near"         # "near" | "naive" | "zeroshot"
    seed: int = 0

    def validate(self):
        if self.warm_epochs > self.total_epochs or self.warm_epochs < 0:
            raise ValueError("need 0 <= warm_epochs <= total_epochs")
        if self.batch_size < 2 or self.batch_size % 2 != 0:
            raise ValueError("batch_size must be even (balanced clean/noisy halves)")
        if self.trainer_mode not in MODES:
            raise ValueError(f"unknown trainer mode {self.trainer_mode!r}")
        if self.threshold_mode not in ("adaptive", "static"):
            raise ValueError(f"unknown threshold mode {self.threshold_mode!r}")
        if not 0.0 <= self.static_tau <= 1.0:
            raise ValueError("static_tau must lie in [0, 1]")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        return self

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa, "shots": self.shots, "temperature": self.temperature,
            "total_epochs": self.total_epochs, "warm_epochs": self.warm_epochs,
            "base_lr": self.base_lr, "batch_size": self.batch_size,
            "logit_scale": self.logit_scale, "threshold_mode": self.threshold_mode,
            "static_tau": self.static_tau, "candidate_mode": self.candidate_mode,
            "classifier_mode": self.classifier_mode, "trainer_mode": self.trainer_mode,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d).validate()


@dataclass
class TrainedModel:
    params: clf.ClassifierParams
    space: LabelSpace
    filtered_labels: list[str]           # C_test, sorted
    candidates: Optional[CandidateState]
    diagnostics: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "mode": self.params.mode,
            "logit_scale": self.params.logit_scale,
            "labels": self.space.labels,
            "filtered_labels": self.filtered_labels,
            "theta": np.asarray(self.params.theta).tolist(),
        }
        return json.dumps(doc, sort_keys=True)


def load_model(path, dataset: EmbeddingDataset) -> TrainedModel:
    """Rebuild a TrainedModel from its JSON artifact, taking anchors from the
    given dataset's label-embedding table."""
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    labels = doc["labels"]
    anchors = np.stack([dataset.label_embedding(lbl) for lbl in labels])
    theta = np.asarray(doc["theta"], dtype=np.float64)
    params = clf.ClassifierParams(mode=doc["mode"], anchors=anchors, theta=theta,
                                  logit_scale=doc["logit_scale"])
    return TrainedModel(params=params, space=LabelSpace(labels=labels),
                        filtered_labels=doc["filtered_labels"], candidates=None)


def _targets_one_hot(dataset: EmbeddingDataset, space: LabelSpace) -> np.ndarray:
    return np.stack([one_hot(lbl, space) for lbl in dataset.mllm_labels()])


def warmup(params, dataset, space, config: TrainConfig, rng: np.random.Generator,
           epochs: Optional[int] = None, diagnostics: Optional[list] = None,
           use_schedule: bool = False):
    """Plain cross-entropy SGD on the generated labels. With use_schedule the
    constant-then-cosine schedule over config.total_epochs applies (naive mode);
    otherwise the constant base_lr is used (warm-up proper)."""
    epochs = config.warm_epochs if epochs is None else epochs
    xs = dataset.embedding_matrix()
    targets = _targets_one_hot(dataset, space)
    n = len(dataset)
    for epoch in range(1, epochs + 1):
        lr = clf.lr_at(epoch, config.warm_epochs, config.total_epochs, config.base_lr) \
            if use_schedule else config.base_lr
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            g = clf.grad(params, xs[batch], targets[batch])
            params = clf.sgd_step(params, g, lr)
        if diagnostics is not None:
            p_all = clf.forward_batch(params, xs)
            losses = [clf.ce_loss(p_all[i], targets[i]) for i in range(n)]
            diagnostics.append({"epoch": epoch, "phase": "warmup" if not use_schedule else "naive",
                                "lr": lr, "mean_loss": float(np.mean(losses))})
    return params


def _balanced_stream(indices: np.ndarray, length: int, rng: np.random.Generator) -> np.ndarray:
    """Deterministic sampling stream over a partition: concatenated shuffles,
    so small partitions are resampled (with replacement across batches)."""
    chunks = []
    have = 0
    while have < length:
        chunks.append(rng.permutation(indices))
        have += len(indices)
    return np.concatenate(chunks)[:length]


def train_epoch(params, dataset, space, candidates: CandidateState,
                config: TrainConfig, epoch: int, rng: np.random.Generator):
    """One post-warm-up epoch. Returns (params, candidates, diagnostics dict)."""
    xs = dataset.embedding_matrix()
    targets = _targets_one_hot(dataset, space)
    n = len(dataset)

    f_all = clf.forward_batch(params, xs)
    losses = np.array([clf.ce_loss(f_all[i], targets[i]) for i in range(n)])
    fit = mixture.fit_gmm_1d(losses)
    w = mixture.clean_posteriors(fit, losses)
    tau = mixture.adaptive_threshold(w) if config.threshold_mode == "adaptive" \
        else config.static_tau
    clean_idx, noisy_idx = mixture.partition(w, tau)
    is_clean = np.zeros(n, dtype=bool)
    is_clean[clean_idx] = True

    refined = np.stack([
        refine.refine_label(targets[i], candidates.confidence[i], f_all[i],
                            float(w[i]), bool(is_clean[i]), config.temperature)
        for i in range(n)
    ])
    new_conf = np.stack([
        refine.update_confidence(f_all[i], candidates.confidence[i]) for i in range(n)
    ])
    candidates = CandidateState(candidate_sets=candidates.candidate_sets,
                                confidence=new_conf)

    lr = clf.lr_at(epoch, config.warm_epochs, config.total_epochs, config.base_lr)
    num_batches = math.ceil(n / config.batch_size)
    half = config.batch_size // 2
    if len(clean_idx) and len(noisy_idx):
        cl_stream = _balanced_stream(clean_idx, num_batches * half, rng)
        ns_stream = _balanced_stream(noisy_idx, num_batches * half, rng)
        batches = [np.concatenate([cl_stream[b * half:(b + 1) * half],
                                   ns_stream[b * half:(b + 1) * half]])
                   for b in range(num_batches)]
    else:
        # one partition empty: draw full batches from the other
        pool = clean_idx if len(clean_idx) else noisy_idx
        stream = _balanced_stream(pool, num_batches * config.batch_size, rng)
        batches = [stream[b * config.batch_size:(b + 1) * config.batch_size]
                   for b in range(num_batches)]

    for batch in batches:
        g = clf.grad(params, xs[batch], refined[batch])
        params = clf.sgd_step(params, g, lr)

    diag = {
        "epoch": epoch, "phase": "train", "lr": lr,
        "mean_loss": float(np.mean(losses)), "tau": float(tau),
        "n_clean": int(len(clean_idx)), "n_noisy": int(len(noisy_idx)),
        "gmm": {
            "mean_clean": fit.mean_clean, "mean_noisy": fit.mean_noisy,
            "var_clean": fit.var_clean, "var_noisy": fit.var_noisy,
            "weight_clean": fit.weight_clean, "weight_noisy": fit.weight_noisy,
            "iterations": fit.iterations, "converged": fit.converged,
            "degenerate": fit.degenerate,
        },
    }
    return params, candidates, diag


def filter_labels(params, dataset, space, candidates: CandidateState) -> list[str]:
    """C_test = labels argmax-predicted on the train set, intersected with
    labels argmax-supported by some candidate confidence. Falls back to the
    classifier side if the intersection is empty."""
    f_all = clf.forward_batch(params, dataset.embedding_matrix())
    f_clip = {space.labels[j] for j in f_all.argmax(axis=1)}
    f_cand = {space.labels[j] for j in candidates.confidence.argmax(axis=1)}
    c_test = f_clip & f_cand
    if not c_test:
        c_test = f_clip
    return sorted(c_test)


def predict_batch(model: TrainedModel, xs: np.ndarray) -> list[str]:
    """Argmax over the filtered label space; ties resolve to the
    lexicographically smaller label (filtered labels are sorted)."""
    keep = np.array([model.space.index[lbl] for lbl in model.filtered_labels])
    f = clf.forward_batch(model.params, np.atleast_2d(xs))
    sub = f[:, keep]
    return [model.filtered_labels[j] for j in sub.argmax(axis=1)]


def predict(model: TrainedModel, x: np.ndarray) -> str:
    return predict_batch(model, np.asarray(x, dtype=np.float64)[None, :])[0]


def evaluate(model: TrainedModel, test: EmbeddingDataset,
             train_candidates: Optional[CandidateState] = None,
             train_gt: Optional[list[str]] = None) -> EvalReport:
    gt = test.gt_labels()
    preds = predict_batch(model, test.embedding_matrix())
    cq = None
    if train_candidates is not None and train_gt is not None:
        cq = candidate_quality(train_candidates, train_gt, test.label_embeddings)
    return EvalReport(
        cacc=cluster_accuracy(gt, preds),
        sacc=semantic_accuracy(preds, gt, test.label_embeddings),
        n_test=len(gt),
        label_space_size=len(model.filtered_labels),
        candidate_quality=cq,
    )


def run(config: TrainConfig, dataset: EmbeddingDataset,
        test: Optional[EmbeddingDataset] = None):
    """Full pipeline per trainer_mode. Returns (TrainedModel, EvalReport | None)."""
    config.validate()
    space = build_label_space(dataset)
    anchors = np.stack([dataset.label_embedding(lbl) for lbl in space.labels])
    params = clf.init_params(config.classifier_mode, anchors, config.logit_scale)
    diagnostics: list[dict] = []

    if config.trainer_mode == "zeroshot":
        model = TrainedModel(params=params, space=space, filtered_labels=list(space.labels),
                             candidates=None, diagnostics=diagnostics)
    elif config.trainer_mode == "naive":
        rng = np.random.default_rng(config.seed)
        params = warmup(params, dataset, space, config, rng,
                        epochs=config.total_epochs, diagnostics=diagnostics,
                        use_schedule=True)
        model = TrainedModel(params=params, space=space, filtered_labels=list(space.labels),
                             candidates=None, diagnostics=diagnostics)
    else:
        candidates = build_candidate_sets(dataset, space, config.kappa,
                                          mode=config.candidate_mode, seed=config.seed)
        rng = np.random.default_rng(config.seed)
        params = warmup(params, dataset, space, config, rng, diagnostics=diagnostics)
        for epoch in range(config.warm_epochs + 1, config.total_epochs + 1):
            params, candidates, diag = train_epoch(
                params, dataset, space, candidates, config, epoch, rng)
            diagnostics.append(diag)
        filtered = filter_labels(params, dataset, space, candidates)
        model = TrainedModel(params=params, space=space, filtered_labels=filtered,
                             candidates=candidates, diagnostics=diagnostics)

    report = None
    if test is not None and test.has_gt():
        report = evaluate(model, test)
    return model, report
