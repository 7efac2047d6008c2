"""Embedding-space softmax classifier with exact analytic gradients.

Logits are s * cos(x, w_j / ||w_j||) where the class weights w_j come from
one of two modes:

  linear-probe:  w_j = theta_j, a free (k, d) matrix initialized to the
                 label-text anchors;
  shared-offset: w_j = t_j + theta, a single learnable d-vector added to
                 every anchor, initialized to zeros.

Backprop through the normalization uses d(w/||w||)/dw = (I - ww^T/||w||^2)/||w||.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

LINEAR_PROBE = "linear-probe"
SHARED_OFFSET = "shared-offset"
_NORM_EPS = 1e-12


@dataclass
class ClassifierParams:
    mode: str
    anchors: np.ndarray      # (k, d) unit-norm label-text embeddings, fixed
    theta: np.ndarray        # (k, d) in linear-probe mode, (d,) in shared-offset
    logit_scale: float

    def __post_init__(self):
        if self.mode not in (LINEAR_PROBE, SHARED_OFFSET):
            raise ValueError(f"unknown classifier mode {self.mode!r}")
        if self.logit_scale <= 0:
            raise ValueError("logit_scale must be positive")
        k, d = self.anchors.shape
        want = (k, d) if self.mode == LINEAR_PROBE else (d,)
        if self.theta.shape != want:
            raise ValueError(f"theta shape {self.theta.shape} does not match mode {self.mode}")


def init_params(mode: str, anchors: np.ndarray, logit_scale: float = 100.0) -> ClassifierParams:
    anchors = np.asarray(anchors, dtype=np.float64)
    if mode == LINEAR_PROBE:
        theta = anchors.copy()
    else:
        theta = np.zeros(anchors.shape[1])
    return ClassifierParams(mode=mode, anchors=anchors, theta=theta, logit_scale=logit_scale)


def class_weights(params: ClassifierParams) -> np.ndarray:
    if params.mode == LINEAR_PROBE:
        return params.theta
    return params.anchors + params.theta[None, :]


def _normalized_weights(params: ClassifierParams) -> tuple[np.ndarray, np.ndarray]:
    w = class_weights(params)
    norms = np.linalg.norm(w, axis=1)
    if np.any(norms < _NORM_EPS):
        raise FloatingPointError("class weight vector collapsed to zero norm")
    return w / norms[:, None], norms


def forward_batch(params: ClassifierParams, xs: np.ndarray) -> np.ndarray:
    """Softmax class probabilities for a (m, d) batch of unit-norm embeddings."""
    w_hat, _ = _normalized_weights(params)
    z = params.logit_scale * (xs @ w_hat.T)
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(params: ClassifierParams, x: np.ndarray) -> np.ndarray:
    return forward_batch(params, np.asarray(x, dtype=np.float64)[None, :])[0]


def ce_loss(p: np.ndarray, target: np.ndarray) -> float:
    """Cross entropy -sum target_j log p_j; summed only over target support."""
    mask = target > 0
    return float(-np.sum(target[mask] * np.log(p[mask])))


def grad(params: ClassifierParams, xs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Exact mean gradient of ce_loss over the batch, shaped like theta."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    m = xs.shape[0]
    if m == 0:
        raise ValueError("empty batch")
    if targets.shape != (m, params.anchors.shape[0]):
        raise ValueError("target shape mismatch")
    w_hat, norms = _normalized_weights(params)
    p = forward_batch(params, xs)
    g = p - targets                     # (m, k): dL/dz
    cos = xs @ w_hat.T                  # (m, k)
    # dL/dw_j = s/m * sum_m g[m,j] * (x_m - cos[m,j] * w_hat_j) / ||w_j||
    a = g.T @ xs                        # (k, d)
    c = (g * cos).sum(axis=0)           # (k,)
    grad_w = params.logit_scale / m * (a - c[:, None] * w_hat) / norms[:, None]
    if params.mode == LINEAR_PROBE:
        return grad_w
    return grad_w.sum(axis=0)


def sgd_step(params: ClassifierParams, gradient: np.ndarray, lr: float) -> ClassifierParams:
    if lr < 0:
        raise ValueError("lr must be non-negative")
    return replace(params, theta=params.theta - lr * gradient)


def lr_at(epoch: int, warm_epochs: int, total_epochs: int, base_lr: float) -> float:
    """Constant base_lr during warm-up, cosine annealing to zero afterwards."""
    if not 1 <= epoch <= total_epochs:
        raise ValueError(f"epoch {epoch} out of range [1, {total_epochs}]")
    if epoch <= warm_epochs:
        return base_lr
    frac = (epoch - warm_epochs) / (total_epochs - warm_epochs)
    return base_lr * 0.5 * (1.0 + np.cos(np.pi * frac))


def zero_shot_predict(label_embeddings: dict[str, np.ndarray], labels: list[str],
                      x: np.ndarray) -> str:
    """Argmax-cosine label among `labels`; ties go to the lexicographically
    smaller label. `labels` need not be sorted."""
    best_label, best_sim = None, -np.inf
    for lbl in sorted(labels):
        try:
            t = label_embeddings[lbl]
        except KeyError:
            raise KeyError(f"no embedding for label {lbl!r}") from None
        sim = float(np.dot(x, t))
        if sim > best_sim:
            best_label, best_sim = lbl, sim
    return best_label
