"""Sharpen / rescale operators and candidate-guided label refinement.

All operators map simplex vectors to simplex vectors. Entries below 1e-300
are treated as exact zeros inside sharpen so that candidate-support
reasoning sees hard zeros, never denormals.
"""

from __future__ import annotations

import numpy as np

_ZERO_FLOOR = 1e-300
_OVERLAP_EPS = 1e-12


class EmptyOverlapError(ValueError):
    """rescale() received distributions with no common support mass."""


def sharpen(y, temperature: float) -> np.ndarray:
    """Temperature-exponent renormalization: y_i^(1/T) / sum_j y_j^(1/T)."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    y = np.asarray(y, dtype=np.float64)
    pos = y > _ZERO_FLOOR
    if not np.any(pos):
        raise ValueError("sharpen of an all-zero vector")
    out = np.zeros_like(y)
    out[pos] = np.exp(np.log(y[pos]) / temperature)
    return out / out.sum()


def rescale(y, q) -> np.ndarray:
    """Elementwise product with q, renormalized; zero outside q's support."""
    y = np.asarray(y, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    prod = y * q
    total = prod.sum()
    if total <= _OVERLAP_EPS:
        raise EmptyOverlapError("no overlap between distribution and confidence support")
    return prod / total


def _rescale_scaled(y: np.ndarray, q: np.ndarray) -> np.ndarray:
    """rescale() with the products pre-divided by their maximum. Identical
    result (renormalization cancels the scale) but immune to the absolute
    1e-12 guard when the support mass is tiny-but-positive, as happens for
    saturated softmax outputs. Errors only on truly disjoint supports."""
    prod = y * q
    peak = prod.max()
    if peak <= 0.0:
        raise EmptyOverlapError("no overlap between distribution and confidence support")
    prod = prod / peak
    return prod / prod.sum()


def refine_label(y, q, f, w: float, is_clean: bool, temperature: float) -> np.ndarray:
    """Refined training target for one image.

    Clean branch trusts the generated label: shrp(w*y + (1-w)*f, T).
    Noisy branch leans on the candidate set: rsc(shrp(w*q + (1-w)*f, T), q),
    which zeroes all non-candidate mass.
    """
    y = np.asarray(y, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if is_clean:
        return sharpen(w * y + (1.0 - w) * f, temperature)
    return _rescale_scaled(sharpen(w * q + (1.0 - w) * f, temperature), q)


def update_confidence(f, q) -> np.ndarray:
    """Next-epoch candidate confidence: rescale f onto the indicator of q's
    support. The support never changes (f is strictly positive)."""
    q = np.asarray(q, dtype=np.float64)
    return _rescale_scaled(np.asarray(f, dtype=np.float64), (q > 0).astype(np.float64))
