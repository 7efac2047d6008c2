"""Pluggable image and text encoders.

The "hash" encoders are fully deterministic and dependency-light: images are
downsampled to a fixed grid and projected through a seeded Gaussian matrix,
text is character-trigram hashed. They exist so exports (and tests) work
without pretrained weights. The "clip-like" backends (torchvision ResNet,
sentence-transformers) are optional extras and load lazily.
"""

from __future__ import annotations

import hashlib
import io

import numpy as np
from PIL import Image

_GRID = 16  # downsample resolution for the hash image encoder


def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n == 0.0:
        v = v + 1e-9
        n = float(np.linalg.norm(v))
    return v / n


def _projection(in_dim: int, out_dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((in_dim, out_dim)) / np.sqrt(in_dim)


class HashImageEncoder:
    """Grayscale-downsample + fixed random projection. Similar images map to
    nearby embeddings; identical bytes map to identical embeddings."""

    name = "hash"

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self._proj = _projection(_GRID * _GRID, dim, seed=seed ^ 0x1A6E)

    def encode(self, image_bytes: bytes) -> np.ndarray:
        img = Image.open(io.BytesIO(image_bytes)).convert("L").resize((_GRID, _GRID))
        pixels = np.asarray(img, dtype=np.float64).ravel() / 255.0
        pixels -= pixels.mean()
        return _unit(pixels @ self._proj)


class HashTextEncoder:
    """Character-trigram feature hashing followed by normalization."""

    name = "hash"

    def __init__(self, dim: int = 64):
        self.dim = dim

    def encode(self, text: str) -> np.ndarray:
        v = np.zeros(self.dim)
        padded = f"  {text.lower()}  "
        for i in range(len(padded) - 2):
            tri = padded[i:i + 3].encode("utf-8")
            h = int.from_bytes(hashlib.blake2b(tri, digest_size=8).digest(), "big")
            v[h % self.dim] += 1.0 if (h >> 63) & 1 else -1.0
        return _unit(v)


class TorchvisionImageEncoder:
    """ResNet-18 penultimate features (requires torchvision weights on disk)."""

    name = "resnet18"

    def __init__(self, dim: int = 512):
        import torch
        from torchvision import models, transforms

        if dim != 512:
            raise ValueError("resnet18 features are 512-dim")
        self.dim = dim
        self._torch = torch
        net = models.resnet18(weights=models.ResNet18_Weights.DEFAULT)
        net.fc = torch.nn.Identity()
        net.eval()
        self._net = net
        self._tf = transforms.Compose([
            transforms.Resize(256), transforms.CenterCrop(224),
            transforms.ToTensor(),
            transforms.Normalize([0.485, 0.456, 0.406], [0.229, 0.224, 0.225]),
        ])

    def encode(self, image_bytes: bytes) -> np.ndarray:
        img = Image.open(io.BytesIO(image_bytes)).convert("RGB")
        with self._torch.no_grad():
            feat = self._net(self._tf(img)[None])[0].numpy().astype(np.float64)
        return _unit(feat)


class SentenceTransformerTextEncoder:
    """Sentence-BERT embeddings (requires model weights on disk)."""

    name = "sentence-transformers"

    def __init__(self, dim: int = 384, model: str = "all-MiniLM-L6-v2"):
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(model)
        self.dim = dim

    def encode(self, text: str) -> np.ndarray:
        return _unit(np.asarray(self._model.encode(text), dtype=np.float64))


IMAGE_ENCODERS = {"hash": HashImageEncoder, "resnet18": TorchvisionImageEncoder}
TEXT_ENCODERS = {"hash": HashTextEncoder,
                 "sentence-transformers": SentenceTransformerTextEncoder}


def make_image_encoder(name: str, dim: int):
    try:
        return IMAGE_ENCODERS[name](dim=dim)
    except KeyError:
        raise ValueError(f"unknown image encoder {name!r}") from None


def make_text_encoder(name: str, dim: int):
    try:
        return TEXT_ENCODERS[name](dim=dim)
    except KeyError:
        raise ValueError(f"unknown text encoder {name!r}") from None
