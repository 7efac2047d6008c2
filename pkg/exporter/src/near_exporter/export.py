"""Export an image directory to the embedding dataset JSON format.

The output document is the contract shared with the training pipeline:
top-level `dim`, `images` (id, embedding, mllm_label, optional gt_label)
and `label_embeddings`. A `provenance` block records encoder choices;
consumers ignore unknown top-level keys.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .mllm import MLLMClient

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp")


class ExportError(RuntimeError):
    pass


@dataclass
class ExportJob:
    image_dir: str
    output_path: str
    image_encoder: object
    text_encoder: object
    labels_file: Optional[str] = None       # filename -> generated label
    gt_file: Optional[str] = None           # filename -> ground-truth label
    mllm: Optional[MLLMClient] = None
    extra_provenance: dict = field(default_factory=dict)


def _load_mapping(path: Optional[str]) -> Optional[dict]:
    if path is None:
        return None
    try:
        with open(path, encoding="utf-8") as f:
            mapping = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ExportError(f"cannot read label mapping {path}: {e}") from e
    if not isinstance(mapping, dict):
        raise ExportError(f"label mapping {path} must be a JSON object")
    return mapping


def export_dataset(job: ExportJob) -> dict:
    """Run the export and write the dataset file. Returns the document."""
    image_dir = Path(job.image_dir)
    files = sorted(p for p in image_dir.iterdir()
                   if p.suffix.lower() in IMAGE_SUFFIXES) if image_dir.is_dir() else []
    if not files:
        raise ExportError(f"no images found in {job.image_dir}")

    if job.image_encoder.dim != job.text_encoder.dim:
        raise ExportError("image and text encoders must share one dimension")
    labels_map = _load_mapping(job.labels_file)
    gt_map = _load_mapping(job.gt_file) or {}
    if labels_map is None and job.mllm is None:
        raise ExportError("need either a labels file or an MLLM endpoint")

    images = []
    all_labels: set[str] = set()
    for path in files:
        data = path.read_bytes()
        try:
            emb = job.image_encoder.encode(data)
        except Exception as e:
            raise ExportError(f"cannot encode image {path.name}: {e}") from e
        if labels_map is not None:
            if path.name not in labels_map:
                raise ExportError(f"no label for image {path.name}")
            label = str(labels_map[path.name])
        else:
            label = job.mllm.label(data)
        gt = gt_map.get(path.name)
        all_labels.add(label)
        if gt is not None:
            all_labels.add(str(gt))
        rec = {"id": path.name, "embedding": [float(x) for x in emb],
               "mllm_label": label}
        if gt is not None:
            rec["gt_label"] = str(gt)
        images.append(rec)

    label_embeddings = {
        lbl: [float(x) for x in job.text_encoder.encode(lbl)]
        for lbl in sorted(all_labels)
    }
    doc = {
        "dim": job.image_encoder.dim,
        "images": images,
        "label_embeddings": label_embeddings,
        "provenance": {
            "image_encoder": getattr(job.image_encoder, "name", "custom"),
            "text_encoder": getattr(job.text_encoder, "name", "custom"),
            **job.extra_provenance,
        },
    }
    with open(job.output_path, "w", encoding="utf-8") as f:
        json.dump(doc, f, sort_keys=True)
    return doc
