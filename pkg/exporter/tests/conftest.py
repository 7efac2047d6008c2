import json

import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def image_dir(tmp_path):
    """Five small images in two visual groups, plus label/gt mapping files."""
    rng = np.random.default_rng(0)
    d = tmp_path / "images"
    d.mkdir()
    labels, gts = {}, {}
    for i in range(5):
        group = i % 2
        base = 40 if group == 0 else 200
        arr = np.clip(base + rng.integers(-30, 30, size=(24, 24, 3)), 0, 255)
        Image.fromarray(arr.astype("uint8")).save(d / f"img{i}.png")
        labels[f"img{i}.png"] = f"generated-{group}"
        gts[f"img{i}.png"] = f"true-{group}"
    labels_file = tmp_path / "labels.json"
    labels_file.write_text(json.dumps(labels))
    gt_file = tmp_path / "gt.json"
    gt_file.write_text(json.dumps(gts))
    return d, labels_file, gt_file
