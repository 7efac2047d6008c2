"""HTTP client for chat-completion-style multimodal labelers.

Responses are cached on disk keyed by (image digest, prompt) so repeated
exports cost nothing. Requests retry up to 3 times with exponential backoff.
"""

from __future__ import annotations

import base64
import hashlib
import time
from pathlib import Path
from typing import Optional

import requests

PROMPT_PROPRIETARY = (
    "You are a multimodal AI trained to provide the best fine-grained class "
    "label for a given <dataset> image. Provide the best fine-grained class "
    "label for the given <dataset> image. Do not return anything else."
)
PROMPT_OPEN_SOURCE = (
    "Give me a fine-grained label for this <dataset>. For example, "
    "<samplelabel>. Just print the label and nothing else."
)

MAX_RETRIES = 3
BACKOFF_BASE = 0.5  # seconds; doubles per retry


class MLLMError(RuntimeError):
    """Request failed after all retries."""


def render_prompt(template: str, dataset: str, sample_label: Optional[str] = None) -> str:
    prompt = template.replace("<dataset>", dataset)
    if "<samplelabel>" in prompt:
        if not sample_label:
            raise ValueError("prompt template needs a sample label")
        prompt = prompt.replace("<samplelabel>", sample_label)
    return prompt


class MLLMClient:
    def __init__(self, base_url: str, model: str, prompt: str,
                 cache_dir: Optional[str] = None, api_key: Optional[str] = None,
                 timeout: float = 60.0, backoff: float = BACKOFF_BASE):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.prompt = prompt
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.api_key = api_key
        self.timeout = timeout
        self.backoff = backoff
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _cache_path(self, image_bytes: bytes) -> Optional[Path]:
        if not self.cache_dir:
            return None
        key = hashlib.sha256(
            hashlib.sha256(image_bytes).digest() + self.prompt.encode("utf-8")
        ).hexdigest()
        return self.cache_dir / f"{key}.txt"

    def label(self, image_bytes: bytes) -> str:
        cached = self._cache_path(image_bytes)
        if cached and cached.exists():
            return cached.read_text(encoding="utf-8")
        payload = {
            "model": self.model,
            "messages": [{
                "role": "user",
                "content": [
                    {"type": "text", "text": self.prompt},
                    {"type": "image_url", "image_url": {
                        "url": "data:image/png;base64,"
                               + base64.b64encode(image_bytes).decode("ascii")}},
                ],
            }],
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_err = None
        for attempt in range(MAX_RETRIES):
            try:
                resp = requests.post(f"{self.base_url}/chat/completions",
                                     json=payload, headers=headers,
                                     timeout=self.timeout)
                resp.raise_for_status()
                label = resp.json()["choices"][0]["message"]["content"].strip()
                if not label:
                    raise MLLMError("labeler returned an empty label")
                if cached:
                    cached.write_text(label, encoding="utf-8")
                return label
            except (requests.RequestException, KeyError, IndexError, ValueError) as e:
                last_err = e
                if attempt < MAX_RETRIES - 1:
                    time.sleep(self.backoff * (2 ** attempt))
        raise MLLMError(f"labeling failed after {MAX_RETRIES} attempts: {last_err}")
