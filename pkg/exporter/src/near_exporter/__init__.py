"""Bridge from image folders and encoders to the embedding dataset format."""

from .export import ExportError, ExportJob, export_dataset
from .mllm import MLLMClient, render_prompt

__all__ = ["ExportError", "ExportJob", "export_dataset", "MLLMClient", "render_prompt"]
