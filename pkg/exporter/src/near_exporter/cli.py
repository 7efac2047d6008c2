"""near-export: build a dataset file from an image directory."""

from __future__ import annotations

import sys

import click

from .encoders import IMAGE_ENCODERS, TEXT_ENCODERS, make_image_encoder, make_text_encoder
from .export import ExportError, ExportJob, export_dataset
from .mllm import PROMPT_OPEN_SOURCE, PROMPT_PROPRIETARY, MLLMClient, MLLMError, render_prompt


@click.command()
@click.option("--images", "image_dir", type=click.Path(), required=True)
@click.option("--out", "output_path", type=click.Path(), required=True)
@click.option("--labels", "labels_file", type=click.Path(), default=None,
              help="JSON mapping image filename -> generated label (skips the MLLM).")
@click.option("--gt", "gt_file", type=click.Path(), default=None,
              help="JSON mapping image filename -> ground-truth label.")
@click.option("--dim", type=int, default=64, show_default=True)
@click.option("--image-encoder", type=click.Choice(sorted(IMAGE_ENCODERS)),
              default="hash", show_default=True)
@click.option("--text-encoder", type=click.Choice(sorted(TEXT_ENCODERS)),
              default="hash", show_default=True)
@click.option("--mllm-url", default=None, help="Chat-completions endpoint base URL.")
@click.option("--mllm-model", default="gpt-4o")
@click.option("--mllm-key", default=None, envvar="NEAR_EXPORT_API_KEY")
@click.option("--prompt-style", type=click.Choice(["proprietary", "open-source"]),
              default="proprietary", show_default=True)
@click.option("--dataset-name", default="image",
              help="Substituted for the template's dataset placeholder.")
@click.option("--sample-label", default=None,
              help="Example label (required by the open-source prompt style).")
@click.option("--cache-dir", type=click.Path(), default=None,
              help="Disk cache for MLLM responses.")
def main(image_dir, output_path, labels_file, gt_file, dim, image_encoder,
         text_encoder, mllm_url, mllm_model, mllm_key, prompt_style,
         dataset_name, sample_label, cache_dir):
    if labels_file is None and mllm_url is None:
        raise click.UsageError("provide --labels or --mllm-url")
    mllm = None
    if labels_file is None:
        template = PROMPT_PROPRIETARY if prompt_style == "proprietary" else PROMPT_OPEN_SOURCE
        try:
            prompt = render_prompt(template, dataset_name, sample_label)
        except ValueError as e:
            raise click.UsageError(str(e))
        mllm = MLLMClient(mllm_url, mllm_model, prompt, cache_dir=cache_dir,
                          api_key=mllm_key)
    job = ExportJob(
        image_dir=image_dir, output_path=output_path,
        image_encoder=make_image_encoder(image_encoder, dim),
        text_encoder=make_text_encoder(text_encoder, dim),
        labels_file=labels_file, gt_file=gt_file, mllm=mllm,
    )
    try:
        doc = export_dataset(job)
    except (ExportError, MLLMError, OSError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)
    click.echo(f"wrote {output_path}: {len(doc['images'])} images, "
               f"{len(doc['label_embeddings'])} labels", err=True)


if __name__ == "__main__":
    main()
