"""Command-line entry point: synth, train, eval, inspect.

Machine-readable single-line JSON goes to stdout; human-readable logs to
stderr. Exit codes: 0 success, 1 runtime/data failure, 2 usage error.
All randomness flows from --seed (env fallback NEAR_SEED).
"""

from __future__ import annotations

import json
import sys
import time

import click

from . import trainer as tr
from .data import DatasetError, load_dataset, save_dataset
from .metrics import candidate_quality
from .neighbors import build_candidate_sets
from .synth import SynthConfig, generate


def _fail(msg: str) -> "click.exceptions.Exit":
    click.echo(f"error: {msg}", err=True)
    return click.exceptions.Exit(1)


def _fraction(ctx, param, value):
    if value is not None and not 0.0 <= value <= 1.0:
        raise click.BadParameter("must lie in [0, 1]")
    return value


def _emit(doc: dict) -> None:
    click.echo(json.dumps(doc, sort_keys=True))


@click.group()
def main():
    """Noisy-label fine-grained classifier pipeline over precomputed embeddings."""


@main.command("synth")
@click.option("--classes", type=int, default=20, show_default=True)
@click.option("--dim", type=int, default=64, show_default=True)
@click.option("--shots", type=int, default=3, show_default=True)
@click.option("--shots-list", type=str, default=None,
              help="Comma-separated per-class shot counts (long-tail); overrides --shots.")
@click.option("--test-per-class", type=int, default=20, show_default=True)
@click.option("--noise", type=float, default=0.3, show_default=True, callback=_fraction)
@click.option("--spurious", type=float, default=0.2, show_default=True, callback=_fraction)
@click.option("--sigma", type=float, default=0.25, show_default=True)
@click.option("--seed", type=int, default=0, envvar="NEAR_SEED", show_default=True)
@click.option("--out-train", type=click.Path(), required=True)
@click.option("--out-test", type=click.Path(), required=True)
def cmd_synth(classes, dim, shots, shots_list, test_per_class, noise, spurious,
              sigma, seed, out_train, out_test):
    """Generate a synthetic train/test dataset pair."""
    if shots_list is not None:
        try:
            shots_list = [int(s) for s in shots_list.split(",")]
        except ValueError:
            raise click.BadParameter("--shots-list must be comma-separated integers")
    cfg = SynthConfig(num_classes=classes, dim=dim, shots=shots, shots_list=shots_list,
                      test_per_class=test_per_class, noise_rate=noise,
                      spurious_fraction=spurious, intra_class_noise=sigma, seed=seed)
    try:
        cfg.validate()
    except ValueError as e:
        raise click.UsageError(str(e))
    try:
        train, test = generate(cfg)
        save_dataset(train, out_train)
        save_dataset(test, out_test)
    except (OSError, RuntimeError) as e:
        raise _fail(str(e))
    _emit({"train": out_train, "test": out_test,
           "n_train": len(train), "n_test": len(test),
           "num_labels": len(set(train.mllm_labels()))})


def _resolve_config(config_path, overrides: dict) -> tr.TrainConfig:
    base = {}
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as f:
                base = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise click.UsageError(f"cannot read config file: {e}")
    base.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return tr.TrainConfig.from_dict(base)
    except (TypeError, ValueError) as e:
        raise click.UsageError(str(e))


@main.command("train")
@click.option("--mode", "trainer_mode", type=click.Choice(tr.MODES), default=None)
@click.option("--data", "data_path", type=click.Path(), required=True)
@click.option("--test", "test_path", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON file mirroring the training config; flags override it.")
@click.option("--kappa", type=int, default=None)
@click.option("--temperature", type=float, default=None)
@click.option("--epochs", "total_epochs", type=int, default=None)
@click.option("--warm-epochs", type=int, default=None)
@click.option("--lr", "base_lr", type=float, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--logit-scale", type=float, default=None)
@click.option("--threshold", "threshold_mode", type=click.Choice(["adaptive", "static"]),
              default=None)
@click.option("--tau", "static_tau", type=float, default=None, callback=_fraction)
@click.option("--candidate-mode", type=click.Choice(["knn", "random"]), default=None)
@click.option("--classifier-mode", type=click.Choice(["shared-offset", "linear-probe"]),
              default=None)
@click.option("--seed", type=int, default=None, envvar="NEAR_SEED")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--manifest", "manifest_path", type=click.Path(), default=None,
              help="Run manifest path [default: <out>.manifest.json].")
def cmd_train(trainer_mode, data_path, test_path, config_path, out_path, manifest_path,
              **overrides):
    """Train a model and write the model artifact plus a run manifest."""
    overrides["trainer_mode"] = trainer_mode
    config = _resolve_config(config_path, overrides)
    try:
        dataset = load_dataset(data_path)
        test = load_dataset(test_path) if test_path else None
    except DatasetError as e:
        raise _fail(str(e))

    t0 = time.monotonic()
    model, report = tr.run(config, dataset, test)
    elapsed = time.monotonic() - t0

    manifest_path = manifest_path or f"{out_path}.manifest.json"
    manifest = {
        "config": config.to_dict(),
        "seed": config.seed,
        "epochs": model.diagnostics,
        "labels": model.space.labels,
        "filtered_labels": model.filtered_labels,
        "metrics": report.to_dict() if report else None,
        "artifacts": {"model": str(out_path)},
    }
    try:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(model.to_json())
        with open(manifest_path, "w", encoding="utf-8") as f:
            json.dump(manifest, f, sort_keys=True)
    except OSError as e:
        raise _fail(str(e))
    click.echo(f"trained in {elapsed:.2f}s; artifacts at {out_path}, {manifest_path}",
               err=True)
    out = {"model": str(out_path), "manifest": str(manifest_path),
           "wall_clock_seconds": round(elapsed, 3)}
    if report:
        out.update({"cacc": report.cacc, "sacc": report.sacc})
    _emit(out)


@main.command("eval")
@click.option("--model", "model_path", type=click.Path(), required=True)
@click.option("--test", "test_path", type=click.Path(), required=True)
@click.option("--candidate-quality", "cq_data", type=click.Path(), default=None,
              help="Train dataset on which to score candidate-set quality.")
@click.option("--kappa", type=int, default=3, show_default=True)
@click.option("--candidate-mode", type=click.Choice(["knn", "random"]), default="knn",
              show_default=True)
@click.option("--seed", type=int, default=0, envvar="NEAR_SEED", show_default=True)
def cmd_eval(model_path, test_path, cq_data, kappa, candidate_mode, seed):
    """Evaluate a trained model artifact on a gt-labeled test dataset."""
    try:
        test = load_dataset(test_path)
        if not test.has_gt():
            raise DatasetError("test dataset lacks gt labels")
        model = tr.load_model(model_path, test)
        report = tr.evaluate(model, test)
        doc = report.to_dict()
        if cq_data:
            train = load_dataset(cq_data)
            if not train.has_gt():
                raise DatasetError("candidate-quality dataset lacks gt labels")
            from .data import build_label_space
            cands = build_candidate_sets(train, build_label_space(train), kappa,
                                         mode=candidate_mode, seed=seed)
            doc["candidate_quality"] = candidate_quality(
                cands, train.gt_labels(), train.label_embeddings)
    except (DatasetError, OSError, KeyError, ValueError, json.JSONDecodeError) as e:
        raise _fail(str(e))
    _emit(doc)


@main.command("inspect")
@click.argument("path", type=click.Path())
def cmd_inspect(path):
    """Dump GMM fits, threshold trajectory, partition sizes and the filtered
    label space from a run manifest (or summarize a model artifact)."""
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise _fail(str(e))
    if "epochs" in doc:  # run manifest
        table = [
            {"epoch": e["epoch"], "tau": e.get("tau"), "n_clean": e.get("n_clean"),
             "n_noisy": e.get("n_noisy"), "gmm": e.get("gmm")}
            for e in doc["epochs"] if e.get("phase") == "train"
        ]
        _emit({"epochs": table, "filtered_labels": doc.get("filtered_labels"),
               "labels": doc.get("labels")})
    elif "theta" in doc:  # model artifact
        _emit({"mode": doc.get("mode"), "labels": doc.get("labels"),
               "filtered_labels": doc.get("filtered_labels"),
               "logit_scale": doc.get("logit_scale")})
    else:
        raise _fail("not a manifest or model artifact")


if __name__ == "__main__":
    main()
