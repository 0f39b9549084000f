"""Command-line entry point: train, crossval, predict, export-attention.

Output directory layout (created on demand):

    out/
      config.json            resolved-configuration snapshot
      weights/model.bin      weights container
      logs/train_log.csv     per-epoch training log
      reports/               evaluation report, PR CSVs, predictions
      attention/             attention coefficient records

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Options may also come from a key=value config file; explicit flags win.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from .data.batching import complexes_to_items
from .data.records import parse_dataset
from .errors import DataError, NumericError, ParatopeError
from .evaluation import crossvalidate, write_pr_csv, write_report
from .model.architectures import (
    ANTIBODY_ANTIGEN,
    ANTIBODY_ONLY,
    MODEL_KINDS,
    load_model,
    make_model,
)
from .model.export import export_attention, write_attention_records
from .training import TrainConfig, train, write_train_log

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

DEFAULTS = {
    "model": ANTIBODY_ONLY,
    "epochs": 20,
    "batch_size": 32,
    "lr": 0.01,
    "l2": 0.01,
    "seed": 0,
    "folds": 10,
    "runs": 10,
    "neighborhood": "auto",
    "cap": 150,
    "threshold": 0.5,
}


def read_config_file(path) -> dict:
    """Parse a key = value config file; '#' starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def resolve(option: str, flag_value, config_values: dict, cast=None):
    """Flag > config file > built-in default."""
    if flag_value is not None:
        return flag_value
    if option in config_values:
        raw = config_values[option]
        return cast(raw) if cast else raw
    return DEFAULTS.get(option)


def _load_complexes(dataset_path) -> list:
    if dataset_path is None:
        raise click.UsageError("--dataset is required (or set dataset in the config file)")
    path = Path(dataset_path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    return parse_dataset(path)


def _require_antigen_data(complexes, model_kind: str) -> None:
    if model_kind == ANTIBODY_ANTIGEN:
        missing = [cx.id for cx in complexes if cx.antigen is None]
        if missing:
            raise DataError(f"model {model_kind!r} needs antigen data; missing in {missing}")


def _write_config_snapshot(out_dir: Path, values: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(json.dumps(values, indent=2, sort_keys=True) + "\n")


_shared_options = [
    click.option("--dataset", type=str, default=None, help="Dataset file (JSON lines)."),
    click.option("--config", "config_path", type=str, default=None,
                 help="Optional key=value config file; flags win on conflict."),
    click.option("--seed", type=int, default=None, help="Random seed."),
    click.option("--neighborhood", type=click.Choice(["auto", "spatial", "window"]),
                 default=None, help="Neighborhood construction policy."),
    click.option("--cap", type=int, default=None, help="Neighborhood size cap (<= 150)."),
    click.option("--out", "out_dir", type=str, required=True, help="Output directory."),
]


def shared_options(fn):
    for opt in reversed(_shared_options):
        fn = opt(fn)
    return fn


def train_options(fn):
    for opt in reversed([
        click.option("--model", type=click.Choice(list(MODEL_KINDS)), default=None),
        click.option("--epochs", type=int, default=None),
        click.option("--batch-size", type=int, default=None),
        click.option("--lr", type=float, default=None),
        click.option("--l2", type=float, default=None),
    ]):
        fn = opt(fn)
    return fn


@click.group()
def cli():
    """Paratope prediction: training, evaluation, and attention export."""


def _resolved_common(config_path, dataset, seed, neighborhood, cap, **rest):
    config_values = read_config_file(config_path) if config_path else {}
    values = {
        "dataset": resolve("dataset", dataset, config_values),
        "seed": resolve("seed", seed, config_values, int),
        "neighborhood": resolve("neighborhood", neighborhood, config_values),
        "cap": resolve("cap", cap, config_values, int),
    }
    for key, flag in rest.items():
        cast = float if key in ("lr", "l2", "threshold") else int
        if key == "model":
            cast = str
        values[key] = resolve(key, flag, config_values, cast)
    return values


def _train_config(values) -> TrainConfig:
    return TrainConfig(
        learning_rate=values["lr"],
        epochs=values["epochs"],
        batch_size=values["batch_size"],
        l2=values["l2"],
        seed=values["seed"],
    )


@cli.command("train")
@shared_options
@train_options
def cmd_train(dataset, config_path, seed, neighborhood, cap, out_dir,
              model, epochs, batch_size, lr, l2):
    """Train a model and write weights, config snapshot, and log CSV."""
    values = _resolved_common(config_path, dataset, seed, neighborhood, cap,
                              model=model, epochs=epochs, batch_size=batch_size,
                              lr=lr, l2=l2)
    complexes = _load_complexes(values["dataset"])
    _require_antigen_data(complexes, values["model"])
    config = _train_config(values)
    net = make_model(values["model"], np.random.default_rng(values["seed"]))
    logs = train(net, complexes, config, policy=values["neighborhood"], cap=values["cap"])

    out = Path(out_dir)
    _write_config_snapshot(out, values)
    net.save(out / "weights" / "model.bin")
    write_train_log(out / "logs" / "train_log.csv", logs)
    click.echo(f"trained {values['model']} for {len(logs)} epochs; "
               f"final loss {logs[-1].train_loss:.4f}; wrote {out}")


@cli.command("crossval")
@shared_options
@train_options
@click.option("--folds", type=int, default=None)
@click.option("--runs", type=int, default=None)
@click.option("--threshold", type=float, default=None)
def cmd_crossval(dataset, config_path, seed, neighborhood, cap, out_dir,
                 model, epochs, batch_size, lr, l2, folds, runs, threshold):
    """Run repeated k-fold crossvalidation and write the report."""
    values = _resolved_common(config_path, dataset, seed, neighborhood, cap,
                              model=model, epochs=epochs, batch_size=batch_size,
                              lr=lr, l2=l2, folds=folds, runs=runs, threshold=threshold)
    complexes = _load_complexes(values["dataset"])
    _require_antigen_data(complexes, values["model"])
    report = crossvalidate(
        complexes, values["model"], _train_config(values),
        runs=values["runs"], folds=values["folds"], seed=values["seed"],
        policy=values["neighborhood"], cap=values["cap"], threshold=values["threshold"])

    out = Path(out_dir)
    _write_config_snapshot(out, values)
    write_report(out / "reports" / "report.json", report)
    for run_idx, run_points in enumerate(report.pr_points):
        for fold_idx, points in enumerate(run_points):
            write_pr_csv(out / "reports" / f"pr_run{run_idx}_fold{fold_idx}.csv", points)
    click.echo(f"crossvalidated {values['model']}: "
               f"ROC AUC {report.roc_auc.mean:.4f} "
               f"[{report.roc_auc.ci_low:.4f}, {report.roc_auc.ci_high:.4f}], "
               f"MCC {report.mcc.mean:.4f}; wrote {out}")


@cli.command("predict")
@shared_options
@click.option("--weights", type=str, required=True, help="Weights container from train.")
def cmd_predict(dataset, config_path, seed, neighborhood, cap, out_dir, weights):
    """Write per-residue binding probabilities for a dataset."""
    values = _resolved_common(config_path, dataset, seed, neighborhood, cap)
    complexes = _load_complexes(values["dataset"])
    net = load_model(weights)
    _require_antigen_data(complexes, net.kind)

    from .autodiff import no_grad
    from .data.batching import pad_and_mask

    items = complexes_to_items(complexes, net.kind == ANTIBODY_ANTIGEN,
                               values["neighborhood"], values["cap"])
    out = Path(out_dir)
    _write_config_snapshot(out, {**values, "weights": str(weights), "model": net.kind})
    pred_path = out / "reports" / "predictions.csv"
    pred_path.parent.mkdir(parents=True, exist_ok=True)
    with open(pred_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("complex_id", "chain", "residue_index", "amino_acid", "probability"))
        for start in range(0, len(items), 32):
            batch = pad_and_mask(items[start:start + 32])
            with no_grad():
                probs = model_probs = net.forward(batch, train=False).data
            for row, item in enumerate(batch.items):
                for i, aa in enumerate(item.cdr.residues):
                    writer.writerow([item.complex_id, item.cdr.chain, i, aa,
                                     f"{float(model_probs[row, i, 0]):.8f}"])
    click.echo(f"wrote predictions for {len(items)} CDRs to {pred_path}")


@cli.command("export-attention")
@shared_options
@click.option("--weights", type=str, required=True, help="Weights container from train.")
def cmd_export_attention(dataset, config_path, seed, neighborhood, cap, out_dir, weights):
    """Write normalized attention coefficients per antibody residue."""
    values = _resolved_common(config_path, dataset, seed, neighborhood, cap)
    complexes = _load_complexes(values["dataset"])
    net = load_model(weights)
    records = []
    for cx in complexes:
        records.extend(export_attention(net, cx, values["neighborhood"], values["cap"]))
    out = Path(out_dir)
    _write_config_snapshot(out, {**values, "weights": str(weights), "model": net.kind})
    path = out / "attention" / "attention.jsonl"
    write_attention_records(path, records)
    click.echo(f"wrote {len(records)} attention records to {path}")


def main(argv=None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    except NumericError as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        return EXIT_NUMERIC
    except (DataError, FileNotFoundError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return EXIT_DATA
    except ParatopeError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
