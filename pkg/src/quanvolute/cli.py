"""Command-line entry point: train / eval / compare / qcnn-demo.

Exit codes: 0 success, 2 usage or configuration error, 3 data error
(missing or malformed files), 4 training divergence.

Determinism contract: for a fixed (config, seed), every byte of emitted CSV
and checkpoint files is identical across runs and across --threads values.
Measured wall times therefore go to stdout; the CSV wall_time_s column is 0
unless --timings explicitly trades byte-reproducibility for real timings.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .config import DATA_DIR_ENV, MODEL_KINDS, TrainConfig, load_config_file, resolve_config
from .errors import (
    DataConsistencyError,
    FormatError,
    ShapeError,
    TrainingDivergenceError,
)
from .mnist import load_dataset
from .models import MetricRecord, ModelSpec, evaluate, infer_spec, train_model
from .nn import make_optimizer
from .qcnn import build_qcnn, init_qcnn_params, synth_dataset, train_qcnn

CSV_HEADER = "model,epoch,train_loss,train_acc,eval_acc,wall_time_s"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

_DATA_ERRORS = (FileNotFoundError, OSError, FormatError, DataConsistencyError, ShapeError)


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _metric_line(model: str, rec: MetricRecord, timings: bool) -> str:
    wall = rec.wall_time_s if timings else 0.0
    return ",".join(
        [
            model,
            str(rec.epoch),
            _fmt(rec.train_loss),
            _fmt(rec.train_acc),
            _fmt(rec.eval_acc),
            _fmt(wall),
        ]
    )


def write_metrics_csv(path, rows, timings: bool) -> None:
    """rows: iterable of (model_name, MetricRecord)."""
    lines = [CSV_HEADER]
    lines += [_metric_line(model, rec, timings) for model, rec in rows]
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quanvolute",
        description="Hybrid quantum-classical training experiments on downscaled digit images.",
    )
    parser.add_argument("--version", action="version", version=f"quanvolute {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=str, default=None, help="flat key=value config file")
        p.add_argument("--seed", type=int, default=None, help="64-bit experiment seed")
        p.add_argument("--data-dir", type=str, default=None, help=f"IDX data directory (or ${DATA_DIR_ENV})")
        p.add_argument("--out", type=str, default=None, help="output directory for CSV/checkpoints")
        p.add_argument("--threads", type=int, default=None, help="worker thread cap (same bytes for any value)")
        p.add_argument("--timings", action="store_true", default=None, help="write measured wall times into the CSV (breaks byte-reproducibility)")

    def add_train_like(p: argparse.ArgumentParser) -> None:
        add_common(p)
        p.add_argument("--model", choices=MODEL_KINDS, default=None)
        p.add_argument("--epochs", type=int, default=None)
        p.add_argument("--stride", type=int, default=None)
        p.add_argument("--channels", type=int, default=None)
        p.add_argument("--samples-per-epoch", type=int, default=None)
        p.add_argument("--batch-size", type=int, default=None)
        p.add_argument("--eval-size", type=int, default=None)
        p.add_argument("--full-eval", action="store_true", default=None, help="evaluate on the whole test split")
        p.add_argument("--lr-classical", type=float, default=None)
        p.add_argument("--lr-quantum", type=float, default=None)
        p.add_argument("--optimizer", choices=("adam", "sgd"), default=None)
        p.add_argument("--cnn-relu", action="store_true", default=None, help="ReLU after the classical conv layer")

    p_train = sub.add_parser("train", help="train one model, write metrics CSV + checkpoint")
    add_train_like(p_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    add_common(p_eval)
    p_eval.add_argument("--ckpt", type=str, required=True, help="checkpoint file to evaluate")
    p_eval.add_argument("--eval-size", type=int, default=None)
    p_eval.add_argument("--full-eval", action="store_true", default=None)
    p_eval.add_argument("--cnn-relu", action="store_true", default=None)

    p_cmp = sub.add_parser("compare", help="train fc, cnn, and qcnn with one seed; combined CSV + summary")
    add_train_like(p_cmp)

    p_demo = sub.add_parser("qcnn-demo", help="train the reversed-MERA QCNN on the synthetic state task")
    add_common(p_demo)
    p_demo.add_argument("--n-qubits", type=int, choices=(4, 8), default=4)
    p_demo.add_argument("--pool-mode", choices=("controlled_gate", "measure_correct"), default="controlled_gate")
    p_demo.add_argument("--epochs", type=int, default=None)
    p_demo.add_argument("--dataset-size", type=int, default=200, help="training examples (held-out adds half)")
    return parser


def _config_from_args(args) -> TrainConfig:
    file_values = load_config_file(args.config) if args.config else None
    overrides = {
        key: getattr(args, attr)
        for key, attr in (
            ("model", "model"),
            ("epochs", "epochs"),
            ("seed", "seed"),
            ("data_dir", "data_dir"),
            ("out_dir", "out"),
            ("threads", "threads"),
            ("stride", "stride"),
            ("channels", "channels"),
            ("samples_per_epoch", "samples_per_epoch"),
            ("batch_size", "batch_size"),
            ("eval_size", "eval_size"),
            ("full_eval", "full_eval"),
            ("lr_classical", "lr_classical"),
            ("lr_quantum", "lr_quantum"),
            ("optimizer", "optimizer"),
            ("cnn_relu", "cnn_relu"),
            ("timings", "timings"),
        )
        if hasattr(args, attr)
    }
    return resolve_config(file_values, overrides)


def _load_splits(config: TrainConfig):
    data_dir = config.resolve_data_dir()
    return load_dataset(data_dir, "train"), load_dataset(data_dir, "test")


def _out_dir(config: TrainConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(config: TrainConfig) -> int:
    train_ds, test_ds = _load_splits(config)
    if config.samples_per_epoch > len(train_ds):
        raise DataConsistencyError(
            f"samples_per_epoch {config.samples_per_epoch} exceeds train size {len(train_ds)}"
        )
    params, records = train_model(config, train_ds, test_ds, log=print)
    out = _out_dir(config)
    csv_path = out / f"{config.model}_metrics.csv"
    ckpt_path = out / f"{config.model}.ckpt"
    write_metrics_csv(csv_path, [(config.model, r) for r in records], config.timings)
    save_checkpoint(ckpt_path, params)
    print(f"wrote {csv_path} and {ckpt_path}")
    return EXIT_OK


def cmd_eval(config: TrainConfig, ckpt_path: str) -> int:
    params = load_checkpoint(ckpt_path)
    spec = infer_spec(params, config.cnn_relu)
    data_dir = config.resolve_data_dir()
    test_ds = load_dataset(data_dir, "test")
    eval_size = None if config.full_eval else config.eval_size
    accuracy, confusion = evaluate(spec, params, test_ds, eval_size, config.threads)
    print(f"model {spec.kind} accuracy {_fmt(accuracy)}")
    print("confusion matrix (rows = true digit, columns = predicted):")
    for digit, row in enumerate(confusion):
        print(f"  {digit}: " + " ".join(f"{int(c):4d}" for c in row))
    return EXIT_OK


def cmd_compare(config: TrainConfig) -> int:
    train_ds, test_ds = _load_splits(config)
    if config.samples_per_epoch > len(train_ds):
        raise DataConsistencyError(
            f"samples_per_epoch {config.samples_per_epoch} exceeds train size {len(train_ds)}"
        )
    out = _out_dir(config)
    rows = []
    finals = []
    for kind in ("fc", "cnn", "qcnn"):
        run_config = resolve_config(
            {**{f: getattr(config, f) for f in config.__dataclass_fields__}, "model": kind}
        )
        params, records = train_model(run_config, train_ds, test_ds, log=print)
        save_checkpoint(out / f"{kind}.ckpt", params)
        rows += [(kind, r) for r in records]
        finals.append((kind, records[-1].eval_acc if records else float("nan")))
    csv_path = out / "compare_metrics.csv"
    write_metrics_csv(csv_path, rows, config.timings)
    print(f"wrote {csv_path}")
    print("final eval accuracy (descending):")
    for kind, acc in sorted(finals, key=lambda item: -item[1]):
        print(f"  {kind:5s} {_fmt(acc)}")
    return EXIT_OK


def cmd_qcnn_demo(config: TrainConfig, n_qubits: int, pool_mode: str, dataset_size: int) -> int:
    model = build_qcnn(n_qubits, pool_mode)
    total = dataset_size + dataset_size // 2
    if total % 2:
        total += 1
    full = synth_dataset(n_qubits, total, config.seed)
    train_set = full.subset(range(dataset_size))
    heldout = full.subset(range(dataset_size, total))
    optimizer = make_optimizer(config.optimizer, 0.05 if config.optimizer == "sgd" else 0.02)
    values, history = train_qcnn(
        model,
        train_set,
        epochs=config.epochs,
        optimizer=optimizer,
        seed=config.seed,
        eval_dataset=heldout,
        init_params=init_qcnn_params(model, config.seed),
    )
    out = _out_dir(config)
    name = f"mera{n_qubits}-{pool_mode}"
    records = [
        MetricRecord(h["epoch"], h["loss"], h["accuracy"], h["eval_accuracy"], 0.0)
        for h in history
    ]
    csv_path = out / "qcnn_demo_metrics.csv"
    write_metrics_csv(csv_path, [(name, r) for r in records], timings=False)
    save_checkpoint(out / f"{name}.ckpt", {"qcnn.params": np.asarray(values)})
    pairs = len(model.stages) // 2
    print(f"n={n_qubits}: {pairs} conv/pool stage pairs, depth {model.depth()}, "
          f"active trajectory {'->'.join(str(a) for a in model.active_trajectory)}")
    if history:
        print(f"final train accuracy {_fmt(history[-1]['accuracy'])}, "
              f"held-out accuracy {_fmt(history[-1]['eval_accuracy'])}")
    print(f"wrote {csv_path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
    except (ValueError, TypeError, FormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "train":
            return cmd_train(config)
        if args.command == "eval":
            return cmd_eval(config, args.ckpt)
        if args.command == "compare":
            return cmd_compare(config)
        if args.command == "qcnn-demo":
            return cmd_qcnn_demo(config, args.n_qubits, args.pool_mode, args.dataset_size)
        parser.error(f"unknown command {args.command!r}")
    except TrainingDivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
