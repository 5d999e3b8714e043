"""Command-line entry point: train, eval, gradcheck, inspect.

Configs are flat JSON with every field defaulted except the dataset source;
unknown keys are rejected.  All file writes are atomic (temp + rename) and
all outputs are deterministic for a fixed config and seed, except the
wall-clock timings which live in their own sidecar file.

Exit codes: 0 success, 2 usage/config error, 3 divergence, 4 gradcheck
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, gen_blobs, gen_spirals, load_csv, normalize
from .gradcheck import run_battery
from .indicators import indicator_forward
from .network import (
    ACTIVATION_NAMES,
    BnCareluLayer,
    CareluLayer,
    CheckpointError,
    DivergedError,
    Network,
    TrainConfig,
    evaluate,
    mlp_spec,
    restore_network,
    save_checkpoint,
    train,
)
from .tensor import ShapeError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_GRADCHECK = 4

_TRAIN_SEED_OFFSET = 1_000_000
_TEST_SEED_OFFSET = 2_000_000


class ConfigError(ValueError):
    pass


_ACTIVATION_ALIASES = {
    "relu": "relu",
    "leakyrelu": "leaky_relu",
    "leaky_relu": "leaky_relu",
    "prelu": "prelu",
    "swish_1": "swish1",
    "swish1": "swish1",
    "swish": "swish",
    "carelu_e": "carelu_e",
    "carelu_l1": "carelu_l1",
    "carelu_c": "carelu_c",
    "bn_carelu_e": "bn_carelu_e",
    "bn_carelu_l1": "bn_carelu_l1",
    "bn_carelu_c": "bn_carelu_c",
}


def normalize_activation(name: str) -> str:
    key = str(name).strip().lower().replace("-", "_")
    if key not in _ACTIVATION_ALIASES:
        raise ConfigError(
            f"activation: unknown name {name!r} (choose from "
            f"{', '.join(sorted(set(_ACTIVATION_ALIASES.values())))})")
    canonical = _ACTIVATION_ALIASES[key]
    assert canonical in ACTIVATION_NAMES
    return canonical


@dataclass
class RunConfig:
    dataset: str = ""                 # spirals | blobs | csv; the one required field
    n_train: int = 400
    n_test: int = 400
    spiral_turns: float = 1.5
    spiral_noise: float = 0.05
    blob_classes: int = 2
    blob_dim: int = 2
    blob_spread: float = 0.5
    csv_train_path: str = ""
    csv_test_path: str = ""
    csv_label_col: int = 0
    csv_has_header: bool = False
    csv_delimiter: str = ","
    normalize: str = "none"
    activation: str = "relu"
    hidden: list = field(default_factory=lambda: [32, 32])
    optimizer: str = "sgd"
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 5e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    schedule: list = field(default_factory=list)
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = RunConfig()
    known = set(cfg.__dataclass_fields__)
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown config field: {key}")
    for key, value in raw.items():
        setattr(cfg, key, value)
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: RunConfig):
    if cfg.dataset not in ("spirals", "blobs", "csv"):
        raise ConfigError(
            f"dataset: must be one of spirals, blobs, csv (got {cfg.dataset!r})")
    cfg.activation = normalize_activation(cfg.activation)
    if cfg.optimizer not in ("sgd", "adam"):
        raise ConfigError(f"optimizer: must be sgd or adam (got {cfg.optimizer!r})")
    if cfg.normalize not in ("none", "standardize"):
        raise ConfigError(f"normalize: must be none or standardize")
    if not isinstance(cfg.hidden, list) or not cfg.hidden or \
            any((not isinstance(h, int)) or h < 1 for h in cfg.hidden):
        raise ConfigError("hidden: must be a non-empty list of positive integers")
    if not isinstance(cfg.epochs, int) or cfg.epochs < 0:
        raise ConfigError("epochs: must be a non-negative integer")
    if not isinstance(cfg.batch_size, int) or cfg.batch_size < 2:
        raise ConfigError("batch_size: must be an integer >= 2")
    if not isinstance(cfg.seed, int):
        raise ConfigError("seed: must be an integer")
    for entry in cfg.schedule:
        if (not isinstance(entry, (list, tuple)) or len(entry) != 2
                or int(entry[0]) < 1 or float(entry[1]) <= 0):
            raise ConfigError(
                "schedule: must be a list of [milestone_epoch, divisor] pairs")
    if cfg.dataset == "csv":
        if not cfg.csv_train_path or not cfg.csv_test_path:
            raise ConfigError("csv dataset needs csv_train_path and csv_test_path")
    else:
        if cfg.n_train < 2 or cfg.n_test < 1:
            raise ConfigError("n_train must be >= 2 and n_test >= 1")
        if cfg.dataset == "spirals" and (cfg.n_train % 2 or cfg.n_test % 2):
            raise ConfigError("spirals: n_train and n_test must be even")
        if cfg.dataset == "blobs" and (cfg.n_train % cfg.blob_classes
                                       or cfg.n_test % cfg.blob_classes):
            raise ConfigError("blobs: sizes must divide evenly by blob_classes")


def dataset_descriptors(cfg: RunConfig) -> tuple[dict, dict]:
    """Fully resolved generator descriptors for the train and test splits."""
    if cfg.dataset == "spirals":
        base = {"dataset": "spirals", "turns": cfg.spiral_turns,
                "noise": cfg.spiral_noise}
        train_d = dict(base, n=cfg.n_train, seed=cfg.seed + _TRAIN_SEED_OFFSET,
                       split="train")
        test_d = dict(base, n=cfg.n_test, seed=cfg.seed + _TEST_SEED_OFFSET,
                      split="test")
    elif cfg.dataset == "blobs":
        base = {"dataset": "blobs", "classes": cfg.blob_classes,
                "dim": cfg.blob_dim, "spread": cfg.blob_spread}
        train_d = dict(base, n=cfg.n_train, seed=cfg.seed + _TRAIN_SEED_OFFSET,
                       split="train")
        test_d = dict(base, n=cfg.n_test, seed=cfg.seed + _TEST_SEED_OFFSET,
                      split="test")
    else:
        base = {"dataset": "csv", "label_col": cfg.csv_label_col,
                "has_header": cfg.csv_has_header, "delimiter": cfg.csv_delimiter}
        train_d = dict(base, path=cfg.csv_train_path, split="train")
        test_d = dict(base, path=cfg.csv_test_path, split="test")
    return train_d, test_d


def load_descriptor(desc: dict) -> Dataset:
    kind = desc.get("dataset")
    if kind == "spirals":
        return gen_spirals(int(desc["n"]) // 2, turns=float(desc["turns"]),
                           noise=float(desc["noise"]), seed=int(desc["seed"]),
                           split=desc.get("split", "train"))
    if kind == "blobs":
        return gen_blobs(int(desc["n"]) // int(desc["classes"]),
                         int(desc["classes"]), int(desc["dim"]),
                         float(desc["spread"]), int(desc["seed"]),
                         split=desc.get("split", "train"))
    if kind == "csv":
        return load_csv(desc["path"], label_col=int(desc.get("label_col", 0)),
                        has_header=bool(desc.get("has_header", False)),
                        delimiter=desc.get("delimiter", ","),
                        split=desc.get("split", "train"))
    raise ConfigError(f"unknown dataset kind {kind!r}")


def load_data_source(path, args) -> Dataset:
    """``--data`` accepts a .csv file or a JSON dataset descriptor."""
    if str(path).endswith(".csv"):
        return load_csv(path, label_col=args.label_col,
                        has_header=args.has_header, delimiter=args.delimiter,
                        split="test")
    try:
        with open(path, "r", encoding="utf-8") as f:
            desc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read dataset descriptor {path}: {e}") from e
    return load_descriptor(desc)


# --- output helpers ---------------------------------------------------------

def _atomic_write(path, data: bytes):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


# --- telemetry ----------------------------------------------------------------

def collect_telemetry(net: Network, features, batch_size: int = 512) -> list:
    """Per CAS layer, the pre-tanh values u = alpha*p + beta over the set.

    Returns [(ordinal, u_values)] with ordinals 1-based in network order.
    """
    cas_layers = [layer for _, layer in net.cas_layers()]
    collected = {id(layer): [] for layer in cas_layers}
    n = features.shape[0]
    for start in range(0, n, batch_size):
        x = features[start:start + batch_size]
        for layer in net.layers:
            if isinstance(layer, (CareluLayer, BnCareluLayer)):
                p = indicator_forward(layer.kind, x, layer._eps).p
                collected[id(layer)].append(float(layer.alpha) * p
                                            + float(layer.beta))
            x = layer.forward(x, train=False)
    return [(ordinal, np.concatenate(collected[id(layer)]))
            for ordinal, layer in net.cas_layers()]


def _histogram(u: np.ndarray, bins: int = 64):
    lo = float(u.min())
    hi = float(u.max())
    if lo == hi:
        lo -= 0.5
        hi += 0.5
    counts, edges = np.histogram(u, bins=bins, range=(lo, hi))
    return counts, edges


# --- subcommands ----------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = load_config(args.config)
    train_desc, test_desc = dataset_descriptors(cfg)
    train_ds = load_descriptor(train_desc)
    test_ds = load_descriptor(test_desc)
    if train_ds.n == 0 or test_ds.n == 0:
        raise ConfigError("dataset is empty")
    train_ds, test_ds, warn = normalize(train_ds, test_ds, cfg.normalize)
    for w in warn:
        print(f"warning: {w}", file=sys.stderr)

    n_classes = max(train_ds.n_classes, test_ds.n_classes)
    spec = mlp_spec(train_ds.features.shape[1], cfg.hidden, n_classes,
                    cfg.activation, "cross_entropy", cfg.seed)
    tc = TrainConfig(epochs=cfg.epochs, batch_size=cfg.batch_size,
                     optimizer=cfg.optimizer, lr=cfg.lr, momentum=cfg.momentum,
                     weight_decay=cfg.weight_decay, adam_beta1=cfg.adam_beta1,
                     adam_beta2=cfg.adam_beta2, adam_eps=cfg.adam_eps,
                     schedule=[(int(m), float(d)) for m, d in cfg.schedule])
    report, net, best_state = train(spec, train_ds.features, train_ds.labels,
                                    test_ds.features, test_ds.labels, tc)

    out = args.out
    os.makedirs(out, exist_ok=True)
    _atomic_write(os.path.join(out, "dataset_train.json"),
                  json.dumps(train_desc, sort_keys=True, indent=2).encode())
    _atomic_write(os.path.join(out, "dataset_test.json"),
                  json.dumps(test_desc, sort_keys=True, indent=2).encode())
    _write_csv(os.path.join(out, "metrics.csv"),
               ["epoch", "train_loss", "train_acc", "test_acc", "lr"],
               [(s.epoch, s.train_loss, s.train_acc, s.test_acc, s.lr)
                for s in report.epochs])
    _write_csv(os.path.join(out, "timings.csv"), ["epoch", "seconds"],
               [(s.epoch, s.seconds) for s in report.epochs])
    meta = {"activation": cfg.activation, "best_epoch": report.best_epoch,
            "best_test_metric": report.best_test_metric, "epochs": cfg.epochs}
    tmp_final = os.path.join(out, "final.ckpt.tmp")
    save_checkpoint(tmp_final, spec, net.state_dict(), meta)
    os.replace(tmp_final, os.path.join(out, "final.ckpt"))
    tmp_best = os.path.join(out, "best.ckpt.tmp")
    save_checkpoint(tmp_best, spec, best_state, meta)
    os.replace(tmp_best, os.path.join(out, "best.ckpt"))
    last = report.epochs[-1]
    print(f"trained {cfg.epochs} epochs: train_acc={last.train_acc:.4f} "
          f"test_acc={last.test_acc:.4f} (best epoch {report.best_epoch})")
    return EXIT_OK


def cmd_eval(args) -> int:
    net, _meta = restore_network(args.ckpt)
    ds = load_data_source(args.data, args)
    if ds.n == 0:
        raise ConfigError("dataset is empty")
    d_in = net.spec.layers[0]["d_in"] if net.spec.layers else ds.features.shape[1]
    if ds.features.shape[1] != d_in:
        raise ConfigError(
            f"dataset has {ds.features.shape[1]} features, network expects {d_in}")
    metrics = evaluate(net, ds.features, ds.labels, net.spec.loss)
    metric_name = "accuracy" if "accuracy" in metrics else "mse"
    os.makedirs(args.out, exist_ok=True)
    _write_csv(os.path.join(args.out, "eval.csv"),
               ["loss", metric_name, "n"],
               [(metrics["loss"], metrics[metric_name], metrics["n"])])
    print(f"loss={metrics['loss']!r} {metric_name}={metrics[metric_name]!r} "
          f"n={metrics['n']}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    reports = run_battery(seed=args.seed, points=args.points, tol=args.tol,
                          tol_network=args.tol_network)
    os.makedirs(args.out, exist_ok=True)
    _write_csv(os.path.join(args.out, "gradcheck.csv"),
               ["name", "max_rel_err", "argmax", "h", "tol", "passed"],
               [(r.name, r.max_rel_err, r.argmax, r.h, r.tol, int(r.passed))
                for r in reports])
    for r in reports:
        print(r)
    failures = [r for r in reports if not r.passed]
    if failures:
        print(f"{len(failures)} gradient check(s) failed:", file=sys.stderr)
        for r in failures:
            print(f"  {r.name}: {r.max_rel_err:.3e} > {r.tol:g}", file=sys.stderr)
        return EXIT_GRADCHECK
    print(f"all {len(reports)} gradient checks passed")
    return EXIT_OK


def cmd_inspect(args) -> int:
    net, _meta = restore_network(args.ckpt)
    if not net.cas_layers():
        raise ConfigError("checkpoint contains no CAS layers to inspect")
    ds = load_data_source(args.data, args)
    if ds.n == 0:
        raise ConfigError("dataset is empty")
    os.makedirs(args.out, exist_ok=True)
    telemetry = collect_telemetry(net, ds.features)
    rows = []
    for ordinal, u in telemetry:
        scale = np.tanh(u)
        rows.append((ordinal, float(scale.mean()), float(scale.std()), u.size))
        counts, edges = _histogram(u, bins=args.bins)
        _write_csv(os.path.join(args.out, f"hist_layer{ordinal}.csv"),
                   ["bin_lo", "bin_hi", "count"],
                   [(float(edges[i]), float(edges[i + 1]), int(counts[i]))
                    for i in range(len(counts))])
    _write_csv(os.path.join(args.out, "telemetry.csv"),
               ["layer", "mean", "std", "n"], rows)
    for ordinal, mean, std, n in rows:
        print(f"cas layer {ordinal}: tanh(alpha*p + beta) = {mean:.6f} "
              f"+/- {std:.6f} over {n} samples")
    return EXIT_OK


# --- argument parsing -------------------------------------------------------------

def _add_data_flags(p):
    p.add_argument("--data", required=True,
                   help="dataset: a .csv file or a JSON descriptor")
    p.add_argument("--label-col", type=int, default=0, dest="label_col")
    p.add_argument("--has-header", action="store_true", dest="has_header")
    p.add_argument("--delimiter", default=",")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carelu",
        description="Train and inspect small dense networks with "
                    "competition-based adaptive activations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a network from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--ckpt", required=True)
    _add_data_flags(p)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="run the analytic-vs-numeric battery")
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--tol-network", type=float, default=1e-4, dest="tol_network")
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("inspect", help="per-layer CAS telemetry and histograms")
    p.add_argument("--ckpt", required=True)
    _add_data_flags(p)
    p.add_argument("--out", default=".")
    p.add_argument("--bins", type=int, default=64)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse already printed a usage message
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, CheckpointError, ShapeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergedError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
