"""Batch command line: ``preprocess``, ``train``, ``eval``, ``ablate``.

Exit codes: 0 success, 2 usage, 3 I/O, 4 file format / compatibility,
5 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import datasets
from .audio import T_MAX, UnsupportedWavError, WavFormatError, extract_features
from .config import DATASET_DEFAULTS, DATASETS, RunConfig, read_config_file, resolve_config
from .io import FormatError, load_checkpoint, read_feature_cache, save_checkpoint, write_feature_cache
from .model import MODES, count_params, init_hybrid
from .splits import SplitError, make_split
from .training import TrainingDivergedError, evaluate, export_curves, fit_features, run_ablation, train

log = logging.getLogger("hqtn_ser")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_FORMAT, EXIT_NUMERIC = 0, 2, 3, 4, 5
DATA_ROOT_ENV = "HQTN_DATA_ROOT"


class UsageError(Exception):
    pass


class IncompatibleError(FormatError):
    pass


def class_names(dataset: str, n_classes: int) -> list[str]:
    names = {"ravdess": datasets.RAVDESS_CLASSES, "savee": datasets.SAVEE_CLASSES, "mder": datasets.MDER_CLASSES}
    known = names.get(dataset)
    if known is not None and len(known) == n_classes:
        return list(known)
    return [f"class{i}" for i in range(n_classes)]


def _defaults_help() -> str:
    rows = ["per-dataset defaults:"]
    keys = ("split", "max_epochs", "n_qubits", "n_layers", "batch_size", "lr_mps", "lr_classic", "split_mode")
    for name, d in DATASET_DEFAULTS.items():
        rows.append(f"  {name:<10}" + ", ".join(f"{k}={d[k]}" for k in keys))
    rows.append("  common    sample_rate=22050, n_mels=128, max_seconds=5, k=32, optimizer=AdamW, seed=42")
    return "\n".join(rows)


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration (flags > --config file > dataset defaults)")
    g.add_argument("--config", help="INI file with key = value entries (any section)")
    g.add_argument("--dataset", choices=DATASETS, help="dataset kind; selects the default hyperparameters")
    g.add_argument("--cache", help="feature cache path")
    g.add_argument("--out-dir", dest="out_dir", help="directory for checkpoints, curves and reports")
    g.add_argument("--n-qubits", dest="n_qubits", type=int, help="qubits n (RAVDESS 4, SAVEE 3, MDER 3)")
    g.add_argument("--n-layers", dest="n_layers", type=int, help="MPS layers L (RAVDESS 2, SAVEE 1, MDER 1)")
    g.add_argument("--k", type=int, help="PCA components (default 32)")
    g.add_argument("--split", help="train/val/test ratios, e.g. 70/15/15 (RAVDESS) or 60/20/20 (SAVEE, MDER)")
    g.add_argument("--split-mode", dest="split_mode", choices=("stratified_random", "speaker_independent"))
    g.add_argument("--max-epochs", dest="max_epochs", type=int, help="epoch budget (RAVDESS 50, SAVEE 75, MDER 40)")
    g.add_argument("--batch-size", dest="batch_size", type=int, help="mini-batch size (RAVDESS 16, SAVEE 8, MDER 8)")
    g.add_argument("--lr-mps", dest="lr_mps", type=float, help="circuit learning rate (RAVDESS 0.1, SAVEE/MDER 0.05)")
    g.add_argument("--lr-classic", dest="lr_classic", type=float, help="classical learning rate (1e-3)")
    g.add_argument("--weight-decay", dest="weight_decay", type=float, help="AdamW decoupled decay (0.01)")
    g.add_argument("--patience", type=int, help="early-stopping patience in epochs (10)")
    g.add_argument("--monitor", choices=("val_loss", "val_acc"), help="early-stopping metric (val_loss)")
    g.add_argument("--seed", type=int, help="global seed (42)")
    g.add_argument("--mode", choices=MODES, help="model variant (hybrid)")
    g.add_argument("--hidden", help="encoder hidden widths, comma separated (64)")
    g.add_argument("--latent", type=int, help="encoder output width d_c (16)")
    g.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hqtn-ser",
        description="Hybrid quantum tensor-network speech emotion recognition.",
        epilog=_defaults_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="extract log-mel features into a cache file",
                       epilog=_defaults_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(p)
    p.add_argument("--data-root", dest="data_root", help=f"audio root (default ${DATA_ROOT_ENV})")
    p.add_argument("--manifest", help="CSV path,label[,speaker] (MDER-style corpora)")
    p.add_argument("--t-max", dest="t_max", type=int, help=f"frames kept per clip ({T_MAX})")
    p.add_argument("--synthetic-per-class", dest="synthetic_per_class", type=int, default=200)

    p = sub.add_parser("train", help="fit PCA, train, write checkpoint, curves and metrics",
                       epilog=_defaults_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(p)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--shots", type=int, help="finite-shot evaluation (e.g. 1024)")
    p.add_argument("--shot-seeds", dest="shot_seeds", type=int, help="independent shot evaluations (5)")

    p = sub.add_parser("ablate", help="train classical_only / quantum_only / hybrid on one split",
                       epilog=_defaults_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(p)
    return parser


_CONFIG_KEYS = {f for f in RunConfig.__dataclass_fields__}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}
    overrides = {k: v for k, v in vars(args).items() if k in _CONFIG_KEYS}
    if overrides.get("data_root") is None and "data_root" not in file_values and os.environ.get(DATA_ROOT_ENV):
        overrides["data_root"] = os.environ[DATA_ROOT_ENV]
    try:
        return resolve_config(None, file_values, overrides)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def _require_cache(cfg: RunConfig) -> Path:
    if not cfg.cache:
        raise UsageError("--cache is required")
    path = Path(cfg.cache)
    if not path.exists():
        raise FileNotFoundError(f"cache not found: {path}")
    return path


def _split_for(cfg: RunConfig, labels, speakers):
    return make_split(labels, cfg.split, cfg.split_mode, cfg.seed, speakers=speakers)


# -- commands ----------------------------------------------------------------

def cmd_preprocess(cfg: RunConfig, args) -> int:
    out = Path(cfg.cache or Path(cfg.out_dir) / f"{cfg.dataset}_features.bin")
    out.parent.mkdir(parents=True, exist_ok=True)

    if cfg.dataset == "synthetic":
        X, y = datasets.gaussian_blobs(per_class=args.synthetic_per_class, seed=cfg.seed)
        write_feature_cache(out, X, y, n_classes=int(y.max()) + 1)
        _print_counts(y, class_names("synthetic", int(y.max()) + 1))
        print(f"wrote {len(y)} records to {out}")
        return EXIT_OK

    if cfg.manifest:
        known = datasets.MDER_CLASSES if cfg.dataset == "mder" else None
        try:
            items, names = datasets.read_manifest(cfg.manifest, known)
        except ValueError:
            items, names = datasets.read_manifest(cfg.manifest)
    else:
        if not cfg.data_root:
            raise UsageError(f"--data-root (or ${DATA_ROOT_ENV}) is required")
        root = Path(cfg.data_root)
        if not root.is_dir():
            raise FileNotFoundError(f"audio root not found: {root}")
        if cfg.dataset == "ravdess":
            items, names = datasets.scan_ravdess(root), list(datasets.RAVDESS_CLASSES)
        elif cfg.dataset == "savee":
            items, names = datasets.scan_savee(root), list(datasets.SAVEE_CLASSES)
        else:
            raise UsageError("MDER-style corpora need --manifest")

    feats, labels, speakers, skipped = [], [], [], 0
    for item in items:
        try:
            feats.append(extract_features(item.path, cfg.t_max).astype(np.float32))
        except (OSError, WavFormatError, UnsupportedWavError) as exc:
            log.warning("skipping %s: %s", item.path, exc)
            skipped += 1
            continue
        labels.append(item.label)
        speakers.append(item.speaker)
    if not feats:
        raise FileNotFoundError(f"no usable audio files found ({skipped} unreadable)")
    y = np.array(labels)
    write_feature_cache(out, np.stack(feats), y, np.array(speakers), n_classes=len(names))
    _print_counts(y, names)
    print(f"wrote {len(y)} records to {out} ({skipped} skipped)")
    return EXIT_OK


def _print_counts(y, names) -> None:
    counts = np.bincount(y, minlength=len(names))
    for name, c in zip(names, counts):
        print(f"{name:<12}{c:>6d}")
    print(f"{'total':<12}{counts.sum():>6d}")


def cmd_train(cfg: RunConfig, args) -> int:
    X, y, speakers, n_classes = read_feature_cache(_require_cache(cfg))
    plan = _split_for(cfg, y, speakers)
    pca, Xtr, Xva, Xte = fit_features(X, plan, cfg.k)
    init = init_hybrid(cfg.k, n_classes, cfg.n_qubits, cfg.n_layers, cfg.mode, cfg.hidden, cfg.latent, cfg.seed)
    t0 = time.perf_counter()
    model, history = train(init, Xtr, y[plan.train], Xva, y[plan.val], cfg.train_config())
    elapsed = time.perf_counter() - t0
    report = evaluate(model, Xte, y[plan.test])
    names = class_names(cfg.dataset, n_classes)
    counts = count_params(model)

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "model.ckpt", model, pca, cfg.to_dict())
    export_curves(history, out / "curves.csv")
    text = report.format_table(names)
    summary = {
        "dataset": cfg.dataset,
        "mode": cfg.mode,
        "split_digest": plan.digest(),
        "epochs": history.epochs,
        "best_epoch": history.best_epoch + 1,
        "stop_reason": history.stop_reason,
        "train_seconds": round(elapsed, 3),
        "params": counts,
        "test": report.to_dict(names),
    }
    (out / "metrics.txt").write_text(text + "\n")
    (out / "metrics.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(text)
    print(f"params: quantum={counts['quantum']} classical={counts['classical']} total={counts['total']}")
    print(f"epochs={history.epochs} best={history.best_epoch + 1} ({history.stop_reason}); split {plan.digest()}")
    print(f"wrote {out / 'model.ckpt'}, {out / 'curves.csv'}, {out / 'metrics.json'}")
    return EXIT_OK


def cmd_eval(cfg: RunConfig, args) -> int:
    if args.shots is not None and args.shots < 1:
        raise UsageError("--shots must be >= 1")
    if cfg.shot_seeds < 1:
        raise UsageError("--shot-seeds must be >= 1")
    params, pca, saved = load_checkpoint(args.checkpoint)
    X, y, speakers, n_classes = read_feature_cache(_require_cache(cfg))
    if pca is None or pca.dim != X.shape[1]:
        raise IncompatibleError(f"checkpoint expects {pca.dim if pca else '?'}-dim features, cache has {X.shape[1]}")
    if params.n_classes != n_classes:
        raise IncompatibleError(f"checkpoint has {params.n_classes} classes, cache has {n_classes}")
    # the split protocol is taken from the checkpoint so eval sees the same test indices
    split_cfg = resolve_config(saved.get("dataset", cfg.dataset), {
        k: saved[k] for k in ("split", "split_mode", "seed") if k in saved
    })
    plan = _split_for(split_cfg, y, speakers)
    Xte = pca.transform(X[plan.test])
    names = class_names(saved.get("dataset", cfg.dataset), n_classes)

    if args.shots is None:
        report = evaluate(params, Xte, y[plan.test])
        print(report.format_table(names))
        return EXIT_OK
    if params.mode == "classical_only":
        raise UsageError("shot evaluation needs a model with a quantum branch")
    seeds = list(range(cfg.seed, cfg.seed + cfg.shot_seeds))
    res = evaluate(params, Xte, y[plan.test], shots=args.shots, seeds=seeds)
    print(f"exact accuracy: {100 * res.exact.accuracy:.2f}%")
    for s, acc in zip(seeds, res.accuracies):
        print(f"  seed {s}: {100 * acc:.2f}%")
    lo, hi = res.run_range
    print(f"{'Mean Acc.':>10} {'Std.':>12} {'Run Range':>16}")
    print(f"{100 * res.mean:>9.2f}% {'+-' + format(100 * res.std, '.2f') + ' pp':>12} "
          f"{100 * lo:>7.2f}-{100 * hi:.2f}%")
    return EXIT_OK


def cmd_ablate(cfg: RunConfig, args) -> int:
    X, y, speakers, n_classes = read_feature_cache(_require_cache(cfg))
    plan = _split_for(cfg, y, speakers)
    res = run_ablation(X, y, plan, cfg.train_config(), n_classes, cfg.k, cfg.n_qubits, cfg.n_layers,
                       cfg.hidden, cfg.latent)
    print(f"dataset: {cfg.dataset}")
    print(res.format_table())
    return EXIT_OK


COMMANDS = {"preprocess": cmd_preprocess, "train": cmd_train, "eval": cmd_eval, "ablate": cmd_ablate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](cfg, args)
    except (UsageError, SplitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (TrainingDivergedError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
