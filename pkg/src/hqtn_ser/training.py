"""Training loop with early stopping, evaluation (exact and finite-shot), ablations."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metrics import MetricsReport, compute_metrics
from .model import MODES, HybridParams, forward, init_hybrid, loss_and_grads
from .nn import AdamW, cross_entropy_with_logits
from .pca import PcaModel, fit_pca
from .splits import SplitPlan

log = logging.getLogger(__name__)

CURVE_FIELDS = ("epoch", "train_loss", "val_loss", "train_acc", "val_acc")


class TrainingDivergedError(FloatingPointError):
    pass


@dataclass
class TrainConfig:
    max_epochs: int = 75
    batch_size: int = 8
    lr_mps: float = 0.05
    lr_classic: float = 1e-3
    patience: int = 10
    monitor: str = "val_loss"  # or "val_acc"
    weight_decay: float = 0.01
    seed: int = 42


@dataclass
class TrainLog:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)
    best_epoch: int = -1  # 0-based
    stop_reason: str = ""

    @property
    def epochs(self) -> int:
        return len(self.train_loss)

    def rows(self):
        for i in range(self.epochs):
            yield (i + 1, self.train_loss[i], self.val_loss[i], self.train_acc[i], self.val_acc[i])


def predict_proba(params: HybridParams, X, shots: int | None = None, rng=None, chunk: int = 512) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    out = [forward(params, X[i:i + chunk], shots=shots, rng=rng)[0] for i in range(0, len(X), chunk)]
    return np.concatenate(out) if out else np.zeros((0, params.n_classes))


def predict(params: HybridParams, X, shots: int | None = None, rng=None) -> np.ndarray:
    return predict_proba(params, X, shots, rng).argmax(axis=1)


def loss_and_accuracy(params: HybridParams, X, y) -> tuple[float, float]:
    probs, cache = forward(params, np.atleast_2d(X))
    loss, _ = cross_entropy_with_logits(cache.logits, y)
    return loss, float(np.mean(probs.argmax(axis=1) == np.asarray(y)))


def make_optimizer(params: HybridParams, config: TrainConfig) -> AdamW:
    return AdamW(
        lrs={"quantum": config.lr_mps, "classical": config.lr_classic},
        groups=params.param_groups(),
        decay=params.decay_names(),
        weight_decay=config.weight_decay,
    )


def train(params: HybridParams, X_train, y_train, X_val, y_val, config: TrainConfig):
    """Mini-batch AdamW with early stopping; returns (best snapshot, TrainLog).

    ``params`` is not modified.  After every epoch the full train and
    validation sets are re-scored; the snapshot with the best monitored
    validation metric is kept and training stops after ``patience`` epochs
    without improvement.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    y_train = np.asarray(y_train)
    X_val = np.asarray(X_val, dtype=np.float64)
    y_val = np.asarray(y_val)
    if len(X_train) == 0 or len(X_val) == 0:
        raise ValueError("train and validation sets must be non-empty")
    if config.monitor not in ("val_loss", "val_acc"):
        raise ValueError(f"unknown monitor {config.monitor!r}")

    model = params.copy()
    arrays = model.arrays()
    opt = make_optimizer(model, config)
    rng = np.random.default_rng(config.seed)
    history = TrainLog()
    best = model.copy()
    best_score = math.inf
    stale = 0

    for epoch in range(config.max_epochs):
        order = rng.permutation(len(X_train))
        for b, start in enumerate(range(0, len(order), config.batch_size)):
            idx = order[start:start + config.batch_size]
            loss, grads, _ = loss_and_grads(model, X_train[idx], y_train[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch + 1}, batch {b} "
                    f"(lr_mps={config.lr_mps}, lr_classic={config.lr_classic})"
                )
            opt.step(arrays, grads)

        tr_loss, tr_acc = loss_and_accuracy(model, X_train, y_train)
        va_loss, va_acc = loss_and_accuracy(model, X_val, y_val)
        if not (np.isfinite(tr_loss) and np.isfinite(va_loss)):
            raise TrainingDivergedError(
                f"non-finite epoch loss at epoch {epoch + 1} "
                f"(lr_mps={config.lr_mps}, lr_classic={config.lr_classic})"
            )
        history.train_loss.append(tr_loss)
        history.val_loss.append(va_loss)
        history.train_acc.append(tr_acc)
        history.val_acc.append(va_acc)
        log.debug("epoch %d train %.4f/%.3f val %.4f/%.3f", epoch + 1, tr_loss, tr_acc, va_loss, va_acc)

        score = va_loss if config.monitor == "val_loss" else -va_acc
        if score < best_score:
            best_score = score
            best = model.copy()
            history.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                history.stop_reason = f"early stop: no improvement for {config.patience} epochs"
                break
    else:
        history.stop_reason = "max epochs reached"
    return best, history


@dataclass
class ShotEvaluation:
    exact: MetricsReport
    reports: list[MetricsReport]
    shots: int
    seeds: list[int]

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([r.accuracy for r in self.reports])

    @property
    def mean(self) -> float:
        return float(self.accuracies.mean())

    @property
    def std(self) -> float:
        return float(self.accuracies.std(ddof=1)) if len(self.reports) > 1 else 0.0

    @property
    def run_range(self) -> tuple[float, float]:
        return float(self.accuracies.min()), float(self.accuracies.max())


def evaluate(params: HybridParams, X, y, shots: int | None = None, seeds=None):
    """Exact metrics, or with ``shots`` a ShotEvaluation with one report per seed."""
    y = np.asarray(y)
    if len(y) == 0:
        raise ValueError("evaluation set is empty")
    exact = compute_metrics(y, predict(params, X), params.n_classes)
    if shots is None:
        return exact
    if shots < 1:
        raise ValueError("shots must be >= 1")
    seeds = list(seeds) if seeds is not None else [0, 1, 2, 3, 4]
    reports = [
        compute_metrics(y, predict(params, X, shots=shots, rng=np.random.default_rng(s)), params.n_classes)
        for s in seeds
    ]
    return ShotEvaluation(exact, reports, shots, seeds)


def fit_features(X, plan: SplitPlan, k: int) -> tuple[PcaModel, np.ndarray, np.ndarray, np.ndarray]:
    """PCA fitted on the train indices only, applied to all three splits."""
    X = np.asarray(X, dtype=np.float64)
    pca = fit_pca(X[plan.train], k)
    return pca, pca.transform(X[plan.train]), pca.transform(X[plan.val]), pca.transform(X[plan.test])


@dataclass
class AblationResult:
    accuracy: dict[str, float]
    split_digest: str
    logs: dict[str, TrainLog]
    models: dict[str, HybridParams]

    def format_table(self) -> str:
        lines = [f"{'variant':<16}{'accuracy':>10}  split"]
        for mode in ("classical_only", "quantum_only", "hybrid"):
            if mode in self.accuracy:
                lines.append(f"{mode:<16}{self.accuracy[mode]:>10.4f}  {self.split_digest}")
        return "\n".join(lines)


def run_ablation(
    X,
    y,
    plan: SplitPlan,
    config: TrainConfig,
    n_classes: int,
    k: int = 32,
    n_qubits: int = 3,
    n_layers: int = 1,
    hidden: tuple[int, ...] = (64,),
    latent: int = 16,
    modes=MODES,
) -> AblationResult:
    """Train every variant on one split, one seed and one budget; report test accuracy."""
    y = np.asarray(y)
    _, Xtr, Xva, Xte = fit_features(X, plan, k)
    acc, logs, models = {}, {}, {}
    for mode in modes:
        init = init_hybrid(k, n_classes, n_qubits, n_layers, mode, hidden, latent, config.seed)
        model, history = train(init, Xtr, y[plan.train], Xva, y[plan.val], config)
        acc[mode] = evaluate(model, Xte, y[plan.test]).accuracy
        logs[mode] = history
        models[mode] = model
    return AblationResult(acc, plan.digest(), logs, models)


def export_curves(history: TrainLog, path) -> Path:
    """Per-epoch CSV; floats written with repr so they round-trip exactly."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_FIELDS)
        for row in history.rows():
            writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
    return path


def load_curves(path) -> TrainLog:
    history = TrainLog()
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            history.train_loss.append(float(row["train_loss"]))
            history.val_loss.append(float(row["val_loss"]))
            history.train_acc.append(float(row["train_acc"]))
            history.val_acc.append(float(row["val_acc"]))
    return history
