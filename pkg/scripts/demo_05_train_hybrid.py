"""
Training the hybrid classifier on Gaussian blobs
=================================================

Five separated classes in 32 dimensions, a 3-qubit single-layer circuit
next to a small ReLU encoder, trained with AdamW and early stopping.
"""
import time

from hqtn_ser.datasets import gaussian_blobs
from hqtn_ser.model import count_params, init_hybrid
from hqtn_ser.splits import make_split
from hqtn_ser.training import TrainConfig, evaluate, fit_features, train

X, y = gaussian_blobs(n_classes=5, dim=32, per_class=200, seed=42)
plan = make_split(y, (0.6, 0.2, 0.2), seed=42)
pca, Xtr, Xva, Xte = fit_features(X, plan, k=32)

model = init_hybrid(32, 5, n_qubits=3, n_layers=1, seed=42)
print("parameters:", count_params(model))

config = TrainConfig(max_epochs=50, batch_size=8, lr_mps=0.05, lr_classic=1e-3)
t0 = time.perf_counter()
model, log = train(model, Xtr, y[plan.train], Xva, y[plan.val], config)
print(f"{log.epochs} epochs in {time.perf_counter() - t0:.1f}s, best epoch {log.best_epoch + 1} ({log.stop_reason})")
for epoch, tl, vl, ta, va in log.rows():
    if epoch % 5 == 1 or epoch == log.epochs:
        print(f"  epoch {epoch:>2}  train {tl:.4f} / {ta:.3f}   val {vl:.4f} / {va:.3f}")

report = evaluate(model, Xte, y[plan.test])
print(report.format_table())

shots = evaluate(model, Xte, y[plan.test], shots=1024, seeds=range(5))
lo, hi = shots.run_range
print(f"1024 shots over 5 seeds: {100 * shots.mean:.2f}% +- {100 * shots.std:.2f} pp (range {100 * lo:.2f}-{100 * hi:.2f})")
