"""
Ablation on a circuit-generated task
====================================

Labels come from a hidden 3-qubit circuit applied to a hidden projection
of the inputs.  The three model variants share one split, one seed and
one budget.
"""
from hqtn_ser.datasets import circuit_task
from hqtn_ser.splits import make_split
from hqtn_ser.training import TrainConfig, run_ablation

X, y, truth = circuit_task(n_samples=3000, n_classes=3, seed=42)
plan = make_split(y, (0.6, 0.2, 0.2), seed=42)
config = TrainConfig(max_epochs=75, batch_size=8, lr_mps=0.05, lr_classic=1e-3)

result = run_ablation(X, y, plan, config, n_classes=3)
print(result.format_table())
for mode, log in result.logs.items():
    print(f"{mode:<16} stopped after {log.epochs} epochs (best {log.best_epoch + 1})")
