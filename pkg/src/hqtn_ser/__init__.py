"""Hybrid quantum tensor-network speech emotion recognition (numpy statevector backend)."""
from .audio import extract_features, load_wav, mel_spectrogram, power_to_db
from .metrics import MetricsReport, compute_metrics
from .model import HybridParams, backward, count_params, forward, init_hybrid
from .pca import PcaModel, fit_pca, pca_transform
from .quantum import MpsCircuit, StateVector, build_mps_circuit, quantum_features, run_circuit
from .splits import SplitPlan, make_split
from .training import TrainConfig, TrainLog, evaluate, run_ablation, train

__version__ = "0.1.0"
