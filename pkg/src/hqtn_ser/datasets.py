"""Corpus ingestion (RAVDESS, SAVEE, manifest CSV) and synthetic benchmark tasks."""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .quantum import batch_quantum_features, build_mps_circuit

RAVDESS_EMOTIONS = {
    "01": "neutral",
    "02": "calm",
    "03": "happy",
    "04": "sad",
    "05": "angry",
    "06": "fearful",
    "07": "disgust",
    "08": "surprised",
}
RAVDESS_CLASSES = tuple(RAVDESS_EMOTIONS.values())

SAVEE_CODES = {"a": "anger", "d": "disgust", "f": "fear", "h": "happiness", "n": "neutral", "sa": "sadness", "su": "surprise"}
SAVEE_CLASSES = ("anger", "disgust", "fear", "happiness", "neutral", "sadness", "surprise")
SAVEE_SPEAKERS = ("DC", "JE", "JK", "KL")

MDER_CLASSES = ("angry", "fearful", "happy", "neutral", "sad")


@dataclass(frozen=True)
class FeatureRecord:
    features: np.ndarray
    label: int
    speaker: int | None = None
    dataset_tag: str = ""


@dataclass(frozen=True)
class AudioItem:
    path: Path
    label: int
    speaker: int  # -1 when unknown


def parse_ravdess_name(name: str) -> tuple[str, int]:
    """'03-01-05-01-01-01-12.wav' -> ('angry', 12).

    Fields: modality, channel, emotion, intensity, statement, repetition, actor.
    """
    stem = Path(name).stem
    parts = stem.split("-")
    if len(parts) != 7 or not all(p.isdigit() for p in parts):
        raise ValueError(f"not a RAVDESS file name: {name}")
    if parts[2] not in RAVDESS_EMOTIONS:
        raise ValueError(f"unknown RAVDESS emotion code {parts[2]} in {name}")
    return RAVDESS_EMOTIONS[parts[2]], int(parts[6])


_SAVEE_RE = re.compile(r"^(?:(?P<spk>[A-Za-z]{2})_)?(?P<code>sa|su|[adfhn])(?P<num>\d+)$")


def parse_savee_path(path) -> tuple[str, str | None]:
    """Emotion and speaker from 'DC/sa03.wav' or 'DC_sa03.wav' style paths."""
    path = Path(path)
    m = _SAVEE_RE.match(path.stem)
    if not m:
        raise ValueError(f"not a SAVEE file name: {path.name}")
    speaker = m.group("spk") or path.parent.name or None
    return SAVEE_CODES[m.group("code")], speaker.upper() if speaker else None


def scan_ravdess(root) -> list[AudioItem]:
    items = []
    for p in sorted(Path(root).rglob("*.wav")):
        try:
            emotion, actor = parse_ravdess_name(p.name)
        except ValueError:
            continue
        items.append(AudioItem(p, RAVDESS_CLASSES.index(emotion), actor))
    return items


def scan_savee(root) -> list[AudioItem]:
    items = []
    speaker_ids: dict[str, int] = {}
    for p in sorted(Path(root).rglob("*.wav")):
        try:
            emotion, speaker = parse_savee_path(p)
        except ValueError:
            continue
        sid = speaker_ids.setdefault(speaker, len(speaker_ids)) if speaker else -1
        items.append(AudioItem(p, SAVEE_CLASSES.index(emotion), sid))
    return items


def read_manifest(path, classes=None) -> tuple[list[AudioItem], tuple[str, ...]]:
    """CSV rows ``path,label[,speaker]``; relative paths resolve against the manifest.

    Labels may be class names or integer indices.  Without ``classes`` the
    class list is the sorted set of names seen.
    """
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#") or row[0].strip().lower() == "path":
                continue
            rows.append([c.strip() for c in row])
    if classes is None:
        names = {r[1] for r in rows}
        classes = tuple(sorted(names, key=lambda s: (not s.isdigit(), int(s) if s.isdigit() else 0, s)))
    classes = tuple(classes)
    speaker_ids: dict[str, int] = {}
    items = []
    for r in rows:
        label = r[1]
        idx = classes.index(label) if label in classes else int(label)
        audio = Path(r[0])
        if not audio.is_absolute():
            audio = path.parent / audio
        sid = speaker_ids.setdefault(r[2], len(speaker_ids)) if len(r) > 2 and r[2] else -1
        items.append(AudioItem(audio, idx, sid))
    return items, classes


# -- synthetic tasks ---------------------------------------------------------

def gaussian_blobs(
    n_classes: int = 5,
    dim: int = 32,
    per_class: int = 200,
    separation: float = 5.0,
    sigma: float = 1.0,
    seed: int = 42,
):
    """Isotropic Gaussian classes whose means are pairwise ``separation * sigma`` apart.

    Means sit on a random orthonormal frame scaled by separation/sqrt(2).
    Returns (X, y) with rows grouped by class.
    """
    if n_classes > dim:
        raise ValueError("need dim >= n_classes for orthogonal class means")
    rng = np.random.default_rng(seed)
    frame, _ = np.linalg.qr(rng.normal(size=(dim, n_classes)))
    means = frame.T * (separation * sigma / np.sqrt(2.0))
    X = np.concatenate([m + sigma * rng.normal(size=(per_class, dim)) for m in means])
    y = np.repeat(np.arange(n_classes), per_class)
    return X, y


def circuit_task(
    n_samples: int = 600,
    dim: int = 32,
    n_classes: int = 3,
    n_qubits: int = 3,
    n_layers: int = 1,
    seed: int = 7,
):
    """Labels produced by a hidden MPS circuit acting on a hidden projection of x.

    Returns (X, y, truth) where ``truth`` holds the generating parameters.
    A quantum-only model of matching size can represent the labelling
    exactly, so it is a sanity task for the quantum branch.
    """
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n_samples, dim))
    circuit = build_mps_circuit(n_qubits, n_layers)
    P = rng.normal(size=(n_qubits, dim)) * (np.pi / 2) / np.sqrt(dim)
    b = rng.uniform(-np.pi / 4, np.pi / 4, size=n_qubits)
    theta = rng.uniform(-np.pi, np.pi, size=circuit.n_params)
    z = batch_quantum_features(circuit, X @ P.T + b, theta)
    W = rng.normal(size=(n_classes, n_qubits))
    scores = z @ W.T
    # centre the scores so classes come out roughly balanced
    scores -= np.median(scores, axis=0)
    y = scores.argmax(axis=1)
    return X, y, {"P": P, "b": b, "theta": theta, "W": W}
