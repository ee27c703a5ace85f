"""Train/validation/test partitioning."""
from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np

SPLIT_MODES = ("stratified_random", "speaker_independent")


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class SplitPlan:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    mode: str
    ratios: tuple[float, float, float]
    seed: int

    def digest(self) -> str:
        """Short hash of the index lists, printed so runs can prove they share a split."""
        h = hashlib.sha256()
        for part in (self.train, self.val, self.test):
            h.update(np.asarray(part, dtype="<i8").tobytes())
            h.update(b"|")
        return h.hexdigest()[:12]


def _check_ratios(ratios) -> tuple[float, float, float]:
    r = tuple(float(x) for x in ratios)
    if len(r) != 3 or any(x < 0 for x in r) or abs(sum(r) - 1.0) > 1e-9:
        raise SplitError(f"split ratios must be three non-negative numbers summing to 1, got {ratios}")
    return r


def _stratified(labels: np.ndarray, ratios, rng: np.random.Generator):
    parts = ([], [], [])
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        rng.shuffle(idx)
        n = len(idx)
        n_train = int(round(ratios[0] * n))
        n_val = min(int(round(ratios[1] * n)), n - n_train)
        parts[0].append(idx[:n_train])
        parts[1].append(idx[n_train:n_train + n_val])
        parts[2].append(idx[n_train + n_val:])
    return tuple(np.sort(np.concatenate(p)) for p in parts)


def _by_speaker(speakers: np.ndarray, ratios, rng: np.random.Generator):
    ids = np.unique(speakers)
    S = len(ids)
    if S < 3:
        raise SplitError(f"speaker-independent split needs at least 3 speakers, got {S}")
    ids = ids[rng.permutation(S)]
    n_val = max(1, int(round(ratios[1] * S)))
    n_test = max(1, int(round(ratios[2] * S)))
    n_train = S - n_val - n_test
    if n_train < 1:
        n_train = 1
        n_test = S - n_train - n_val
    groups = (ids[:n_train], ids[n_train:n_train + n_val], ids[n_train + n_val:])
    return tuple(np.flatnonzero(np.isin(speakers, g)) for g in groups)


def make_split(
    labels,
    ratios=(0.6, 0.2, 0.2),
    mode: str = "stratified_random",
    seed: int = 42,
    speakers=None,
) -> SplitPlan:
    """Seeded split of record indices.

    ``stratified_random`` splits every class by the ratios.
    ``speaker_independent`` assigns whole speakers to splits; ratios are
    applied to the speaker count, which tracks utterance ratios when
    speakers contribute similar amounts.
    """
    ratios = _check_ratios(ratios)
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    if mode == "stratified_random":
        train, val, test = _stratified(labels, ratios, rng)
    elif mode == "speaker_independent":
        if speakers is None:
            raise SplitError("speaker-independent split needs speaker ids")
        speakers = np.asarray(speakers)
        if np.any(speakers < 0):
            raise SplitError("speaker-independent split needs a speaker id for every record")
        train, val, test = _by_speaker(speakers, ratios, rng)
    else:
        raise SplitError(f"unknown split mode {mode!r}")
    missing = np.setdiff1d(np.unique(labels), np.unique(labels[train]))
    if len(missing):
        warnings.warn(f"classes {missing.tolist()} absent from the training split", RuntimeWarning, stacklevel=2)
    return SplitPlan(train, val, test, mode, ratios, seed)
