"""Waveform loading and log-mel feature extraction.

The STFT / filterbank defaults follow the common speech-toolkit conventions
(2048-point frames, hop 512, periodic Hann window, reflect-padded centred
frames, Slaney mel scale with area-normalised triangles).  At 22050 Hz and a
5 s budget this gives 216 frames, i.e. a 216 x 128 = 27648 dim feature.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

SAMPLE_RATE = 22050
MAX_SECONDS = 5.0
N_MELS = 128
N_FFT = 2048
HOP_LENGTH = 512
DB_FLOOR = -80.0
AMIN = 1e-10
T_MAX = 1 + int(SAMPLE_RATE * MAX_SECONDS) // HOP_LENGTH  # 216


class WavFormatError(ValueError):
    """The file is not a well-formed RIFF/WAVE container."""


class UnsupportedWavError(ValueError):
    """Well-formed WAVE file using a codec we do not decode."""


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def load_wav(path) -> Waveform:
    """Read a PCM (8/16/24/32-bit) or 32-bit float WAV file as mono float64.

    Integer PCM is scaled by the magnitude of the type's most negative value,
    so a 16-bit sample of 32767 maps to 32767/32768.  Stereo (or any
    multichannel) input is averaged across channels.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(12)
    if len(head) < 12 or head[:4] not in (b"RIFF", b"RIFX", b"RF64") or head[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: missing RIFF/WAVE header")

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except ValueError as exc:
        msg = str(exc)
        if "Unknown wave file format" in msg or "Unsupported" in msg or "not supported" in msg:
            raise UnsupportedWavError(f"{path}: {msg}") from exc
        raise WavFormatError(f"{path}: {msg}") from exc
    except EOFError as exc:
        raise WavFormatError(f"{path}: truncated file") from exc

    if data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        # scipy left-justifies 24-bit PCM into int32, so one divisor covers both
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise UnsupportedWavError(f"{path}: sample type {data.dtype} not supported")

    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if samples.size == 0:
        raise WavFormatError(f"{path}: no audio frames")
    return Waveform(samples, int(rate))


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Linear-interpolation resampler.

    Cheap and adequate for 44.1 -> 22.05 kHz speech; it does not apply an
    anti-aliasing filter, so content above the new Nyquist folds back.
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == w.sample_rate:
        return w
    n_in = len(w.samples)
    n_out = int(round(n_in * target_rate / w.sample_rate))
    t_out = np.arange(n_out) * (w.sample_rate / target_rate)
    out = np.interp(t_out, np.arange(n_in), w.samples)
    return Waveform(out, target_rate)


def pad_or_truncate(w: Waveform, max_seconds: float = MAX_SECONDS) -> Waveform:
    if max_seconds <= 0:
        raise ValueError("max_seconds must be positive")
    target = int(round(max_seconds * w.sample_rate))
    n = len(w.samples)
    if n == target:
        return w
    if n > target:
        return Waveform(w.samples[:target].copy(), w.sample_rate)
    out = np.zeros(target, dtype=np.float64)
    out[:n] = w.samples
    return Waveform(out, w.sample_rate)


# -- mel scale (Slaney: linear below 1 kHz, logarithmic above) -------------

_F_SP = 200.0 / 3
_MIN_LOG_HZ = 1000.0
_MIN_LOG_MEL = _MIN_LOG_HZ / _F_SP
_LOGSTEP = np.log(6.4) / 27.0


def hz_to_mel(freq):
    freq = np.asanyarray(freq, dtype=np.float64)
    mel = freq / _F_SP
    log_region = freq >= _MIN_LOG_HZ
    return np.where(
        log_region,
        _MIN_LOG_MEL + np.log(np.maximum(freq, _MIN_LOG_HZ) / _MIN_LOG_HZ) / _LOGSTEP,
        mel,
    )


def mel_to_hz(mel):
    mel = np.asanyarray(mel, dtype=np.float64)
    freq = _F_SP * mel
    log_region = mel >= _MIN_LOG_MEL
    return np.where(log_region, _MIN_LOG_HZ * np.exp(_LOGSTEP * (mel - _MIN_LOG_MEL)), freq)


def mel_band_edges(sample_rate: int = SAMPLE_RATE, n_mels: int = N_MELS) -> np.ndarray:
    """n_mels + 2 frequencies (Hz); band i spans edges[i]..edges[i+2], peak at edges[i+1]."""
    return mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_mels + 2))


def mel_filterbank(sample_rate: int = SAMPLE_RATE, n_fft: int = N_FFT, n_mels: int = N_MELS) -> np.ndarray:
    """Triangular filters, shape (n_mels, n_fft // 2 + 1), each scaled to unit area in Hz/2."""
    fft_freqs = np.linspace(0.0, sample_rate / 2.0, n_fft // 2 + 1)
    edges = mel_band_edges(sample_rate, n_mels)
    widths = np.diff(edges)
    ramps = edges[:, None] - fft_freqs[None, :]
    lower = -ramps[:-2] / widths[:-1, None]
    upper = ramps[2:] / widths[1:, None]
    weights = np.maximum(0.0, np.minimum(lower, upper))
    weights *= (2.0 / (edges[2:] - edges[:-2]))[:, None]
    return weights


def _hann(n: int) -> np.ndarray:
    # periodic window (DFT-even), as used for spectral analysis
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def power_spectrogram(samples: np.ndarray, n_fft: int = N_FFT, hop: int = HOP_LENGTH) -> np.ndarray:
    """|STFT|^2 with centred, reflect-padded frames; shape (frames, n_fft // 2 + 1)."""
    pad = n_fft // 2
    mode = "reflect" if len(samples) > pad else "constant"
    y = np.pad(np.asarray(samples, dtype=np.float64), pad, mode=mode)
    n_frames = 1 + (len(y) - n_fft) // hop
    frames = np.lib.stride_tricks.sliding_window_view(y, n_fft)[::hop][:n_frames]
    spec = np.fft.rfft(frames * _hann(n_fft), axis=1)
    return spec.real**2 + spec.imag**2


def mel_spectrogram(w: Waveform, n_mels: int = N_MELS, n_fft: int = N_FFT, hop: int = HOP_LENGTH) -> np.ndarray:
    """Mel power spectrogram, shape (T, n_mels), time-major."""
    power = power_spectrogram(w.samples, n_fft, hop)
    return power @ mel_filterbank(w.sample_rate, n_fft, n_mels).T


def power_to_db(m: np.ndarray, floor_db: float = DB_FLOOR, amin: float = AMIN) -> np.ndarray:
    """Decibels relative to the global maximum, clamped below at ``floor_db``.

    An all-zero (or all sub-``amin``) input maps entirely to the floor.
    """
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 0):
        raise ValueError("power values must be non-negative")
    peak = m.max() if m.size else 0.0
    if peak < amin:
        return np.full(m.shape, floor_db)
    db = 10.0 * np.log10(np.maximum(m, amin) / peak)
    return np.maximum(db, floor_db)


def fix_time_and_vectorize(m: np.ndarray, t_max: int = T_MAX, pad_value: float = DB_FLOOR) -> np.ndarray:
    """Crop or pad (with ``pad_value``) the time axis to ``t_max`` rows, then flatten row-major."""
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    m = np.asarray(m, dtype=np.float64)
    out = np.full((t_max, m.shape[1]), pad_value)
    rows = min(t_max, m.shape[0])
    out[:rows] = m[:rows]
    return out.reshape(-1)


def extract_features(path, t_max: int = T_MAX) -> np.ndarray:
    """Full per-file pipeline: load, resample, fix duration, log-mel, vectorize."""
    w = load_wav(path)
    w = resample(w, SAMPLE_RATE)
    w = pad_or_truncate(w, MAX_SECONDS)
    return fix_time_and_vectorize(power_to_db(mel_spectrogram(w)), t_max)
