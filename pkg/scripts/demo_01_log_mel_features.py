"""
Log-mel features from a waveform
================================

A two-tone signal is pushed through the feature pipeline: resample to
22050 Hz, pad to 5 s, 128-band mel power spectrum, dB scale, flatten.
"""
import numpy as np

from hqtn_ser import audio
from hqtn_ser.audio import Waveform

# a 440 Hz tone for two seconds, then 1760 Hz, recorded at 44.1 kHz
sr = 44100
t = np.arange(2 * sr) / sr
signal = np.concatenate([np.sin(2 * np.pi * 440 * t), 0.5 * np.sin(2 * np.pi * 1760 * t)])

w = audio.pad_or_truncate(audio.resample(Waveform(signal, sr), audio.SAMPLE_RATE), audio.MAX_SECONDS)
print("samples after resample + pad:", len(w))

mel = audio.mel_spectrogram(w)
print("mel spectrogram (frames, bands):", mel.shape)

# the loudest band in each half tracks the tone
edges = audio.mel_band_edges()
centres = edges[1:-1]
for name, rows in (("first tone", slice(5, 80)), ("second tone", slice(95, 170))):
    band = int(mel[rows].sum(axis=0).argmax())
    print(f"{name}: strongest band {band}, centre {centres[band]:.0f} Hz")

db = audio.power_to_db(mel)
print("dB range: %.1f to %.1f" % (db.min(), db.max()))

x = audio.fix_time_and_vectorize(db, audio.T_MAX)
print("feature vector length:", x.size)
