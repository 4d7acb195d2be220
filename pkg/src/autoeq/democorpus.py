"""Tiny synthesized corpus of instrument-like WAV files.

Six classes with distinct spectral envelopes (harmonic stacks for tonal
instruments, shaped noise for percussion, formant-filtered mix for voice).
Every sample also passes through a random parametric EQ, so recordings of a
class share a family resemblance while differing in exactly the way the
matching system is supposed to correct.

Generation is deterministic: sample (class c, index i) draws from its own
seed stream, so corpora are byte-identical across runs and machines.
"""

from pathlib import Path

import numpy as np

from .audio_io import ANALYSIS_RATE_HZ, write_wav_float32
from .datagen import sample_random_settings
from .filters import process_audio, settings_from_arrays

DEMO_CLASSES = ("bass", "cymbal", "guitar", "keys", "snare", "voice")

# tonal classes: (f0 range Hz, harmonic count, amplitude decay exponent)
_TONAL = {
    "bass": ((55.0, 100.0), 14, 1.6),
    "guitar": ((110.0, 175.0), 18, 1.1),
    "keys": ((220.0, 440.0), 12, 1.4),
    "voice": ((185.0, 280.0), 14, 1.3),
}
# noise classes: log-frequency envelope anchor points (Hz, dB)
_NOISE_ENVELOPES = {
    "snare": [(20, -34), (150, -10), (400, -2), (1500, 0), (4000, -2), (8000, -10), (22000, -22)],
    "cymbal": [(20, -40), (500, -18), (3000, -4), (8000, 0), (15000, -2), (22000, -6)],
    "voice": [(20, -40), (300, -8), (500, 0), (900, -6), (1500, -3), (2500, -8), (4000, -20), (22000, -36)],
    "bass": [(20, -6), (80, 0), (300, -14), (2000, -30), (22000, -44)],
    "guitar": [(20, -24), (200, -4), (800, 0), (3000, -12), (22000, -34)],
    "keys": [(20, -20), (300, -2), (1000, 0), (4000, -16), (22000, -36)],
}
# how much of the signal is shaped noise vs harmonics
_NOISE_MIX = {"bass": 0.05, "guitar": 0.15, "keys": 0.1, "voice": 0.5, "snare": 1.0, "cymbal": 1.0}


def _shaped_noise(rng: np.random.Generator, n: int, fs: float, anchors) -> np.ndarray:
    """White noise spectrally shaped by log-interpolated dB anchors."""
    spec = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    log_f = np.log(np.maximum(freqs, 1.0))
    xs = np.log([a[0] for a in anchors])
    ys = np.array([a[1] for a in anchors], dtype=np.float64)
    gain = 10.0 ** (np.interp(log_f, xs, ys) / 20.0)
    return np.fft.irfft(spec * gain, n)


def _harmonic_stack(rng: np.random.Generator, n: int, fs: float, name: str) -> np.ndarray:
    (f_lo, f_hi), count, decay = _TONAL[name]
    f0 = f_lo * (f_hi / f_lo) ** rng.random()
    t = np.arange(n) / fs
    out = np.zeros(n)
    for k in range(1, count + 1):
        if k * f0 >= fs / 2:
            break
        amp = k ** (-decay) * (0.7 + 0.6 * rng.random())
        out += amp * np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi))
    # slow amplitude movement so frames differ a little
    out *= 1.0 + 0.2 * np.sin(2 * np.pi * rng.uniform(0.3, 1.5) * t + rng.uniform(0, 2 * np.pi))
    return out


def synth_demo_signal(name: str, rng: np.random.Generator, duration_s: float = 2.0,
                      fs: int = ANALYSIS_RATE_HZ) -> np.ndarray:
    if name not in DEMO_CLASSES:
        raise ValueError(f"unknown demo class {name!r}")
    n = int(round(duration_s * fs))
    noise = _shaped_noise(rng, n, fs, _NOISE_ENVELOPES[name])
    noise /= np.max(np.abs(noise)) + 1e-12
    mix = _NOISE_MIX[name]
    signal = mix * noise
    if name in _TONAL:
        tone = _harmonic_stack(rng, n, fs, name)
        tone /= np.max(np.abs(tone)) + 1e-12
        signal = signal + (1.0 - mix) * tone
    # per-recording coloration the matcher is supposed to undo (gains
    # moderated so class identity stays recognizable)
    draw = sample_random_settings(rng)
    coloration = settings_from_arrays(
        [b.freq_hz for b in draw.bands],
        [0.7 * b.gain_db for b in draw.bands],
        [draw.bands[1].q, draw.bands[2].q],
    )
    signal = process_audio(signal, coloration, float(fs))
    return 0.5 * signal / (np.max(np.abs(signal)) + 1e-12)


def build_demo_corpus(out_dir, per_class: int = 12, seed: int = 0,
                      duration_s: float = 2.0, classes=DEMO_CLASSES) -> Path:
    """Write WAVs plus a `corpus.csv` manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = ["path,instrument_class"]
    for ci, name in enumerate(classes):
        for i in range(per_class):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(ci, i)))
            samples = synth_demo_signal(name, rng, duration_s)
            fname = f"{name}_{i:03d}.wav"
            write_wav_float32(out_dir / fname, samples, ANALYSIS_RATE_HZ)
            rows.append(f"{fname},{name}")
    manifest = out_dir / "corpus.csv"
    manifest.write_text("\n".join(rows) + "\n")
    return manifest
