"""WAV ingestion/output and sample-rate utilities.

Reads PCM 16/24/32-bit and 32/64-bit float WAV, normalizing to float64 in
[-1, 1]. Output is always 32-bit float at the caller's sample rate.
"""

import math
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

ANALYSIS_RATE_HZ = 44100


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a WAV file as float64 samples in [-1, 1].

    Returns (samples, sample_rate); samples has shape (n,) for mono or
    (n, channels) otherwise.
    """
    rate, data = wavfile.read(str(path))
    if data.size == 0:
        raise ValueError(f"empty audio file: {path}")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        # 24-bit PCM arrives left-justified in int32
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    else:
        raise ValueError(f"unsupported WAV sample format {data.dtype} in {path}")
    return samples, int(rate)


def write_wav_float32(path, samples: np.ndarray, sample_rate: int) -> None:
    """Write samples as a 32-bit float WAV, shape (n,) or (n, channels)."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(str(path), int(sample_rate), np.asarray(samples, dtype=np.float32))


def downmix_mono(samples: np.ndarray) -> np.ndarray:
    """Mean of channels; mono input passes through."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        return samples
    return samples.mean(axis=1)


def resample_to(samples: np.ndarray, sample_rate: int, target_rate: int) -> np.ndarray:
    """Polyphase resampling of mono audio to target_rate (no-op if equal)."""
    if sample_rate == target_rate:
        return np.asarray(samples, dtype=np.float64)
    g = math.gcd(int(sample_rate), int(target_rate))
    return resample_poly(np.asarray(samples, dtype=np.float64), target_rate // g, sample_rate // g)
