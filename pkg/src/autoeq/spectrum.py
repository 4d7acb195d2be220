"""Spectral analysis: STFT in dB, log-grid warping, averaging, smoothing,
and spectral difference curves (the matching model's input).

All curve-valued results are float64 arrays aligned to the canonical
256-bin log-frequency grid.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import ANALYSIS_RATE_HZ, downmix_mono, resample_to
from .grid import log_frequency_grid

DB_FLOOR_MAGNITUDE = 1e-8  # -160 dB; applied before log conversion
DEFAULT_SMOOTH_SIGMA = 3.0
DEFAULT_LIMIT_DB = 12.0


@dataclass(frozen=True)
class StftConfig:
    window_len: int = 2048
    hop: int = 1024

    def __post_init__(self):
        if self.hop * 2 != self.window_len:
            raise ValueError("hop must be half the window length")


def _hann(n: int) -> np.ndarray:
    # periodic (DFT-even) Hann
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft_mag_db(samples: np.ndarray, sample_rate: float, cfg: StftConfig = StftConfig()) -> np.ndarray:
    """Magnitude spectrogram in dB on the linear FFT frequency axis.

    Returns an (n_frames, window_len//2 + 1) array. Magnitudes are floored
    at DB_FLOOR_MAGNITUDE before conversion, so silence reads -160 dB.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise ValueError("stft_mag_db expects mono audio")
    if sample_rate <= 0:
        raise ValueError("sample_rate must be positive")
    n = samples.shape[0]
    w, h = cfg.window_len, cfg.hop
    if n < w:
        raise ValueError(f"insufficient audio: {n} samples < window of {w}")
    n_frames = (n - w) // h + 1
    window = _hann(w)
    frames = np.lib.stride_tricks.as_strided(
        samples,
        shape=(n_frames, w),
        strides=(samples.strides[0] * h, samples.strides[0]),
    )
    spectra = np.fft.rfft(frames * window, axis=1)
    mag = np.maximum(np.abs(spectra), DB_FLOOR_MAGNITUDE)
    return 20.0 * np.log10(mag)


def fft_bin_freqs(sample_rate: float, window_len: int) -> np.ndarray:
    return np.fft.rfftfreq(window_len, d=1.0 / sample_rate)


def to_log_grid(frame: np.ndarray, fft_freqs: np.ndarray, grid: np.ndarray | None = None) -> np.ndarray:
    """Linearly interpolate a linear-frequency dB frame onto the log grid.

    Grid points above the highest FFT frequency clamp to the last bin's value.
    """
    if grid is None:
        grid = log_frequency_grid()
    fft_freqs = np.asarray(fft_freqs, dtype=np.float64)
    if np.any(np.diff(fft_freqs) <= 0):
        raise ValueError("fft_freqs must be strictly increasing")
    return np.interp(grid, fft_freqs, np.asarray(frame, dtype=np.float64))


def average_spectrum(frames: np.ndarray) -> np.ndarray:
    """Per-bin arithmetic mean of dB frames (time-axis average)."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.size == 0:
        raise ValueError("average_spectrum needs at least one frame")
    if frames.ndim == 1:
        return frames.copy()
    return frames.mean(axis=0)


def zero_mean(curve: np.ndarray) -> np.ndarray:
    curve = np.asarray(curve, dtype=np.float64)
    return curve - curve.mean()


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Discrete Gaussian truncated at radius ceil(4*sigma), renormalized to unit sum."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    radius = int(math.ceil(4.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return kernel / kernel.sum()


def gaussian_smooth(curve: np.ndarray, sigma: float = DEFAULT_SMOOTH_SIGMA) -> np.ndarray:
    """Gaussian smoothing across bins with edge-replicated boundaries."""
    curve = np.asarray(curve, dtype=np.float64)
    kernel = gaussian_kernel(sigma)
    radius = (kernel.shape[0] - 1) // 2
    padded = np.pad(curve, radius, mode="edge")
    return np.convolve(padded, kernel, mode="valid")


def spectral_difference(
    target: np.ndarray,
    measured: np.ndarray,
    sigma: float = DEFAULT_SMOOTH_SIGMA,
    limit_db: float = DEFAULT_LIMIT_DB,
) -> np.ndarray:
    """target - measured, smoothed, zero-meaned, then scaled into +/-limit_db.

    The result is the model-input difference curve: zero-mean and
    max|value| <= limit_db by construction.
    """
    if limit_db <= 0:
        raise ValueError("limit_db must be positive")
    diff = np.asarray(target, dtype=np.float64) - np.asarray(measured, dtype=np.float64)
    diff = zero_mean(gaussian_smooth(diff, sigma))
    peak = np.abs(diff).max()
    if peak > limit_db:
        diff = diff * (limit_db / peak)
    return diff


def average_spectrum_of_audio(
    samples: np.ndarray,
    sample_rate: int,
    cfg: StftConfig = StftConfig(),
) -> np.ndarray:
    """Full measurement path: downmix, resample to 44.1 kHz, STFT, warp each
    frame onto the log grid, average along time. Not zero-meaned."""
    mono = downmix_mono(samples)
    mono = resample_to(mono, sample_rate, ANALYSIS_RATE_HZ)
    frames = stft_mag_db(mono, ANALYSIS_RATE_HZ, cfg)
    freqs = fft_bin_freqs(ANALYSIS_RATE_HZ, cfg.window_len)
    warped = np.stack([to_log_grid(f, freqs) for f in frames])
    return average_spectrum(warped)


def save_spectrum_csv(path, curve: np.ndarray, grid: np.ndarray | None = None) -> None:
    """CSV serialization: header freq_hz,value_db, one row per grid bin."""
    if grid is None:
        grid = log_frequency_grid()
    curve = np.asarray(curve, dtype=np.float64)
    if curve.shape != grid.shape:
        raise ValueError("curve does not match the grid")
    lines = ["freq_hz,value_db"]
    for f, v in zip(grid, curve):
        lines.append(f"{f:.9g},{v:.9g}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_spectrum_csv(path) -> np.ndarray:
    """Read a spectrum CSV back; validates the header and row count."""
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0].strip() != "freq_hz,value_db":
        raise ValueError(f"not a spectrum CSV (bad header): {path}")
    rows = [line.split(",") for line in lines[1:]]
    grid = log_frequency_grid()
    if len(rows) != grid.shape[0]:
        raise ValueError(f"expected {grid.shape[0]} rows, found {len(rows)} in {path}")
    return np.array([float(v) for _, v in rows], dtype=np.float64)
