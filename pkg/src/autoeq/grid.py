"""Canonical 256-bin log-frequency grid shared by every spectral curve."""

import hashlib

import numpy as np

GRID_SIZE = 256
FREQ_LO_HZ = 20.0
FREQ_HI_HZ = 22000.0

_GRID = None


def log_frequency_grid() -> np.ndarray:
    """256 logarithmically spaced frequencies from 20 Hz to 22 kHz (read-only)."""
    global _GRID
    if _GRID is None:
        freqs = np.geomspace(FREQ_LO_HZ, FREQ_HI_HZ, GRID_SIZE)
        freqs[0] = FREQ_LO_HZ
        freqs[-1] = FREQ_HI_HZ
        freqs.setflags(write=False)
        _GRID = freqs
    return _GRID


def grid_fingerprint() -> str:
    """Stable hash of the grid, embedded in dataset/bank headers."""
    return hashlib.sha256(log_frequency_grid().tobytes()).hexdigest()[:16]
