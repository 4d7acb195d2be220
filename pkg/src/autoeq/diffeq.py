"""Differentiable EQ: cascade magnitude response as a Tensor graph.

Takes normalized parameters (B, 10), denormalizes them and designs the four
biquads *inside* the autodiff graph, then evaluates the cascade response in
dB on the canonical grid. Spectral losses can therefore backpropagate all
the way to the network weights.

Every arithmetic expression here mirrors the scalar design path in
``filters`` term for term (shared constants, same operation order), so the
forward pass reproduces ``cascade_response_db`` to within rounding noise of
the final complex-vs-squared magnitude evaluation. Out-of-range inputs are
not clamped: frequencies denormalized past Nyquist simply alias through the
trig terms, exactly as the closed-form expressions dictate.
"""

import numpy as np

from . import autodiff as ad
from .audio_io import ANALYSIS_RATE_HZ
from .autodiff import Tensor
from .filters import (
    BAND_FREQ_RANGES,
    BAND_LOG_FREQ_RATIO,
    GAIN_MAX_DB,
    GAIN_MIN_DB,
    LN10_OVER_40,
    NUM_PARAMS,
    PEAK_Q_MAX,
    PEAK_Q_MIN,
    SHELF_Q,
)
from .grid import log_frequency_grid

# 10**2/log(10): converts log(|H|^2) to dB
_DB_SCALE = 10.0 / np.log(10.0)
_EPS = 1e-30

_trig_cache: dict[float, tuple] = {}


def _grid_trig(freqs_hz: np.ndarray, fs: float):
    w = 2.0 * np.pi * freqs_hz / fs
    return np.cos(w), np.cos(2.0 * w), np.sin(w), np.sin(2.0 * w)


def _band_response(b0, b1, b2, a1, a2, trig) -> Tensor:
    """dB response of one section at the precomputed grid angles."""
    c1, c2, s1, s2 = trig
    num_re = b0 + b1 * c1 + b2 * c2
    num_im = b1 * s1 + b2 * s2
    den_re = 1.0 + a1 * c1 + a2 * c2
    den_im = a1 * s1 + a2 * s2
    num2 = num_re * num_re + num_im * num_im + _EPS
    den2 = den_re * den_re + den_im * den_im + _EPS
    return _DB_SCALE * (ad.log(num2) - ad.log(den2))


def _peak_band(f, g, q, fs, trig) -> Tensor:
    amp = ad.exp(g * LN10_OVER_40)
    w0 = 2.0 * np.pi * f / fs
    cos_w0 = ad.cos(w0)
    alpha = ad.sin(w0) / (2.0 * q)
    b0 = 1.0 + alpha * amp
    b1 = -2.0 * cos_w0
    b2 = 1.0 - alpha * amp
    a0 = 1.0 + alpha / amp
    a1 = -2.0 * cos_w0
    a2 = 1.0 - alpha / amp
    return _band_response(b0 / a0, b1 / a0, b2 / a0, a1 / a0, a2 / a0, trig)


def _shelf_band(f, g, fs, trig, high: bool) -> Tensor:
    amp = ad.exp(g * LN10_OVER_40)
    w0 = 2.0 * np.pi * f / fs
    cos_w0 = ad.cos(w0)
    alpha = ad.sin(w0) / (2.0 * SHELF_Q)
    two_sqrt_a_alpha = 2.0 * ad.sqrt(amp) * alpha
    sgn = -1.0 if high else 1.0
    b0 = amp * ((amp + 1.0) - sgn * (amp - 1.0) * cos_w0 + two_sqrt_a_alpha)
    b1 = sgn * 2.0 * amp * ((amp - 1.0) - sgn * (amp + 1.0) * cos_w0)
    b2 = amp * ((amp + 1.0) - sgn * (amp - 1.0) * cos_w0 - two_sqrt_a_alpha)
    a0 = (amp + 1.0) + sgn * (amp - 1.0) * cos_w0 + two_sqrt_a_alpha
    a1 = -sgn * 2.0 * ((amp - 1.0) + sgn * (amp + 1.0) * cos_w0)
    a2 = (amp + 1.0) + sgn * (amp - 1.0) * cos_w0 - two_sqrt_a_alpha
    return _band_response(b0 / a0, b1 / a0, b2 / a0, a1 / a0, a2 / a0, trig)


def diff_cascade_response(v: Tensor, fs: float = float(ANALYSIS_RATE_HZ),
                          freqs_hz: np.ndarray | None = None) -> Tensor:
    """Cascade response in dB for normalized parameters.

    v: Tensor (batch, 10) or (10,); result (batch, 256) or (256,).
    """
    single = v.values.ndim == 1
    if single:
        v = v.reshape(1, NUM_PARAMS)
    if v.values.ndim != 2 or v.values.shape[1] != NUM_PARAMS:
        raise ValueError(f"expected (batch, {NUM_PARAMS}) normalized parameters, got {v.values.shape}")

    if freqs_hz is None:
        if fs not in _trig_cache:
            _trig_cache[fs] = _grid_trig(log_frequency_grid(), fs)
        trig = _trig_cache[fs]
    else:
        trig = _grid_trig(np.asarray(freqs_hz, dtype=np.float64), fs)

    def col(i):
        return v[:, i : i + 1]  # (B, 1), broadcasts against the grid

    def freq(i, col_idx):
        lo = BAND_FREQ_RANGES[i][0]
        return lo * ad.exp(col(col_idx) * BAND_LOG_FREQ_RATIO[i])

    def gain(col_idx):
        return GAIN_MIN_DB + col(col_idx) * (GAIN_MAX_DB - GAIN_MIN_DB)

    def peak_q(col_idx):
        return PEAK_Q_MIN + col(col_idx) * (PEAK_Q_MAX - PEAK_Q_MIN)

    total = _shelf_band(freq(0, 0), gain(1), fs, trig, high=False)
    total = total + _peak_band(freq(1, 2), gain(3), peak_q(4), fs, trig)
    total = total + _peak_band(freq(2, 5), gain(6), peak_q(7), fs, trig)
    total = total + _shelf_band(freq(3, 8), gain(9), fs, trig, high=True)
    return total.reshape(-1) if single else total


def response_from_normalized(v: np.ndarray, fs: float = float(ANALYSIS_RATE_HZ)) -> np.ndarray:
    """Forward-only convenience: normalized parameter array -> response array."""
    return diff_cascade_response(Tensor(v), fs).values
