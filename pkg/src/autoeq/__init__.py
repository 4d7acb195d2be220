"""Automatic four-band parametric EQ.

Analyze a recording, compare its average spectrum against an
instrument-class target, predict corrective EQ settings with a neural
matching model, and render the result through a biquad cascade.
"""

from .audio_io import read_wav, write_wav_float32
from .filters import (
    BandKind,
    BandParams,
    BiquadCoeffs,
    EqSettings,
    cascade_coeffs,
    cascade_response_db,
    denormalize_params,
    design_band,
    load_settings,
    normalize_params,
    process_audio,
    save_settings,
    settings_from_arrays,
)
from .grid import GRID_SIZE, log_frequency_grid
from .models import build_model, load_checkpoint, predict_eq, save_checkpoint
from .pipeline import AutoEqResult, auto_eq
from .spectrum import average_spectrum_of_audio, spectral_difference, zero_mean
from .targets import TargetBank, build_bank_from_corpus, classify, load_bank, save_bank
from .training import TrainingConfig, evaluate_mae, finetune, train_base

__version__ = "0.1.0"

__all__ = [
    "AutoEqResult",
    "BandKind",
    "BandParams",
    "BiquadCoeffs",
    "EqSettings",
    "GRID_SIZE",
    "TargetBank",
    "TrainingConfig",
    "auto_eq",
    "average_spectrum_of_audio",
    "build_bank_from_corpus",
    "build_model",
    "cascade_coeffs",
    "cascade_response_db",
    "classify",
    "denormalize_params",
    "design_band",
    "evaluate_mae",
    "finetune",
    "load_bank",
    "load_checkpoint",
    "load_settings",
    "log_frequency_grid",
    "normalize_params",
    "predict_eq",
    "process_audio",
    "read_wav",
    "save_bank",
    "save_checkpoint",
    "save_settings",
    "settings_from_arrays",
    "spectral_difference",
    "train_base",
    "write_wav_float32",
    "zero_mean",
]
