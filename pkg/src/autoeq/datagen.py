"""Training-data generation.

Synthetic samples come from random EQ settings: frequencies uniform on each
band's log range, gains cubed-uniform (so small moves are much likelier
than extreme ones) with an equiprobable sign, peak Qs uniform. The model
input is the (optionally noisy) cascade response, zero-meaned to match the
difference-curve convention.

Real-world-style samples are difference curves measured from labeled audio:
each recording contributes one curve against its own class target plus
curves against the nearest other classes in the bank.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .audio_io import ANALYSIS_RATE_HZ, read_wav
from .container import load_blob, save_blob
from .filters import (
    BAND_FREQ_RANGES,
    BAND_KINDS,
    GAIN_MAX_DB,
    PEAK_Q_MAX,
    PEAK_Q_MIN,
    BandKind,
    EqSettings,
    cascade_response_db,
    normalize_params,
    settings_from_arrays,
)
from .grid import GRID_SIZE, grid_fingerprint, log_frequency_grid
from .spectrum import average_spectrum_of_audio, gaussian_smooth, spectral_difference, zero_mean
from .targets import TargetBank, nearest_classes

DATASET_FORMAT = 1


@dataclass(frozen=True)
class NoiseConfig:
    """Additive per-bin Gaussian noise in dB; optionally smoothed across bins
    (sigma in bins, 0 disables) so perturbations are spectrally correlated."""

    amplitude_db: float = 0.25
    post_smooth_sigma: float = 0.0

    def __post_init__(self):
        if self.amplitude_db < 0:
            raise ValueError("noise amplitude must be >= 0")
        if self.post_smooth_sigma < 0:
            raise ValueError("noise smoothing sigma must be >= 0")


@dataclass(frozen=True)
class SyntheticSample:
    curve: np.ndarray  # model input: zero-mean noisy response
    target_params: np.ndarray  # normalized, length 10
    clean_response: np.ndarray


def sample_random_settings(rng: np.random.Generator) -> EqSettings:
    """One random EqSettings draw within the Table of band ranges."""
    freqs, gains, qs = [], [], []
    for i, kind in enumerate(BAND_KINDS):
        lo, hi = BAND_FREQ_RANGES[i]
        freqs.append(lo * np.exp(rng.random() * np.log(hi / lo)))
        sign = -1.0 if rng.random() < 0.5 else 1.0
        gains.append(rng.random() ** 3 * GAIN_MAX_DB * sign)
        if kind is BandKind.PEAK:
            qs.append(rng.uniform(PEAK_Q_MIN, PEAK_Q_MAX))
    return settings_from_arrays(freqs, gains, qs)


def synth_sample(settings: EqSettings, noise: NoiseConfig, rng: np.random.Generator) -> SyntheticSample:
    clean = cascade_response_db(settings, log_frequency_grid(), float(ANALYSIS_RATE_HZ))
    curve = clean
    if noise.amplitude_db > 0:
        bump = rng.normal(0.0, noise.amplitude_db, GRID_SIZE)
        if noise.post_smooth_sigma > 0:
            bump = gaussian_smooth(bump, noise.post_smooth_sigma)
        curve = clean + bump
    return SyntheticSample(zero_mean(curve), normalize_params(settings), clean)


def _index_rng(seed: int, index: int) -> np.random.Generator:
    # one independent stream per sample index: parallel generation stays
    # byte-identical to the serial loop
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def build_synthetic_dataset(
    n: int, noise: NoiseConfig, seed: int, threads: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """n samples -> (curves (n, 256), params (n, 10)), deterministic in seed.

    Each index draws from its own random stream, so splitting the work over
    threads changes nothing about the result.
    """
    if n <= 0:
        raise ValueError("dataset size must be positive")
    curves = np.empty((n, GRID_SIZE))
    params = np.empty((n, 10))

    def fill(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            rng = _index_rng(seed, i)
            sample = synth_sample(sample_random_settings(rng), noise, rng)
            curves[i] = sample.curve
            params[i] = sample.target_params

    if threads <= 1 or n < 2 * threads:
        fill(0, n)
    else:
        step = -(-n // threads)
        bounds = [(lo, min(lo + step, n)) for lo in range(0, n, step)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for job in [pool.submit(fill, lo, hi) for lo, hi in bounds]:
                job.result()
    return curves, params


# ---------------------------------------------------------------------------
# real-world-style curves from labeled audio
# ---------------------------------------------------------------------------

def build_realworld_dataset(
    corpus: list[tuple[str, str]],
    bank: TargetBank,
    k_neighbors: int = 4,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """corpus rows (audio path, class) -> (curves, source_index, class_index).

    Each recording yields k_neighbors+1 difference curves: its own class
    target first, then the nearest other classes in bank order of distance.
    class_index refers to bank.class_names().
    """
    names = bank.class_names()
    unknown = sorted({label for _, label in corpus if label not in bank.entries})
    if unknown:
        raise ValueError(f"corpus labels missing from target bank: {', '.join(unknown)}")
    name_pos = {name: i for i, name in enumerate(names)}

    curves, sources, classes = [], [], []
    for src_idx, (path, label) in enumerate(corpus):
        samples, rate = read_wav(path)
        measured = average_spectrum_of_audio(samples, rate)
        for target_class in [label, *nearest_classes(bank, label, k_neighbors)]:
            curves.append(spectral_difference(bank.entries[target_class], measured))
            sources.append(src_idx)
            classes.append(name_pos[target_class])
    return (
        np.asarray(curves),
        np.asarray(sources, dtype=np.int64),
        np.asarray(classes, dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# dataset files
# ---------------------------------------------------------------------------

def save_dataset(path, curves: np.ndarray, params: np.ndarray | None, meta: dict) -> None:
    """Container with curves plus, for synthetic sets, their target params."""
    if curves.ndim != 2 or curves.shape[1] != GRID_SIZE:
        raise ValueError(f"curves must be (n, {GRID_SIZE})")
    full_meta = {
        "kind": "dataset",
        "format": DATASET_FORMAT,
        "count": int(curves.shape[0]),
        "grid": grid_fingerprint(),
        **meta,
    }
    arrays = {"curves": curves}
    if params is not None:
        if params.shape != (curves.shape[0], 10):
            raise ValueError("params must be (n, 10)")
        arrays["params"] = params
    save_blob(path, full_meta, arrays)


def load_dataset(path) -> tuple[dict, np.ndarray, np.ndarray | None]:
    meta, arrays = load_blob(path)
    if meta.get("kind") != "dataset":
        raise ValueError(f"not a dataset file: {path}")
    if meta.get("grid") != grid_fingerprint():
        raise ValueError(f"dataset was built on a different frequency grid: {path}")
    return meta, arrays["curves"], arrays.get("params")


def export_dataset_csv(path, curves: np.ndarray, params: np.ndarray | None = None) -> None:
    """Wide CSV for eyeballing: one row per sample, params then bin values."""
    from pathlib import Path

    n = curves.shape[0]
    cols = []
    if params is not None:
        cols += [f"p{j}" for j in range(params.shape[1])]
    cols += [f"bin_{j:03d}" for j in range(curves.shape[1])]
    lines = ["sample," + ",".join(cols)]
    for i in range(n):
        row = [str(i)]
        if params is not None:
            row += [f"{x:.9g}" for x in params[i]]
        row += [f"{x:.9g}" for x in curves[i]]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")
