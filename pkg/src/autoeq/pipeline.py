"""End-to-end auto-EQ: analyze a recording, pick its spectral target, turn
the gap into EQ settings with a matching model, and render the corrected
audio.

Analysis always happens at 44.1 kHz on the canonical log grid; the filters
themselves are designed at the audio's native rate, so the same settings
follow the recording whatever its sample rate.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import ANALYSIS_RATE_HZ
from .filters import EqSettings, cascade_response_db, process_audio
from .grid import log_frequency_grid
from .models import predict_eq
from .spectrum import average_spectrum_of_audio, spectral_difference
from .targets import TargetBank, classify


@dataclass(frozen=True)
class AutoEqResult:
    settings: EqSettings
    predicted_class: str
    difference: np.ndarray
    predicted_response: np.ndarray
    residual_mae_db: float

    def to_meta(self) -> dict:
        return {
            "predicted_class": self.predicted_class,
            "residual_mae_db": self.residual_mae_db,
            "gains_db": [b.gain_db for b in self.settings.bands],
            "freqs_hz": [b.freq_hz for b in self.settings.bands],
        }


def auto_eq(
    audio: np.ndarray,
    fs: float,
    bank: TargetBank,
    model,
    class_override: str | None = None,
    peak_normalize: bool = False,
    peak_design: str = "cookbook",
) -> tuple[AutoEqResult, np.ndarray]:
    """Run the whole chain on one recording.

    Returns the diagnostics bundle plus the processed audio, which keeps the
    input's length and channel layout. ``peak_normalize`` rescales the output
    to the input's peak so boosts cannot push it past the original ceiling.
    """
    audio = np.asarray(audio, dtype=np.float64)
    if audio.size == 0:
        raise ValueError("empty audio")

    measured = average_spectrum_of_audio(audio, fs)
    if class_override is not None:
        if class_override not in bank.entries:
            known = ", ".join(bank.class_names())
            raise ValueError(f"unknown class {class_override!r} (bank has: {known})")
        predicted_class = class_override
    else:
        predicted_class, _ = classify(bank, measured)

    difference = spectral_difference(bank.entries[predicted_class], measured)
    settings = predict_eq(model, difference)

    # Diagnostics compare like with like: the difference curve is zero-mean,
    # so the response is re-centered the same way before the residual.
    response = cascade_response_db(settings, log_frequency_grid(), float(ANALYSIS_RATE_HZ))
    response = response - response.mean()
    residual = float(np.mean(np.abs(difference - response)))

    processed = process_audio(audio, settings, fs, peak_design)
    if peak_normalize:
        out_peak = np.max(np.abs(processed))
        if out_peak > 0:
            processed = processed * (np.max(np.abs(audio)) / out_peak)

    result = AutoEqResult(
        settings=settings,
        predicted_class=predicted_class,
        difference=difference,
        predicted_response=response,
        residual_mae_db=residual,
    )
    return result, processed


def write_diagnostics_csv(path, result: AutoEqResult) -> None:
    """Per-bin diagnostics: the curve the model saw, the response it chose,
    and where they disagree."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = log_frequency_grid()
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["freq_hz", "difference_db", "predicted_response_db", "abs_residual_db"])
        for f, d, r in zip(grid, result.difference, result.predicted_response):
            writer.writerow([f"{f:.9g}", f"{d:.9g}", f"{r:.9g}", f"{abs(d - r):.9g}"])


def load_diagnostics_csv(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    data = np.array(rows, dtype=np.float64)
    if data.shape[1] != len(header):
        raise ValueError("malformed diagnostics file")
    return {name: data[:, i] for i, name in enumerate(header)}
