"""Instrument target bank: per-class ideal average spectra, nearest-class
queries, and a nearest-centroid classifier used to pick the target at
inference time.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_io import read_wav
from .container import load_blob, save_blob
from .grid import GRID_SIZE, grid_fingerprint, log_frequency_grid
from .spectrum import average_spectrum_of_audio, zero_mean

BANK_FORMAT = 1


@dataclass(frozen=True)
class TargetBank:
    """Immutable map of class name -> zero-mean target curve on the grid."""

    entries: dict[str, np.ndarray]
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.entries:
            raise ValueError("target bank has no classes")
        for name, curve in self.entries.items():
            if not name:
                raise ValueError("empty class name in target bank")
            if curve.shape != (GRID_SIZE,):
                raise ValueError(f"target for {name!r} is not on the canonical grid")
            if abs(float(curve.mean())) > 1e-6:
                raise ValueError(f"target for {name!r} is not zero-mean")

    def class_names(self) -> list[str]:
        return sorted(self.entries)


def build_target(audio_list: list[np.ndarray], rates: list[float]) -> np.ndarray:
    """Ideal spectrum of one class: mean of per-recording average spectra,
    zero-meaned."""
    if not audio_list:
        raise ValueError("no audio samples for target")
    if len(audio_list) != len(rates):
        raise ValueError("audio list and rate list differ in length")
    specs = [average_spectrum_of_audio(a, r) for a, r in zip(audio_list, rates)]
    return zero_mean(np.mean(specs, axis=0))


def read_corpus_manifest(path) -> list[tuple[str, str]]:
    """Parse `path,instrument_class` rows; relative paths resolve against the
    manifest's directory. Lines starting with '#' and an optional header row
    are skipped."""
    path = Path(path)
    base = path.parent
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if lineno == 1 and line.replace(" ", "") == "path,instrument_class":
            continue
        parts = line.rsplit(",", 1)
        if len(parts) != 2 or not parts[1].strip():
            raise ValueError(f"{path}:{lineno}: expected 'path,instrument_class', got {line!r}")
        rel, label = parts[0].strip(), parts[1].strip()
        rows.append((str((base / rel).resolve()), label))
    if not rows:
        raise ValueError(f"corpus manifest {path} lists no samples")
    return rows


def build_bank_from_corpus(corpus: list[tuple[str, str]]) -> TargetBank:
    by_class: dict[str, list[str]] = {}
    for p, label in corpus:
        by_class.setdefault(label, []).append(p)
    entries, counts = {}, {}
    for label in sorted(by_class):
        audio, rates = [], []
        for p in by_class[label]:
            samples, rate = read_wav(p)
            audio.append(samples)
            rates.append(rate)
        entries[label] = build_target(audio, rates)
        counts[label] = len(audio)
    return TargetBank(entries, counts)


def _curve_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean(np.abs(a - b)))


def nearest_classes(bank: TargetBank, name: str, k: int) -> list[str]:
    """The k classes spectrally closest to `name`, nearest first; ties break
    lexicographically. Never includes `name` itself."""
    if name not in bank.entries:
        raise ValueError(f"unknown class {name!r}")
    if not 0 <= k < len(bank.entries):
        raise ValueError(f"k must be in [0, {len(bank.entries) - 1}]")
    ref = bank.entries[name]
    ranked = sorted(
        (other for other in bank.entries if other != name),
        key=lambda other: (_curve_distance(ref, bank.entries[other]), other),
    )
    return ranked[:k]


def classify(bank: TargetBank, measured: np.ndarray) -> tuple[str, float]:
    """Nearest-centroid class for a measured average spectrum. The constant
    dB offset is removed first, so absolute level never matters."""
    m = zero_mean(np.asarray(measured, dtype=np.float64))
    best = min(bank.class_names(), key=lambda name: (_curve_distance(m, bank.entries[name]), name))
    return best, _curve_distance(m, bank.entries[best])


# ---------------------------------------------------------------------------
# bank files
# ---------------------------------------------------------------------------

def save_bank(path, bank: TargetBank) -> None:
    names = bank.class_names()
    meta = {
        "kind": "target-bank",
        "format": BANK_FORMAT,
        "classes": names,
        "counts": [int(bank.counts.get(n, 0)) for n in names],
        "grid": grid_fingerprint(),
    }
    curves = np.stack([bank.entries[n] for n in names])
    save_blob(path, meta, {"curves": curves})


def load_bank(path) -> TargetBank:
    meta, arrays = load_blob(path)
    if meta.get("kind") != "target-bank":
        raise ValueError(f"not a target bank file: {path}")
    if meta.get("format") != BANK_FORMAT:
        raise ValueError(f"unsupported bank format {meta.get('format')!r}")
    if meta.get("grid") != grid_fingerprint():
        raise ValueError(f"target bank was built on a different frequency grid: {path}")
    curves = arrays["curves"]
    entries = {name: curves[i] for i, name in enumerate(meta["classes"])}
    counts = dict(zip(meta["classes"], meta.get("counts", [])))
    return TargetBank(entries, counts)


def export_bank_csv(path, bank: TargetBank) -> None:
    grid = log_frequency_grid()
    lines = ["class,freq_hz,value_db"]
    for name in bank.class_names():
        for f, v in zip(grid, bank.entries[name]):
            lines.append(f"{name},{f:.9g},{v:.9g}")
    Path(path).write_text("\n".join(lines) + "\n")
