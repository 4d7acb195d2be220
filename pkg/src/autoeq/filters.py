"""4-band parametric EQ: band design, cascade magnitude response,
parameter (de)normalization, and time-domain processing.

Band prototypes are the audio-cookbook second-order peak/shelf designs in
their Q parameterization; shelves run at a fixed Q of 0.75. An optional
Nyquist-gain-matched peak design ("orfanidis") is available for both the
response and audio paths.
"""

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

NUM_BANDS = 4
NUM_PARAMS = 10  # [f_ls, g_ls, f_p1, g_p1, q_p1, f_p2, g_p2, q_p2, f_hs, g_hs]
SHELF_Q = 0.75
GAIN_MIN_DB = -12.0
GAIN_MAX_DB = 12.0
PEAK_Q_MIN = 0.1
PEAK_Q_MAX = 3.0

# Shared with the differentiable path so both sides run the same arithmetic.
LN10_OVER_40 = np.log(10.0) / 40.0
PEAK_DESIGNS = ("cookbook", "orfanidis")


class BandKind(enum.Enum):
    LOW_SHELF = "low_shelf"
    PEAK = "peak"
    HIGH_SHELF = "high_shelf"


BAND_KINDS = (BandKind.LOW_SHELF, BandKind.PEAK, BandKind.PEAK, BandKind.HIGH_SHELF)
# (f_min, f_max) per band, Hz
BAND_FREQ_RANGES = ((30.0, 450.0), (200.0, 2500.0), (600.0, 7000.0), (1500.0, 16000.0))
BAND_LOG_FREQ_RATIO = tuple(np.log(hi / lo) for lo, hi in BAND_FREQ_RANGES)


@dataclass(frozen=True)
class BandParams:
    kind: BandKind
    freq_hz: float
    gain_db: float
    q: float


@dataclass(frozen=True)
class BiquadCoeffs:
    """One second-order section, a0 normalized to 1."""

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    @property
    def b(self) -> np.ndarray:
        return np.array([self.b0, self.b1, self.b2])

    @property
    def a(self) -> np.ndarray:
        return np.array([1.0, self.a1, self.a2])

    def is_stable(self) -> bool:
        return abs(self.a2) < 1.0 and abs(self.a1) < 1.0 + self.a2

    def is_identity(self) -> bool:
        return self.b0 == 1.0 and self.b1 == self.b2 == self.a1 == self.a2 == 0.0


IDENTITY_COEFFS = BiquadCoeffs(1.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class EqSettings:
    """Bands ordered [LowShelf, Peak1, Peak2, HighShelf]."""

    bands: tuple[BandParams, BandParams, BandParams, BandParams]

    def __post_init__(self):
        if len(self.bands) != NUM_BANDS:
            raise ValueError(f"expected {NUM_BANDS} bands")
        for band, kind in zip(self.bands, BAND_KINDS):
            if band.kind is not kind:
                raise ValueError(f"band order must be {[k.value for k in BAND_KINDS]}")

    def validate_ranges(self, tol: float = 1e-9) -> None:
        for i, band in enumerate(self.bands):
            f_lo, f_hi = BAND_FREQ_RANGES[i]
            if not (f_lo - tol <= band.freq_hz <= f_hi + tol):
                raise ValueError(f"band {i + 1} frequency {band.freq_hz} outside [{f_lo}, {f_hi}]")
            if not (GAIN_MIN_DB - tol <= band.gain_db <= GAIN_MAX_DB + tol):
                raise ValueError(f"band {i + 1} gain {band.gain_db} outside +/-12 dB")
            if band.kind is BandKind.PEAK:
                if not (PEAK_Q_MIN - tol <= band.q <= PEAK_Q_MAX + tol):
                    raise ValueError(f"band {i + 1} Q {band.q} outside [{PEAK_Q_MIN}, {PEAK_Q_MAX}]")
            elif band.q != SHELF_Q:
                raise ValueError(f"shelf Q must be fixed at {SHELF_Q}")


def settings_from_arrays(freqs_hz, gains_db, peak_qs) -> EqSettings:
    """Assemble EqSettings from per-band frequencies/gains plus the two peak Qs."""
    qs = (SHELF_Q, float(peak_qs[0]), float(peak_qs[1]), SHELF_Q)
    bands = tuple(
        BandParams(kind, float(f), float(g), q)
        for kind, f, g, q in zip(BAND_KINDS, freqs_hz, gains_db, qs)
    )
    return EqSettings(bands)


FLAT_SETTINGS = settings_from_arrays(
    [np.sqrt(lo * hi) for lo, hi in BAND_FREQ_RANGES], [0.0] * 4, [1.55, 1.55]
)


# ---------------------------------------------------------------------------
# band design
# ---------------------------------------------------------------------------

def _design_peak_cookbook(f: float, g: float, q: float, fs: float) -> BiquadCoeffs:
    amp = np.exp(g * LN10_OVER_40)
    w0 = 2.0 * np.pi * f / fs
    cos_w0 = np.cos(w0)
    alpha = np.sin(w0) / (2.0 * q)
    b0 = 1.0 + alpha * amp
    b1 = -2.0 * cos_w0
    b2 = 1.0 - alpha * amp
    a0 = 1.0 + alpha / amp
    a1 = -2.0 * cos_w0
    a2 = 1.0 - alpha / amp
    return BiquadCoeffs(b0 / a0, b1 / a0, b2 / a0, a1 / a0, a2 / a0)


def _design_shelf_cookbook(f: float, g: float, q: float, fs: float, high: bool) -> BiquadCoeffs:
    amp = np.exp(g * LN10_OVER_40)
    w0 = 2.0 * np.pi * f / fs
    cos_w0 = np.cos(w0)
    alpha = np.sin(w0) / (2.0 * q)
    two_sqrt_a_alpha = 2.0 * np.sqrt(amp) * alpha
    sgn = -1.0 if high else 1.0
    # high shelf mirrors the low shelf with the sign of cos(w0) terms flipped
    b0 = amp * ((amp + 1.0) - sgn * (amp - 1.0) * cos_w0 + two_sqrt_a_alpha)
    b1 = sgn * 2.0 * amp * ((amp - 1.0) - sgn * (amp + 1.0) * cos_w0)
    b2 = amp * ((amp + 1.0) - sgn * (amp - 1.0) * cos_w0 - two_sqrt_a_alpha)
    a0 = (amp + 1.0) + sgn * (amp - 1.0) * cos_w0 + two_sqrt_a_alpha
    a1 = -sgn * 2.0 * ((amp - 1.0) + sgn * (amp + 1.0) * cos_w0)
    a2 = (amp + 1.0) + sgn * (amp - 1.0) * cos_w0 - two_sqrt_a_alpha
    return BiquadCoeffs(b0 / a0, b1 / a0, b2 / a0, a1 / a0, a2 / a0)


def _design_peak_orfanidis(f: float, g: float, q: float, fs: float) -> BiquadCoeffs:
    """Peak design with prescribed Nyquist-frequency gain (Orfanidis 1997),
    reference gain 1, bandwidth gain at the dB midpoint, dw = w0/Q."""
    gain = np.exp(2.0 * g * LN10_OVER_40)  # linear gain 10**(g/20)
    g0 = 1.0
    gb = np.sqrt(g0 * gain)
    w0 = 2.0 * np.pi * f / fs
    dw = w0 / q

    f_b = abs(gain**2 - gb**2)
    g00 = abs(gain**2 - g0**2)
    f00 = abs(gb**2 - g0**2)
    num = g0**2 * (w0**2 - np.pi**2) ** 2 + gain**2 * f00 * np.pi**2 * dw**2 / f_b
    den = (w0**2 - np.pi**2) ** 2 + f00 * np.pi**2 * dw**2 / f_b
    g1 = np.sqrt(num / den)

    g01 = abs(gain**2 - g0 * g1)
    g11 = abs(gain**2 - g1**2)
    f01 = abs(gb**2 - g0 * g1)
    f11 = abs(gb**2 - g1**2)
    w2 = np.sqrt(g11 / g00) * np.tan(w0 / 2.0) ** 2
    dww = (1.0 + np.sqrt(f00 / f11) * w2) * np.tan(dw / 2.0)
    c = f11 * dww**2 - 2.0 * w2 * (f01 - np.sqrt(f00 * f11))
    d = 2.0 * w2 * (g01 - np.sqrt(g00 * g11))
    a = np.sqrt((c + d) / f_b)
    b = np.sqrt((gain**2 * c + gb**2 * d) / f_b)
    a0 = 1.0 + w2 + a
    return BiquadCoeffs(
        (g1 + g0 * w2 + b) / a0,
        -2.0 * (g1 - g0 * w2) / a0,
        (g1 - b + g0 * w2) / a0,
        -2.0 * (1.0 - w2) / a0,
        (1.0 + w2 - a) / a0,
    )


def design_band(p: BandParams, fs: float, peak_design: str = "cookbook") -> BiquadCoeffs:
    """Biquad coefficients for one EQ band at sample rate fs.

    Zero gain short-circuits to the identity section. Frequencies are
    clamped below Nyquist so the design stays valid at low sample rates.
    """
    if not (np.isfinite(p.freq_hz) and np.isfinite(p.gain_db) and np.isfinite(p.q)):
        raise ValueError("band parameters must be finite")
    if fs <= 0:
        raise ValueError("sample rate must be positive")
    if p.q <= 0:
        raise ValueError("Q must be positive")
    if peak_design not in PEAK_DESIGNS:
        raise ValueError(f"unknown peak design {peak_design!r}")
    if p.gain_db == 0.0:
        return IDENTITY_COEFFS
    f = min(max(p.freq_hz, 1.0), 0.499 * fs)
    if p.kind is BandKind.PEAK:
        if peak_design == "orfanidis":
            return _design_peak_orfanidis(f, p.gain_db, p.q, fs)
        return _design_peak_cookbook(f, p.gain_db, p.q, fs)
    if p.kind is BandKind.LOW_SHELF:
        return _design_shelf_cookbook(f, p.gain_db, p.q, fs, high=False)
    return _design_shelf_cookbook(f, p.gain_db, p.q, fs, high=True)


def cascade_coeffs(s: EqSettings, fs: float, peak_design: str = "cookbook") -> list[BiquadCoeffs]:
    return [design_band(band, fs, peak_design) for band in s.bands]


# ---------------------------------------------------------------------------
# magnitude responses
# ---------------------------------------------------------------------------

def band_response_db(c: BiquadCoeffs, freqs_hz: np.ndarray, fs: float) -> np.ndarray:
    """20*log10 |H(e^{j*2*pi*f/fs})| evaluated at the given frequencies."""
    w = 2.0 * np.pi * np.asarray(freqs_hz, dtype=np.float64) / fs
    z1 = np.exp(-1j * w)
    z2 = z1 * z1
    h = (c.b0 + c.b1 * z1 + c.b2 * z2) / (1.0 + c.a1 * z1 + c.a2 * z2)
    return 20.0 * np.log10(np.maximum(np.abs(h), 1e-150))


def cascade_response_db(
    s: EqSettings,
    freqs_hz: np.ndarray,
    fs: float,
    peak_design: str = "cookbook",
) -> np.ndarray:
    """Cascade magnitude response in dB: sum of per-band responses."""
    freqs_hz = np.asarray(freqs_hz, dtype=np.float64)
    total = np.zeros(freqs_hz.shape, dtype=np.float64)
    for coeffs in cascade_coeffs(s, fs, peak_design):
        if not coeffs.is_identity():
            total += band_response_db(coeffs, freqs_hz, fs)
    return total


# ---------------------------------------------------------------------------
# parameter normalization (model space <-> physical units)
# ---------------------------------------------------------------------------

def normalize_params(s: EqSettings) -> np.ndarray:
    """Map EqSettings into the 10-dim [0,1] model space.

    Frequencies use the per-band log mapping, gains the +/-12 dB affine map,
    peak Qs the [0.1, 3.0] affine map. Shelf Qs are fixed and omitted.
    """
    s.validate_ranges()
    v = np.empty(NUM_PARAMS, dtype=np.float64)
    idx = 0
    for i, band in enumerate(s.bands):
        f_lo, _ = BAND_FREQ_RANGES[i]
        v[idx] = np.log(band.freq_hz / f_lo) / BAND_LOG_FREQ_RATIO[i]
        v[idx + 1] = (band.gain_db - GAIN_MIN_DB) / (GAIN_MAX_DB - GAIN_MIN_DB)
        idx += 2
        if band.kind is BandKind.PEAK:
            v[idx] = (band.q - PEAK_Q_MIN) / (PEAK_Q_MAX - PEAK_Q_MIN)
            idx += 1
    return v


def denormalize_params(v: np.ndarray, clamp: bool = True) -> EqSettings:
    """Inverse of normalize_params; with clamp=True (the inference path)
    components are clipped to [0,1] first, guaranteeing valid settings."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (NUM_PARAMS,):
        raise ValueError(f"expected {NUM_PARAMS} normalized parameters")
    if clamp:
        v = np.clip(v, 0.0, 1.0)
    freqs, gains, qs = [], [], []
    idx = 0
    for i in range(NUM_BANDS):
        f_lo, _ = BAND_FREQ_RANGES[i]
        freqs.append(f_lo * np.exp(v[idx] * BAND_LOG_FREQ_RATIO[i]))
        gains.append(GAIN_MIN_DB + v[idx + 1] * (GAIN_MAX_DB - GAIN_MIN_DB))
        idx += 2
        if BAND_KINDS[i] is BandKind.PEAK:
            qs.append(PEAK_Q_MIN + v[idx] * (PEAK_Q_MAX - PEAK_Q_MIN))
            idx += 1
    return settings_from_arrays(freqs, gains, qs)


# ---------------------------------------------------------------------------
# time-domain processing
# ---------------------------------------------------------------------------

def process_audio(samples: np.ndarray, s: EqSettings, fs: float, peak_design: str = "cookbook") -> np.ndarray:
    """Filter audio through the 4-biquad cascade (zero initial state).

    Accepts (n,) or (n, channels); the result has the input's shape. Bands
    at 0 dB are skipped, so an all-flat EQ returns the input bit-identically.
    """
    samples = np.asarray(samples, dtype=np.float64)
    sections = [c for c in cascade_coeffs(s, fs, peak_design) if not c.is_identity()]
    out = samples.copy()
    mono = out.ndim == 1
    if mono:
        out = out[:, None]
    for c in sections:
        for ch in range(out.shape[1]):
            out[:, ch] = lfilter(c.b, c.a, out[:, ch])
    return out[:, 0] if mono else out


# ---------------------------------------------------------------------------
# settings document (the CLI's --params-out format)
# ---------------------------------------------------------------------------

def save_settings(path, s: EqSettings) -> None:
    """Write the settings document: CSV with band,kind,freq_hz,gain_db,q rows."""
    lines = ["band,kind,freq_hz,gain_db,q"]
    for i, band in enumerate(s.bands, start=1):
        lines.append(f"{i},{band.kind.value},{band.freq_hz!r},{band.gain_db!r},{band.q!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_settings(path) -> EqSettings:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0].strip() != "band,kind,freq_hz,gain_db,q":
        raise ValueError(f"not a settings document (bad header): {path}")
    if len(lines) != NUM_BANDS + 1:
        raise ValueError(f"expected {NUM_BANDS} band rows in {path}")
    bands = []
    for row in lines[1:]:
        _, kind, f, g, q = row.split(",")
        bands.append(BandParams(BandKind(kind), float(f), float(g), float(q)))
    return EqSettings(tuple(bands))
