"""Driven two-port response of the coupled pair.

The transmission model is the standard input-output form for a drive that
enters and leaves through the cavity, with the puck hanging off it:

    S21(w) = sqrt(ge1*ge2) / ( i(wc - w) + gc + ge1 + ge2
                               + g^2 / (i(ws - w) + gs) )

with half-linewidths g* = w*/(2 Q*) and coupling rate
g = kappa*sqrt(wc*ws)/2, chosen so the driven peak splitting at resonance
(2g = kappa*w0) matches the eigenmode splitting w0*(sqrt(1+kappa) -
sqrt(1-kappa)) through O(kappa^3).  Individual driven peaks still sit
~kappa^2*f0/8 away from the eigenmode frequencies (the driven model is
first order in detuning), which matters when comparing the two at
kappa > ~0.005.

The transmission zero of S21 sits at the bare puck frequency: the notch in
a measured spectrum reads out f_sto directly, mode pulling notwithstanding.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks as _scipy_find_peaks

from .cmt import CoupledSystem, coupled_eigenmodes
from .errors import GridTooCoarseError, PeaksNotResolvedError

# Measured room-temperature Q of the copper-walled host cavity, and the
# simulated wall-loss-free (PEC) budget with the puck inserted.
COPPER_CAVITY_Q = 2.89e4
PEC_CAVITY_Q = 4.2e7
PORT_Q_DEFAULT = 8.6e7   # simulated external Q of each loop antenna

_DEFAULT_GRID_POINTS = 20001
_MAX_GRID_POINTS = 1_000_001
_MIN_POINTS_PER_LINEWIDTH = 8


@dataclass(frozen=True)
class TwoPortModel:
    """Coupled system probed through two external ports (external Qs)."""

    sys: CoupledSystem
    q_ext1: float
    q_ext2: float

    def __post_init__(self):
        for name in ("q_ext1", "q_ext2"):
            v = getattr(self, name)
            if not (v > 0 and np.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    def loaded_cavity_q(self) -> float:
        return 1.0 / (1.0 / self.sys.q_cav + 1.0 / self.q_ext1 + 1.0 / self.q_ext2)


@dataclass(eq=False)
class Spectrum:
    """Complex S21 samples on a strictly increasing frequency grid.

    meta snapshots where the samples came from (model parameters for
    synthesized data, file provenance for imported data) so downstream
    analysis can estimate linewidths without re-deriving the model.
    """

    f_hz: np.ndarray
    s21: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.f_hz = np.asarray(self.f_hz, dtype=float)
        self.s21 = np.asarray(self.s21, dtype=complex)
        if self.f_hz.ndim != 1 or self.f_hz.size < 2:
            raise ValueError("need a 1-d grid of at least 2 frequencies")
        if self.s21.shape != self.f_hz.shape:
            raise ValueError("s21 and f_hz must have the same shape")
        if not np.all(np.diff(self.f_hz) > 0):
            raise ValueError("frequency grid must be strictly increasing")


def _coupling_rate(sys: CoupledSystem) -> float:
    wc = 2.0 * np.pi * sys.f_cav_hz
    ws = 2.0 * np.pi * sys.f_sto_hz
    return sys.kappa * np.sqrt(wc * ws) / 2.0


def _half_rates(model: TwoPortModel):
    sys = model.sys
    wc = 2.0 * np.pi * sys.f_cav_hz
    ws = 2.0 * np.pi * sys.f_sto_hz
    gc = 0.0 if np.isinf(sys.q_cav) else wc / (2.0 * sys.q_cav)
    gs = 0.0 if np.isinf(sys.q_sto) else ws / (2.0 * sys.q_sto)
    ge1 = wc / (2.0 * model.q_ext1)
    ge2 = wc / (2.0 * model.q_ext2)
    return wc, ws, gc, gs, ge1, ge2


def synthesize_s21(model: TwoPortModel, f_hz=None) -> Spectrum:
    """Evaluate the transmission model on a grid (default grid if omitted)."""
    if f_hz is None:
        f_hz = default_frequency_grid(model)
    f = np.asarray(f_hz, dtype=float)
    wc, ws, gc, gs, ge1, ge2 = _half_rates(model)
    g = _coupling_rate(model.sys)
    w = 2.0 * np.pi * f
    denom = 1j * (wc - w) + gc + ge1 + ge2
    if g != 0.0:
        inner = 1j * (ws - w) + gs
        dead = inner == 0  # lossless puck hit exactly on grid -> perfect zero
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = denom + g * g / np.where(dead, 1.0, inner)
        s21 = np.sqrt(ge1 * ge2) / denom
        s21[dead] = 0.0
    else:
        s21 = np.sqrt(ge1 * ge2) / denom
    meta = {
        "source": "synthesized",
        "f_sto_hz": model.sys.f_sto_hz,
        "q_sto": model.sys.q_sto,
        "f_cav_hz": model.sys.f_cav_hz,
        "q_cav": model.sys.q_cav,
        "kappa": model.sys.kappa,
        "q_ext1": model.q_ext1,
        "q_ext2": model.q_ext2,
    }
    return Spectrum(f, s21, meta)


def default_frequency_grid(model: TwoPortModel, n: int | None = None) -> np.ndarray:
    """Grid centered between the hybridized modes, spanning 5 splittings
    either side.

    If n is not given, it starts at 20001 points and grows (up to 1e6+1) so
    that the narrowest expected loaded linewidth keeps at least 8 points.
    Far-detuned very-high-Q features can defeat the cap; phase analysis
    will then refuse with GridTooCoarseError and a narrower explicit grid
    around the feature is the way to go.
    """
    pair = coupled_eigenmodes(model.sys)
    ext = 1.0 / model.q_ext1 + 1.0 / model.q_ext2
    lws = [
        pair.f1_hz * (1.0 / pair.q1 + ext),
        pair.f2_hz * (1.0 / pair.q2 + ext),
    ]
    center = 0.5 * (pair.f1_hz + pair.f2_hz)
    delta = max(pair.f2_hz - pair.f1_hz, 20.0 * max(lws))
    span = 10.0 * delta
    if n is None:
        need = int(np.ceil(span / (min(lws) / _MIN_POINTS_PER_LINEWIDTH))) + 1
        n = min(max(_DEFAULT_GRID_POINTS, need), _MAX_GRID_POINTS)
    lo = center - 5.0 * delta
    if lo <= 0:
        raise ValueError("default grid would extend below 0 Hz; pass an explicit grid")
    return np.linspace(lo, center + 5.0 * delta, n)


def phase_curve(spec: Spectrum) -> np.ndarray:
    """Unwrapped transmission phase (rad), aligned with spec.f_hz.

    Exact transmission zeros have no phase; those samples take the phase of
    the straight line between their complex neighbors, which keeps the
    unwrap continuous across a lossless notch.
    """
    s = spec.s21.copy()
    dead = s == 0
    if np.any(dead):
        idx = np.flatnonzero(dead)
        for i in idx:
            left = s[i - 1] if i > 0 else s[i + 1]
            right = s[i + 1] if i < s.size - 1 else s[i - 1]
            s[i] = 0.5 * (left + right)
        if np.any(s == 0):  # neighbors cancelled exactly; nudge off zero
            s[s == 0] = np.finfo(float).tiny
    return np.unwrap(np.angle(s))


def phase_derivative(spec: Spectrum) -> np.ndarray:
    """d(phase)/df in rad/Hz: central differences inside, one-sided at the ends.

    Refuses (GridTooCoarseError) when the model snapshot in spec.meta
    predicts a feature inside the grid whose linewidth spans fewer than 8
    grid points — a derivative through an unresolved resonance is garbage.
    """
    _check_grid_resolution(spec)
    return np.gradient(phase_curve(spec), spec.f_hz)


def _model_features(meta: dict):
    """(frequency, loaded linewidth) pairs predicted by a meta snapshot."""
    keys = ("f_sto_hz", "q_sto", "f_cav_hz", "q_cav", "kappa", "q_ext1", "q_ext2")
    if not all(k in meta for k in keys):
        return []
    sys = CoupledSystem(
        meta["f_sto_hz"], meta["q_sto"], meta["f_cav_hz"], meta["q_cav"], meta["kappa"]
    )
    pair = coupled_eigenmodes(sys)
    ext = 1.0 / meta["q_ext1"] + 1.0 / meta["q_ext2"]
    feats = [
        (pair.f1_hz, pair.f1_hz * (1.0 / pair.q1 + ext)),
        (pair.f2_hz, pair.f2_hz * (1.0 / pair.q2 + ext)),
    ]
    if np.isfinite(sys.q_sto):
        feats.append((sys.f_sto_hz, sys.f_sto_hz / sys.q_sto))  # notch width
    return feats


def _check_grid_resolution(spec: Spectrum):
    feats = _model_features(spec.meta)
    if not feats:
        return  # imported data without a model snapshot: caller's judgement
    step = np.max(np.diff(spec.f_hz))
    lo, hi = spec.f_hz[0], spec.f_hz[-1]
    for f, lw in feats:
        if lo - 2 * lw <= f <= hi + 2 * lw and lw < _MIN_POINTS_PER_LINEWIDTH * step:
            raise GridTooCoarseError(
                f"feature at {f:.6g} Hz has linewidth {lw:.3g} Hz but the grid "
                f"step is {step:.3g} Hz (< {_MIN_POINTS_PER_LINEWIDTH} points per linewidth)"
            )


@dataclass(frozen=True)
class PeakNotchSummary:
    """Two refined peak frequencies, the notch between them, notch depth.

    depth_db = 20*log10(|S21|_notch / |S21|_stronger_peak), i.e. negative.
    """

    f_peak1_hz: float
    f_peak2_hz: float
    f_notch_hz: float
    depth_db: float


def _parabolic_vertex(x, y):
    """Vertex of the parabola through three points; falls back to the middle
    point when the three are collinear.

    Solved in coordinates centered on the middle point: the raw-coordinate
    normal equations cancel ~10 significant digits when x is ~1e9 Hz and
    the y variation is ~1e-4, which is exactly the regime of a refined
    resonance peak.
    """
    t0, t2 = x[0] - x[1], x[2] - x[1]
    y0, y1, y2 = y
    d0, d2 = y0 - y1, y2 - y1
    denom = t0 * t2 * (t0 - t2)
    a = (t2 * d0 - t0 * d2) / denom
    if a == 0:
        return x[1], y1
    b = (t0 * t0 * d2 - t2 * t2 * d0) / denom
    tv = -b / (2 * a)
    yv = y1 + tv * (b + a * tv)
    return x[1] + tv, yv


def _mag_db(s21: np.ndarray) -> np.ndarray:
    mag = np.abs(s21)
    floor = np.min(mag[mag > 0]) * 1e-16 if np.any(mag > 0) else 1e-300
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(np.maximum(mag, floor))


def _refine(f, y, i, lo=None, hi=None):
    lo = 0 if lo is None else lo
    hi = y.size - 1 if hi is None else hi
    if lo < i < hi:
        return _parabolic_vertex(f[i - 1 : i + 2], y[i - 1 : i + 2])
    return f[i], y[i]


def find_peaks_and_notch(spec: Spectrum) -> PeakNotchSummary:
    """Locate the two hybridized peaks and the transmission notch between them.

    Requires exactly two local maxima of |S21| standing at least 3 dB proud
    of the valley between them; anything else raises
    PeaksNotResolvedError carrying the strongest single peak found.  All
    three features are refined with a three-point parabola in
    log-magnitude.
    """
    db = _mag_db(spec.s21)
    f = spec.f_hz
    peaks, _ = _scipy_find_peaks(db, prominence=3.0)
    if peaks.size != 2:
        if peaks.size == 0:
            best = int(np.argmax(db))
        else:
            best = int(peaks[np.argmax(db[peaks])])
        f_best, _ = _refine(f, db, best)
        raise PeaksNotResolvedError(
            f"expected two resolved peaks, found {peaks.size}", single_peak_hz=f_best
        )
    i1, i2 = int(peaks[0]), int(peaks[1])
    between = slice(i1, i2 + 1)
    valley_db = float(np.min(db[between]))
    if db[i1] < valley_db + 3.0 or db[i2] < valley_db + 3.0:
        best = i1 if db[i1] >= db[i2] else i2
        f_best, _ = _refine(f, db, best)
        raise PeaksNotResolvedError(
            "peaks are less than 3 dB above the inter-peak minimum",
            single_peak_hz=f_best,
        )
    fp1, dbp1 = _refine(f, db, i1)
    fp2, dbp2 = _refine(f, db, i2)
    inotch = i1 + int(np.argmin(db[between]))
    fn, dbn = _refine(f, db, inotch, lo=i1, hi=i2)
    return PeakNotchSummary(
        f_peak1_hz=float(fp1),
        f_peak2_hz=float(fp2),
        f_notch_hz=float(fn),
        depth_db=float(dbn - max(dbp1, dbp2)),
    )


# ---------------------------------------------------------------------------
# CSV round trip.  Native format is f_hz,s21_re,s21_im at 17 significant
# digits (exact float64 round trip); import also accepts a dB/phase export.

def write_spectrum_csv(spec: Spectrum, path):
    with open(path, "w", newline="") as fh:
        for key in sorted(spec.meta):
            fh.write(f"# {key}={spec.meta[key]}\n")
        fh.write("f_hz,s21_re,s21_im\n")
        for f, s in zip(spec.f_hz, spec.s21):
            fh.write(f"{f:.17g},{s.real:.17g},{s.imag:.17g}\n")


def read_spectrum_csv(path) -> Spectrum:
    meta = {}
    rows = []
    header = None
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    try:
                        meta[k.strip()] = float(v.strip())
                    except ValueError:
                        meta[k.strip()] = v.strip()
                continue
            parts = [p.strip() for p in line.split(",")]
            if header is None:
                header = tuple(parts)
                if header not in (
                    ("f_hz", "s21_re", "s21_im"),
                    ("f_hz", "s21_db", "s21_phase_rad"),
                ):
                    raise ValueError(
                        f"{path}:{lineno}: unrecognized header {','.join(header)!r}"
                    )
                continue
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
            try:
                rows.append((float(parts[0]), float(parts[1]), float(parts[2])))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric value in {line!r}") from None
    if header is None or not rows:
        raise ValueError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=float)
    if header == ("f_hz", "s21_re", "s21_im"):
        s21 = arr[:, 1] + 1j * arr[:, 2]
    else:
        s21 = 10.0 ** (arr[:, 1] / 20.0) * np.exp(1j * arr[:, 2])
    meta.setdefault("source", str(path))
    return Spectrum(arr[:, 0], s21, meta)
