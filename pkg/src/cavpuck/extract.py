"""Resonance parameter extraction from complex S21 spectra.

Three estimators, same ResonanceEstimate output, deliberately independent
routes so they can cross-check each other:

* 3 dB bandwidth  — peak plus half-power crossings interpolated in the dB
  domain on a lightly averaged trace (the VNA-style fast estimate).
* Lorentzian fit  — |S21|^2 = A/(1 + 4 Q^2 (f/f0 - 1)^2) + B by damped
  Gauss-Newton, seeded from the 3 dB estimate.
* phase slope     — the phase-derivative extremum; for a Lorentzian the
  peak of |dphi/df| equals 2 Q_loaded / f0.  The extremum value is read
  off a least-squares arctangent model of the unwrapped phase, because
  finite-differencing a measured phase trace amplifies noise far past the
  slope being estimated.

The estimates share scaffolding (windowing, the damped Gauss-Newton loop)
but consume different aspects of the data — magnitude crossings, the full
power shape, the phase swing — so they still cross-check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.signal import find_peaks as _scipy_find_peaks

from .errors import (
    BandEdgeClippedError,
    NoConvergenceError,
    PeaksNotResolvedError,
)
from .network import (
    Spectrum,
    _refine,
    find_peaks_and_notch,
    phase_derivative,
    synthesize_s21,
)

_HALF_POWER_DB = 10.0 * math.log10(2.0)  # 3.0103 dB


class Method(str, Enum):
    THREE_DB = "3db"
    LORENTZ_FIT = "lorentz"
    PHASE_SLOPE = "phase"


@dataclass(frozen=True)
class ResonanceEstimate:
    f0_hz: float
    q_loaded: float
    amplitude: float          # |S21| at the peak
    method: Method
    residual: float | None = None   # rms misfit / peak power, fits only

    def as_dict(self) -> dict:
        return {
            "f0_hz": self.f0_hz,
            "q_loaded": self.q_loaded,
            "method": self.method.value,
            "residual": self.residual,
        }


def q_internal_from_loaded(q_loaded: float, insertion_loss_db: float) -> float:
    """Undress a loaded Q using the measured insertion loss (dB, positive).

    Q0 = QL / (1 - 10^(-IL/20)).  Only meaningful when the caller actually
    measured IL; nothing in this module applies it implicitly.
    """
    if insertion_loss_db <= 0:
        raise ValueError(f"insertion loss must be positive dB, got {insertion_loss_db}")
    return q_loaded / (1.0 - 10.0 ** (-insertion_loss_db / 20.0))


def _window(spec: Spectrum, near_hz: float, window_hz: float | None):
    f = spec.f_hz
    if window_hz is None:
        return np.arange(f.size)
    sel = np.flatnonzero(np.abs(f - near_hz) <= window_hz)
    if sel.size < 5:
        raise ValueError("analysis window contains fewer than 5 samples")
    return sel


def _nearest_local_max(f, y, near_hz):
    peaks, _ = _scipy_find_peaks(y)
    if peaks.size == 0:
        return int(np.argmax(y))
    return int(peaks[np.argmin(np.abs(f[peaks] - near_hz))])


def _boxcar(f, y, width_points):
    """Moving average of y; trims the half-window margins where the average
    would spill past the data, returning the matching slice of f."""
    w = int(width_points)
    if w % 2 == 0:
        w += 1
    w = min(w, max(1, (y.size - 1) // 10) | 1)
    if w < 3:
        return f, y
    half = w // 2
    return f[half:-half], np.convolve(y, np.full(w, 1.0 / w), mode="valid")


def _three_db_core(f, power, near_hz):
    """One 3 dB pass on a power trace: (f0, peak_db, f_hi, f_lo)."""
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(np.maximum(power, np.finfo(float).tiny))
    i = _nearest_local_max(f, db, near_hz)
    f0, peak_db = _refine(f, db, i)
    target = peak_db - _HALF_POWER_DB

    def cross(step):
        j = i
        while 0 <= j + step < f.size and db[j + step] > target:
            j += step
        if not (0 <= j + step < f.size):
            side = "upper" if step > 0 else "lower"
            raise BandEdgeClippedError(f"{side} half-power crossing is outside the band")
        # interpolate between the last sample above and the first below
        f_in, f_out = f[j], f[j + step]
        d_in, d_out = db[j], db[j + step]
        return f_in + (target - d_in) * (f_out - f_in) / (d_out - d_in)

    return f0, peak_db, cross(+1), cross(-1)


def q_three_db(spec: Spectrum, near_hz: float, window_hz: float | None = None) -> ResonanceEstimate:
    """Half-power-bandwidth estimate of the resonance nearest near_hz.

    Crossings are found by walking outward from the refined peak and
    linearly interpolating in the dB domain; if either crossing runs off
    the grid (or the analysis window) the band is too narrow and
    BandEdgeClippedError is raised.  A first raw pass sets the linewidth
    scale; the reported numbers come from a second pass over a trace
    averaged to about a twelfth of that linewidth, which suppresses noise
    on the crossings while biasing an ideal resonance by under 0.5%.
    """
    sel = _window(spec, near_hz, window_hz)
    f = spec.f_hz[sel]
    power = np.abs(spec.s21[sel]) ** 2
    if np.all(power == 0):
        raise PeaksNotResolvedError("spectrum is identically zero in the window")
    f0, peak_db, f_hi, f_lo = _three_db_core(f, power, near_hz)

    step = float(np.median(np.diff(f))) if f.size > 1 else 1.0
    points_per_lw = (f_hi - f_lo) / step
    f_s, power_s = _boxcar(f, power, round(points_per_lw / 12.0))
    if power_s is not power:
        try:
            f0, peak_db, f_hi, f_lo = _three_db_core(f_s, power_s, near_hz)
        except BandEdgeClippedError:
            pass  # crossing sits inside the margin the average trimmed; keep the raw pass

    return ResonanceEstimate(
        f0_hz=f0,
        q_loaded=f0 / (f_hi - f_lo),
        amplitude=10.0 ** (peak_db / 20.0),
        method=Method.THREE_DB,
    )


# ---------------------------------------------------------------------------
# Damped Gauss-Newton, shared by the |S21|^2 fit and the phase-model fit.

def _lorentz_model(x, p):
    amp, x0, q, base = p
    u = 2.0 * q * (x / x0 - 1.0)
    return amp / (1.0 + u * u) + base


def _lorentz_jacobian(x, p):
    amp, x0, q, base = p
    r = x / x0 - 1.0
    u = 2.0 * q * r
    d = 1.0 + u * u
    j = np.empty((x.size, 4))
    j[:, 0] = 1.0 / d
    j[:, 1] = amp / (d * d) * 2.0 * u * (2.0 * q * x / (x0 * x0))
    j[:, 2] = -amp / (d * d) * 2.0 * u * (2.0 * r)
    j[:, 3] = 1.0
    return j


def _phase_model(x, p):
    phi0, swing, x0, q = p
    return phi0 + swing * np.arctan(2.0 * q * (x / x0 - 1.0))


def _phase_jacobian(x, p):
    phi0, swing, x0, q = p
    r = x / x0 - 1.0
    u = 2.0 * q * r
    d = 1.0 + u * u
    j = np.empty((x.size, 4))
    j[:, 0] = 1.0
    j[:, 1] = np.arctan(u)
    j[:, 2] = -swing / d * 2.0 * q * x / (x0 * x0)
    j[:, 3] = swing / d * 2.0 * r
    return j


def _gauss_newton(model, jacobian, x, y, p0, *, weights=None, accept=None,
                  max_iter=100, step_tol=1e-9):
    """Levenberg-damped Gauss-Newton; damping x10 on a rejected step, /10 on
    an accepted one, starting at 1e-3.  Returns (params, rms_residual)."""
    p = np.asarray(p0, dtype=float)
    sw = None if weights is None else np.sqrt(np.asarray(weights, dtype=float))

    def ssr_of(params):
        r = model(x, params) - y
        if sw is not None:
            r = r * sw
        return float(np.sum(r * r))

    lam = 1e-3
    ssr = ssr_of(p)
    for _ in range(max_iter):
        r = model(x, p) - y
        jac = jacobian(x, p)
        if sw is not None:
            r = r * sw
            jac = jac * sw[:, None]
        jtj = jac.T @ jac
        jtr = jac.T @ r
        diag = np.diag(jtj).copy()
        diag[diag == 0] = 1.0
        try:
            step = np.linalg.solve(jtj + lam * np.diag(diag), -jtr)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        cand = p + step
        ssr_new = ssr_of(cand)
        if np.isfinite(ssr_new) and ssr_new <= ssr and (accept is None or accept(cand)):
            scale = float(np.max(np.abs(cand))) + 1e-300
            rel = np.max(np.abs(step) / np.maximum(np.abs(cand), 1e-9 * scale))
            p, ssr = cand, ssr_new
            lam = max(lam / 10.0, 1e-14)
            if rel < step_tol:
                return p, math.sqrt(ssr / x.size)
        else:
            lam *= 10.0
            if lam > 1e15:
                break
    raise NoConvergenceError(
        f"fit did not converge in {max_iter} iterations",
        last_params=p,
        last_residual=math.sqrt(ssr / x.size),
    )


def _gauss_newton_lorentz(x, y, p0, max_iter=100, step_tol=1e-9):
    return _gauss_newton(
        _lorentz_model, _lorentz_jacobian, x, y, p0,
        accept=lambda p: p[2] > 0 and p[1] > 0,
        max_iter=max_iter, step_tol=step_tol,
    )


def fit_lorentzian(spec: Spectrum, near_hz: float, window_hz: float | None = None) -> ResonanceEstimate:
    """Least-squares Lorentzian on |S21|^2 with a constant baseline.

    Seeded from the 3 dB estimate; everything is normalized (frequency to
    the seed f0, power to the window maximum) before iterating, so the
    damping schedule behaves the same at any scale.  NoConvergenceError
    carries the last iterate.
    """
    seed = q_three_db(spec, near_hz, window_hz)
    sel = _window(spec, near_hz, window_hz)
    f = spec.f_hz[sel]
    y = np.abs(spec.s21[sel]) ** 2
    y_ref = float(np.max(y))
    x = f / seed.f0_hz
    yn = y / y_ref
    base0 = float(np.min(yn))
    p0 = [max(float(np.max(yn)) - base0, 1e-12), 1.0, seed.q_loaded, base0]
    p, rms = _gauss_newton_lorentz(x, yn, p0)
    amp, x0, q, base = p
    return ResonanceEstimate(
        f0_hz=x0 * seed.f0_hz,
        q_loaded=q,
        amplitude=math.sqrt(max(amp + base, 0.0) * y_ref),
        method=Method.LORENTZ_FIT,
        residual=rms,  # yn was normalized, so this is already per unit peak power
    )


def q_phase_slope(spec: Spectrum, near_hz: float, window_hz: float | None = None) -> ResonanceEstimate:
    """Loaded Q from the phase-derivative extremum nearest near_hz.

    Q = f0 * |dphi/df|_peak / 2.  The extremum value is read off a
    least-squares arctangent model of the unwrapped phase around the
    resonance (weighted by |S21|^2, the inverse phase-noise variance),
    because finite differences of a measured phase trace carry noise on
    the order of the slope itself.  If the 3 dB pre-pass or the model fit
    fails, the raw finite-difference extremum is used instead.
    """
    dphi = phase_derivative(spec)
    sel = _window(spec, near_hz, window_hz)
    f = spec.f_hz[sel]
    a = np.abs(dphi[sel])
    if np.ptp(a) == 0.0:
        raise PeaksNotResolvedError("phase derivative has no extremum in the window")
    i = _nearest_local_max(f, a, near_hz)
    f_raw, a_raw = _refine(f, a, i)
    f0, value = f_raw, a_raw

    try:
        seed = q_three_db(spec, near_hz, window_hz)
    except (BandEdgeClippedError, PeaksNotResolvedError):
        seed = None
    if seed is not None:
        lw = seed.f0_hz / seed.q_loaded
        fit_sel = np.flatnonzero(np.abs(f - seed.f0_hz) <= 4.0 * lw)
        if fit_sel.size >= 8:
            s21 = spec.s21[sel][fit_sel]
            phase = np.unwrap(np.angle(s21))
            x = f[fit_sel] / seed.f0_hz
            weights = np.abs(s21) ** 2
            p0 = [
                float(phase[np.argmin(np.abs(x - 1.0))]),
                float(phase[-1] - phase[0]) / math.pi,
                1.0,
                seed.q_loaded,
            ]
            try:
                p, _ = _gauss_newton(
                    _phase_model, _phase_jacobian, x, phase, p0,
                    weights=weights / float(np.max(weights)),
                    accept=lambda p: p[3] > 0 and p[2] > 0,
                )
            except NoConvergenceError:
                pass
            else:
                # the model's own derivative extremum: |dphi/df| = 2|swing| q / f0
                f0 = float(p[2]) * seed.f0_hz
                value = 2.0 * abs(float(p[1])) * float(p[3]) / f0

    idx_amp = int(np.argmin(np.abs(spec.f_hz - f0)))
    return ResonanceEstimate(
        f0_hz=f0,
        q_loaded=f0 * abs(value) / 2.0,
        amplitude=float(np.abs(spec.s21[idx_amp])),
        method=Method.PHASE_SLOPE,
    )


# ---------------------------------------------------------------------------
# Permittivity sensitivity of the spectral features.

@dataclass(frozen=True)
class EpsSensitivity:
    """Central-difference feature shifts per unit permittivity (Hz/unit)."""

    dfpeak1_deps: float
    dfpeak2_deps: float
    dfnotch_deps: float


@dataclass(frozen=True)
class QProducts:
    """|df/deps| x phase-derivative extremum, per feature (rad/unit).

    A readout figure of merit: frequency responsivity times phase sharpness
    at the feature one would actually track.
    """

    mode1: float
    mode2: float
    notch: float


def sensitivity_to_eps(builder, eps_r: float, delta: float = 0.5) -> EpsSensitivity:
    """Central differences of the three spectral features over eps_r +- delta.

    builder(eps_r) -> TwoPortModel; spectra are synthesized on each model's
    own default grid (the features are refined, so the grids need not
    match).  PeaksNotResolvedError from either endpoint propagates.
    """
    lo = find_peaks_and_notch(synthesize_s21(builder(eps_r - delta)))
    hi = find_peaks_and_notch(synthesize_s21(builder(eps_r + delta)))
    twod = 2.0 * delta
    return EpsSensitivity(
        dfpeak1_deps=(hi.f_peak1_hz - lo.f_peak1_hz) / twod,
        dfpeak2_deps=(hi.f_peak2_hz - lo.f_peak2_hz) / twod,
        dfnotch_deps=(hi.f_notch_hz - lo.f_notch_hz) / twod,
    )


def sensitivity_q_product(builder, eps_r: float, delta: float = 0.5) -> QProducts:
    """Feature responsivity times phase-derivative sharpness at eps_r."""
    sens = sensitivity_to_eps(builder, eps_r, delta)
    spec = synthesize_s21(builder(eps_r))
    summary = find_peaks_and_notch(spec)
    dphi = np.abs(phase_derivative(spec))
    f = spec.f_hz

    def sharpness(f_feature):
        i = _nearest_local_max(f, dphi, f_feature)
        _, val = _refine(f, dphi, i)
        return abs(val)

    return QProducts(
        mode1=abs(sens.dfpeak1_deps) * sharpness(summary.f_peak1_hz),
        mode2=abs(sens.dfpeak2_deps) * sharpness(summary.f_peak2_hz),
        notch=abs(sens.dfnotch_deps) * sharpness(summary.f_notch_hz),
    )
