"""Spectral and time-domain estimators for libration signals.

PSD estimation and the Lorentzian thermal-peak fit follow the amplitude
convention S_phi(w) = 2*gamma*k*T / (I*((w0^2-w^2)^2 + gamma^2*w^2)), so the
fitted linewidth is directly the energy damping rate gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize, signal, stats

from .errors import (DegenerateModes, NoConvergence, NonPositiveDamping,
                     NonStationary, NoPeak, TooFewSamples, TooShort)
from .params import KB, MechanicalParams

TWO_PI = 2.0 * math.pi

HANN_ENBW = 1.5  # equivalent noise bandwidth of the Hann window, in bins


@dataclass
class Psd:
    freqs: np.ndarray            # Hz, one-sided
    values: np.ndarray           # rad^2/Hz
    segment_count: int
    window: str
    resolution_bw: float         # Hz


@dataclass
class PsdFit:
    omega0: float                # rad/s
    gamma: float                 # rad/s
    amplitude: float             # numerator of the Lorentzian, rad^2 (rad/s)^3
    residual_norm: float         # rms relative residual over the fit window
    covariance: np.ndarray       # 3x3, (omega0, gamma, amplitude)


@dataclass
class RingdownFit:
    omega: tuple                 # rad/s, one or two entries
    gamma: tuple                 # rad/s, amplitude decay is exp(-gamma*t/2)
    amplitude: tuple             # rad
    phase: tuple                 # rad
    offset: float
    residual_norm: float


@dataclass
class HistogramStats:
    bin_edges: np.ndarray
    counts: np.ndarray
    excess_kurtosis: float
    bimodal: bool
    peak_positions: tuple


def welch_psd(series: np.ndarray, dt: float, segment_len: int,
              overlap: float = 0.5, window: str = "hann") -> Psd:
    """One-sided Welch density estimate of an evenly sampled angle record."""
    series = np.asarray(series, dtype=float)
    if series.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if segment_len < 8:
        raise ValueError("segment_len must be at least 8")
    if series.size < 2 * segment_len:
        raise TooShort(
            f"need at least 2 segments ({2 * segment_len} samples), "
            f"got {series.size}")
    fs = 1.0 / dt
    noverlap = int(overlap * segment_len)
    freqs, values = signal.welch(series, fs=fs, window=window,
                                 nperseg=segment_len, noverlap=noverlap,
                                 detrend="constant", scaling="density")
    step = segment_len - noverlap
    n_seg = 1 + (series.size - segment_len) // step
    enbw = HANN_ENBW if window == "hann" else 1.0
    return Psd(freqs=freqs, values=values, segment_count=n_seg,
               window=window, resolution_bw=enbw * fs / segment_len)


def _lorentzian_model(f_hz, omega0, gamma, amplitude):
    w = TWO_PI * f_hz
    return amplitude / ((omega0**2 - w**2) ** 2 + (gamma * w) ** 2)


def thermal_psd_model(f_hz, mech: MechanicalParams) -> np.ndarray:
    """Analytic one-sided thermal angle PSD in rad^2/Hz."""
    amp = 2.0 * KB * mech.temperature_T * mech.gamma / mech.inertia_I
    # one-sided per-Hz density: variance = int_0^inf 2*S(2*pi*f) df
    return 2.0 * _lorentzian_model(np.asarray(f_hz, dtype=float),
                                   mech.omega_phi, mech.gamma, amp)


def fit_psd_lorentzian(psd: Psd, init: Optional[tuple] = None,
                       fit_halfwidths: float = 20.0) -> PsdFit:
    """Weighted fit of a damped-oscillator Lorentzian to a PSD peak.

    The peak must stand at least a factor 5 above the median density.
    Weights are 1/data, appropriate for chi^2-distributed Welch estimates
    with a segment-count-independent relative error.
    """
    mask0 = psd.freqs > 0
    freqs = psd.freqs[mask0]
    values = psd.values[mask0]
    i_peak = int(np.argmax(values))
    peak = values[i_peak]
    floor = float(np.median(values))
    if floor <= 0 or peak / floor <= 5.0:
        raise NoPeak(f"peak/median = {peak / max(floor, 1e-300):.2f} <= 5")
    f_peak = freqs[i_peak]

    if init is None:
        half = peak / 2.0
        above = values >= half
        f_lo = freqs[above][0]
        f_hi = freqs[above][-1]
        fwhm_hz = max(f_hi - f_lo, psd.resolution_bw)
        omega0 = TWO_PI * f_peak
        gamma0 = TWO_PI * fwhm_hz
        amp0 = peak * (gamma0 * omega0) ** 2
    else:
        omega0, gamma0, amp0 = init

    halfwidth_hz = fit_halfwidths * gamma0 / TWO_PI
    window = (freqs >= f_peak - halfwidth_hz) & (freqs <= f_peak + halfwidth_hz)
    if window.sum() < 8:
        window = slice(None)
    f_fit = freqs[window]
    y_fit = values[window]

    def residuals(p):
        return (_lorentzian_model(f_fit, p[0], p[1], p[2]) - y_fit) / y_fit

    result = optimize.least_squares(residuals, x0=[omega0, gamma0, amp0],
                                    method="lm", xtol=1e-14, ftol=1e-14)
    if not result.success:
        raise NoConvergence(result.nfev, float(np.linalg.norm(result.fun)))
    omega0, gamma, amp = np.abs(result.x)
    m = result.fun.size
    rms = float(np.sqrt(np.mean(result.fun**2)))
    jac = result.jac
    try:
        cov = np.linalg.inv(jac.T @ jac) * rms**2 * m / max(m - 3, 1)
    except np.linalg.LinAlgError:
        cov = np.full((3, 3), np.nan)
    return PsdFit(omega0=float(omega0), gamma=float(gamma),
                  amplitude=float(amp), residual_norm=rms, covariance=cov)


def _envelope_decay_init(t, y):
    """Initial (amplitude, gamma) from the log of the analytic envelope."""
    env = np.abs(signal.hilbert(y - np.mean(y)))
    # trim the ends where the Hilbert envelope rings
    n = env.size
    sl = slice(n // 20, n - n // 20)
    tt, ee = t[sl], env[sl]
    good = ee > np.max(ee) * 1e-3
    slope, intercept = np.polyfit(tt[good], np.log(ee[good]), 1)
    return math.exp(intercept), -2.0 * slope


def fit_ringdown(t: np.ndarray, y: np.ndarray, two_modes: bool = False,
                 init: Optional[dict] = None) -> RingdownFit:
    """Fit decaying sinusoids A*sin(w*t+p)*exp(-gamma*t/2) (+ offset).

    Initial frequencies come from periodogram peaks and the decay rate from
    a linear fit to the log envelope; the refinement is damped Gauss-Newton
    so the result is deterministic for a given record.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size != y.size or t.size < 32:
        raise TooShort(f"ringdown record too short: {t.size} samples")
    dt = t[1] - t[0]
    t0 = t - t[0]

    freqs = np.fft.rfftfreq(t.size, dt)
    spec = np.abs(np.fft.rfft(y - np.mean(y)))
    spec[0] = 0.0
    order = np.argsort(spec)[::-1]
    f1 = freqs[order[0]]
    resolution = 1.0 / (t0[-1] + dt)
    if two_modes:
        f2 = None
        for idx in order[1:]:
            if abs(freqs[idx] - f1) > 2 * resolution:
                f2 = freqs[idx]
                break
        if f2 is None or abs(f2 - f1) < 2 * resolution:
            raise DegenerateModes(
                f"mode splitting below the spectral resolution {resolution:g} Hz")

    amp0, gamma0 = _envelope_decay_init(t0, y)
    if init:
        f1 = init.get("f1", f1)
        gamma0 = init.get("gamma", gamma0)
        if two_modes:
            f2 = init.get("f2", f2)

    if two_modes:
        x0 = [amp0, TWO_PI * f1, 0.0, gamma0,
              amp0 / 3.0, TWO_PI * f2, 0.0, gamma0, np.mean(y)]
    else:
        x0 = [amp0, TWO_PI * f1, 0.0, gamma0, np.mean(y)]

    def model(p):
        out = np.full_like(t0, p[-1])
        for k in range(0, len(p) - 1, 4):
            a, w, ph, g = p[k:k + 4]
            out = out + a * np.sin(w * t0 + ph) * np.exp(-g * t0 / 2.0)
        return out

    scale = max(np.std(y), 1e-30)

    def residuals(p):
        return (model(p) - y) / scale

    result = optimize.least_squares(residuals, x0=x0, method="lm",
                                    xtol=1e-14, ftol=1e-14, max_nfev=20000)
    if not result.success:
        raise NoConvergence(result.nfev, float(np.linalg.norm(result.fun)))
    p = result.x
    modes = [(p[k], p[k + 1], p[k + 2], p[k + 3])
             for k in range(0, len(p) - 1, 4)]
    # canonical form: positive amplitude and frequency, sorted by frequency
    canon = []
    for a, w, ph, g in modes:
        if w < 0:
            w, ph = -w, math.pi - ph
        if a < 0:
            a, ph = -a, ph + math.pi
        ph = math.remainder(ph, TWO_PI)
        canon.append((a, w, ph, g))
    canon.sort(key=lambda m: m[1])
    if two_modes and abs(canon[0][1] - canon[1][1]) < TWO_PI * resolution:
        raise DegenerateModes("fit collapsed both modes onto one frequency")
    rms = float(np.sqrt(np.mean(result.fun**2)))
    return RingdownFit(
        amplitude=tuple(m[0] for m in canon),
        omega=tuple(m[1] for m in canon),
        phase=tuple(m[2] for m in canon),
        gamma=tuple(m[3] for m in canon),
        offset=float(p[-1]),
        residual_norm=rms)


def effective_temperature(bath_temperature: float, gamma_bare: float,
                          gamma_eff: float) -> float:
    """Center-of-motion temperature T*gamma/gamma_eff of the damped mode."""
    if gamma_eff <= 0:
        raise NonPositiveDamping(
            f"gamma_eff = {gamma_eff:g} rad/s; the mode is not damped")
    return bath_temperature * gamma_bare / gamma_eff


def equipartition_temperature(phi: np.ndarray, mech: MechanicalParams,
                              drift_tol: float = 0.2) -> float:
    """Temperature I*w0^2*var(phi)/k from the equipartition theorem.

    The record is rejected as non-stationary when the variance of its two
    halves differs by more than drift_tol relative to their mean.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.size < 16:
        raise TooShort(f"record too short for a variance estimate: {phi.size}")
    half = phi.size // 2
    v1 = float(np.var(phi[:half]))
    v2 = float(np.var(phi[half:]))
    mean_v = 0.5 * (v1 + v2)
    if mean_v > 0 and abs(v1 - v2) / mean_v > drift_tol:
        raise NonStationary(
            f"variance drift {abs(v1 - v2) / mean_v:.1%} between halves")
    var = float(np.var(phi))
    return mech.inertia_I * mech.omega_phi**2 * var / KB


def amplitude_histogram(phi: np.ndarray, n_bins: int = 80,
                        min_samples: int = 10_000,
                        dip_fraction: float = 0.2) -> HistogramStats:
    """Histogram of the angle record with a conservative bimodality test.

    Bimodal means: two separated local maxima of the smoothed histogram
    with a dip between them at least dip_fraction below the smaller peak.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.size < min_samples:
        raise TooFewSamples(f"{phi.size} < {min_samples} samples")
    counts, edges = np.histogram(phi, bins=n_bins)
    kurt = float(stats.kurtosis(phi, fisher=True, bias=False))

    width = max(n_bins // 16, 3)
    kernel = np.ones(width) / width
    smooth = np.convolve(counts.astype(float), kernel, mode="same")
    centers = 0.5 * (edges[:-1] + edges[1:])

    peaks, _ = signal.find_peaks(smooth, height=0.05 * smooth.max(),
                                 distance=width)
    bimodal = False
    positions: tuple = ()
    if peaks.size >= 2:
        top2 = peaks[np.argsort(smooth[peaks])[::-1][:2]]
        lo, hi = sorted(top2)
        valley = float(smooth[lo:hi + 1].min())
        smaller = min(smooth[lo], smooth[hi])
        if valley <= (1.0 - dip_fraction) * smaller:
            bimodal = True
            positions = (float(centers[lo]), float(centers[hi]))
    return HistogramStats(bin_edges=edges, counts=counts,
                          excess_kurtosis=kurt, bimodal=bimodal,
                          peak_positions=positions)
