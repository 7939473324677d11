"""FFT spectroscopy and spectral analysis.

Spectra are built from the complex FID scaled by ``dt``, so a line
``exp(2πi ν0 t - π Γ t)`` becomes ``1 / (π Γ + 2πi (ν - ν0))``. Its real
part (absorption) is a Lorentzian of FWHM Γ and height ``1/(πΓ)``. Its modulus
is broader, with FWHM ``sqrt(3) Γ``, and it is not additive across overlapping
lines. Analysis therefore defaults to ``mode="absorption"``. The simulated
FIDs start with zero phase, so no phase correction is needed.
``mode="magnitude"`` is available for data whose phase is unknown.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal

from .dynamics import (
    DEFAULT_DT_S,
    DEFAULT_N_SAMPLES,
    FidRecord,
    fid_analytic_averaged,
    noise_averaged_fids,
    worker_count,
)
from .model import NoiseModel, SpinSystemParams, magnify_coupling

log = logging.getLogger(__name__)

DEFAULT_WINDOW_HZ = (850.0, 1200.0)
DEFAULT_ZERO_PAD = 4
DEFAULT_PROMINENCE = 0.05
LORENTZ_CORE_FRACTION = 0.7
FIT_FTOL = 1e-10
FIT_MAX_NFEV = 500
MODES = ("absorption", "magnitude")


@dataclass
class Spectrum:
    """Uniformly binned spectrum; ``amplitude`` is the lineshape used for analysis."""

    freq_hz: np.ndarray
    complex_values: np.ndarray
    mode: str = "absorption"
    window: str = "none"
    amplitude: np.ndarray = field(default=None)

    def __post_init__(self):
        self.freq_hz = np.asarray(self.freq_hz, dtype=float)
        self.complex_values = np.asarray(self.complex_values, dtype=complex)
        if self.freq_hz.shape != self.complex_values.shape or self.freq_hz.ndim != 1:
            raise ValueError("frequency axis and values must be 1-D arrays of equal length")
        if self.amplitude is None:
            if self.mode == "absorption":
                self.amplitude = self.complex_values.real.copy()
            elif self.mode == "magnitude":
                self.amplitude = np.abs(self.complex_values)
            else:
                raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        else:
            self.amplitude = np.asarray(self.amplitude, dtype=float)

    @property
    def bin_hz(self) -> float:
        return float(self.freq_hz[1] - self.freq_hz[0])

    def mask(self, window_hz=None) -> np.ndarray:
        if window_hz is None:
            return np.ones(self.freq_hz.size, dtype=bool)
        lo, hi = window_hz
        return (self.freq_hz >= lo) & (self.freq_hz <= hi)

    def scaled(self, factor: float) -> "Spectrum":
        return Spectrum(self.freq_hz, factor * self.complex_values, self.mode, self.window, factor * self.amplitude)

    def __add__(self, other: "Spectrum") -> "Spectrum":
        check_same_grid(self, other)
        return Spectrum(self.freq_hz, self.complex_values + other.complex_values, self.mode, self.window,
                        self.amplitude + other.amplitude)


def check_same_grid(a: Spectrum, b: Spectrum):
    if a.freq_hz.shape != b.freq_hz.shape or not np.allclose(a.freq_hz, b.freq_hz, rtol=0, atol=1e-9):
        raise ValueError("spectra are not on a common frequency grid")


def fft_spectrum(fid: FidRecord, zero_pad_factor: int = DEFAULT_ZERO_PAD, mode: str = "absorption",
                 exp_window_hz: float | None = None, first_point_scale: float = 1.0) -> Spectrum:
    """Discrete Fourier transform of a FID, centred on 0 Hz.

    Parameters
    ----------
    zero_pad_factor : int
        The record is zero-filled to ``zero_pad_factor * n_samples`` points.
    exp_window_hz : float, optional
        Exponential apodisation ``exp(-π r t)``; broadens lines by ``r`` Hz.
    first_point_scale : float
        Weight of the t = 0 sample. 0.5 removes the ``dt/2`` baseline offset of
        the rectangle rule; the default 1.0 keeps the DFT unitary.
    """
    if int(zero_pad_factor) != zero_pad_factor or zero_pad_factor < 1:
        raise ValueError(f"zero_pad_factor must be an integer >= 1, got {zero_pad_factor}")
    if fid.n_samples < 2:
        raise ValueError("need at least two FID samples")
    x = fid.values.copy()
    window = "none"
    if exp_window_hz:
        x *= np.exp(-np.pi * exp_window_hz * fid.times)
        window = f"exponential({exp_window_hz})"
    x[0] *= first_point_scale
    n = fid.n_samples * int(zero_pad_factor)
    values = np.fft.fftshift(np.fft.fft(x, n)) * fid.dt_s
    freq = np.fft.fftshift(np.fft.fftfreq(n, fid.dt_s))
    return Spectrum(freq, values, mode, window)


def lorentzian(freq_hz, position_hz, height, fwhm_hz):
    """``h (Γ/2)² / ((ν - ν0)² + (Γ/2)²)``; ``height`` is the peak value."""
    hw2 = (0.5 * fwhm_hz) ** 2
    return height * hw2 / ((np.asarray(freq_hz) - position_hz) ** 2 + hw2)


@dataclass
class PeakEstimate:
    position_hz: float
    fwhm_hz: float
    fwhm_lorentz_hz: float
    height: float
    position_uncertainty_hz: float

    def to_dict(self) -> dict:
        return {
            "position_hz": self.position_hz,
            "fwhm_hz": self.fwhm_hz,
            "fwhm_lorentz_hz": self.fwhm_lorentz_hz,
            "height": self.height,
            "position_uncertainty_hz": self.position_uncertainty_hz,
        }


def _half_crossing(freq, amp, i, half, step):
    j = i
    while 0 <= j + step < amp.size and amp[j + step] >= half:
        j += step
    k = j + step
    if not 0 <= k < amp.size:
        return freq[j]
    # linear interpolation between the last point above and the first below
    return freq[j] + (freq[k] - freq[j]) * (amp[j] - half) / (amp[j] - amp[k])


def _lorentz_core_fit(freq, amp, i, height, position, fwhm):
    level = LORENTZ_CORE_FRACTION * height
    lo = i
    while lo > 0 and amp[lo - 1] >= level:
        lo -= 1
    hi = i
    while hi < amp.size - 1 and amp[hi + 1] >= level:
        hi += 1
    if hi - lo + 1 < 4:
        return fwhm, 0.5 * (freq[1] - freq[0])
    x, y = freq[lo : hi + 1], amp[lo : hi + 1]
    try:
        popt, pcov = optimize.curve_fit(lorentzian, x, y, p0=(position, height, fwhm), maxfev=2000)
    except (RuntimeError, optimize.OptimizeWarning):
        return fwhm, 0.5 * (freq[1] - freq[0])
    sd = float(np.sqrt(pcov[0, 0])) if np.isfinite(pcov[0, 0]) else 0.5 * (freq[1] - freq[0])
    return abs(float(popt[2])), sd


def find_peaks(spec: Spectrum, window_hz=DEFAULT_WINDOW_HZ, max_peaks: int = 4,
               prominence: float = DEFAULT_PROMINENCE) -> list[PeakEstimate]:
    """Locate and characterise peaks inside ``window_hz``.

    Positions use three-point parabolic refinement, ``fwhm_hz`` uses linearly
    interpolated half-height crossings, and ``fwhm_lorentz_hz`` is a Lorentzian
    least-squares width restricted to points above 70% of the peak height.
    Peaks whose prominence is below ``prominence`` times the window maximum are
    ignored. The result is sorted by position; an empty list means no peak.
    """
    mask = spec.mask(window_hz)
    if not mask.any():
        raise ValueError(f"window {window_hz} lies outside the spectrum")
    idx_window = np.flatnonzero(mask)
    freq, amp = spec.freq_hz, spec.amplitude
    top = amp[idx_window].max()
    if top <= 0:
        return []
    local, props = signal.find_peaks(amp[idx_window], prominence=prominence * top)
    if local.size == 0:
        return []
    order = np.argsort(amp[idx_window][local])[::-1][:max_peaks]
    df = spec.bin_hz
    peaks = []
    for i in sorted(idx_window[local[order]]):
        y0, y1, y2 = amp[i - 1], amp[i], amp[i + 1]
        denom = y0 - 2 * y1 + y2
        delta = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        position = freq[i] + delta * df
        height = y1 - 0.25 * (y0 - y2) * delta
        half = 0.5 * height
        fwhm = _half_crossing(freq, amp, i, half, +1) - _half_crossing(freq, amp, i, half, -1)
        fwhm_l, sd = _lorentz_core_fit(freq, amp, i, height, position, fwhm)
        peaks.append(PeakEstimate(float(position), float(fwhm), float(fwhm_l), float(height), float(sd)))
    return peaks


@dataclass
class DecompositionResult:
    lam: float
    residual: float
    window_hz: tuple[float, float]

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "residual": self.residual, "window_hz": list(self.window_hz)}


def fit_decomposition_scale(s_t: Spectrum, parts, window_hz=DEFAULT_WINDOW_HZ) -> DecompositionResult:
    """Least-squares ``λ`` minimising ``∫ (s_T - λ Σ parts)² dν`` over the window."""
    parts = list(parts)
    for s in parts:
        check_same_grid(s_t, s)
    mask = s_t.mask(window_hz)
    t = s_t.amplitude[mask]
    s = np.sum([p.amplitude[mask] for p in parts], axis=0)
    ss = float(np.dot(s, s))
    if ss == 0.0:
        raise ValueError("summed component spectrum has zero energy in the window")
    lam = float(np.dot(t, s)) / ss
    residual = float(np.sum((t - lam * s) ** 2) * abs(s_t.bin_hz))
    return DecompositionResult(lam, residual, tuple(float(w) for w in window_hz))


CONSTRAINTS = ("none", "equal_width", "equal_width_and_height")


@dataclass
class FitResult:
    peaks: list[PeakEstimate]
    freq_hz: np.ndarray
    curve: np.ndarray
    components: np.ndarray
    constraint: str
    converged: bool
    status: int
    message: str
    cost: float
    nfev: int

    @property
    def n_local_maxima(self) -> int:
        return count_local_maxima(self.curve)

    @property
    def single_fat_peak(self) -> bool:
        return self.n_local_maxima == 1

    def to_dict(self) -> dict:
        return {
            "n_peaks": len(self.peaks),
            "constraint": self.constraint,
            "converged": self.converged,
            "status": self.status,
            "message": self.message,
            "cost": self.cost,
            "nfev": self.nfev,
            "n_local_maxima": self.n_local_maxima,
            "single_fat_peak": self.single_fat_peak,
            "peaks": [p.to_dict() for p in self.peaks],
        }


def count_local_maxima(y) -> int:
    """Number of local maxima of a sampled curve; flat tops count once."""
    y = np.asarray(y, dtype=float)
    d = np.sign(np.diff(y))
    d = d[d != 0]
    return int(np.sum((d[:-1] > 0) & (d[1:] < 0)))


def _unpack(x, n, constraint):
    if constraint == "none":
        pos, hgt, wid = x[:n], x[n : 2 * n], x[2 * n :]
    elif constraint == "equal_width":
        pos, hgt, wid = x[:n], x[n : 2 * n], np.full(n, x[2 * n])
    else:
        pos, hgt, wid = x[:n], np.full(n, x[n]), np.full(n, x[n + 1])
    return pos, hgt, wid


def fit_multi_lorentzian(spec: Spectrum, n_peaks: int, init, bounds=None, constraint: str = "none",
                         window_hz=DEFAULT_WINDOW_HZ, position_range_hz: float = 10.0) -> FitResult:
    """Least-squares fit of a sum of Lorentzians to ``spec.amplitude``.

    Parameters
    ----------
    init : sequence of (position, height, fwhm)
        One starting triple per peak. Under tied constraints the shared
        width/height start from the mean of the given values.
    bounds : sequence of (low, high), optional
        Position limits per peak; default ``position ± position_range_hz``.
    constraint : {"none", "equal_width", "equal_width_and_height"}

    A trust-region reflective solver stops when the relative cost change
    drops below 1e-10 or after 500 function evaluations. Running out of
    evaluations is reported through ``converged=False``, not raised.
    """
    if n_peaks not in (3, 4):
        raise ValueError(f"n_peaks must be 3 or 4, got {n_peaks}")
    if constraint not in CONSTRAINTS:
        raise ValueError(f"constraint must be one of {CONSTRAINTS}, got {constraint!r}")
    init = np.asarray(init, dtype=float)
    if init.shape != (n_peaks, 3):
        raise ValueError(f"init must hold {n_peaks} (position, height, fwhm) triples")
    if bounds is None:
        bounds = [(p - position_range_hz, p + position_range_hz) for p in init[:, 0]]
    bounds = np.asarray(bounds, dtype=float)
    if np.any(init[:, 0] < bounds[:, 0]) or np.any(init[:, 0] > bounds[:, 1]):
        raise ValueError("initial positions must lie inside their bounds")

    mask = spec.mask(window_hz)
    x, y = spec.freq_hz[mask], spec.amplitude[mask]
    scale = float(np.max(np.abs(y))) or 1.0
    min_width = 1e-3 * abs(spec.bin_hz)
    n = n_peaks
    pos0, h0, w0 = init[:, 0], init[:, 1] / scale, init[:, 2]
    if constraint == "none":
        x0 = np.concatenate([pos0, h0, w0])
        lo = np.concatenate([bounds[:, 0], np.zeros(n), np.full(n, min_width)])
        hi = np.concatenate([bounds[:, 1], np.full(n, np.inf), np.full(n, np.inf)])
    elif constraint == "equal_width":
        x0 = np.concatenate([pos0, h0, [w0.mean()]])
        lo = np.concatenate([bounds[:, 0], np.zeros(n), [min_width]])
        hi = np.concatenate([bounds[:, 1], np.full(n, np.inf), [np.inf]])
    else:
        x0 = np.concatenate([pos0, [h0.mean(), w0.mean()]])
        lo = np.concatenate([bounds[:, 0], [0.0, min_width]])
        hi = np.concatenate([bounds[:, 1], [np.inf, np.inf]])
    x0 = np.clip(x0, lo, hi)
    yn = y / scale

    def residuals(p):
        pos, hgt, wid = _unpack(p, n, constraint)
        return sum(lorentzian(x, pos[k], hgt[k], wid[k]) for k in range(n)) - yn

    res = optimize.least_squares(residuals, x0, bounds=(lo, hi), method="trf",
                                 ftol=FIT_FTOL, xtol=FIT_FTOL, gtol=FIT_FTOL, max_nfev=FIT_MAX_NFEV)
    pos, hgt, wid = _unpack(res.x, n, constraint)
    hgt = hgt * scale

    dof = max(x.size - res.x.size, 1)
    jtj = res.jac.T @ res.jac
    cov = np.linalg.pinv(jtj) * (2 * res.cost / dof)
    pos_sd = np.sqrt(np.clip(np.diag(cov)[:n], 0, None))

    components = np.array([lorentzian(x, pos[k], hgt[k], wid[k]) for k in range(n)])
    peaks = [PeakEstimate(float(pos[k]), float(wid[k]), float(wid[k]), float(hgt[k]), float(pos_sd[k]))
             for k in range(n)]
    converged = res.status > 0
    if not converged:
        log.warning("Lorentzian fit did not converge: %s", res.message)
    return FitResult(peaks, x, components.sum(axis=0), components, constraint, bool(converged),
                     int(res.status), str(res.message), float(res.cost * scale**2), int(res.nfev))


@dataclass
class InfidelityResult:
    delta_s_over_s: float
    n: float | None = None

    def to_dict(self) -> dict:
        return {"n": self.n, "delta_s_over_s": self.delta_s_over_s}


def spectral_infidelity(s1: Spectrum, s2: Spectrum, window_hz=None, n: float | None = None) -> InfidelityResult:
    """Normalised L1 distance ``Σ|a1 - a2| / Σ(|a1| + |a2|)`` over the window.

    For nonnegative spectra this is the usual ``∫|s1 - s2| / ∫(s1 + s2)``; the
    absolute values keep it inside [0, 1] when Monte Carlo ripple dips below
    zero.
    """
    check_same_grid(s1, s2)
    mask = s1.mask(window_hz)
    a1, a2 = s1.amplitude[mask], s2.amplitude[mask]
    total = np.sum(np.abs(a1) + np.abs(a2))
    if total == 0:
        raise ValueError("both spectra have zero total weight in the window")
    return InfidelityResult(float(np.sum(np.abs(a1 - a2)) / total), n)


def _thermal_spectrum(params, noise, model, mc_samples, seed, dt_s, n_samples, zero_pad, mode):
    fid = noise_averaged_fids(["thermal"], params, noise, mc_samples, seed, dt_s, n_samples,
                              hamiltonian=model, workers=1)["thermal"]
    return fft_spectrum(fid, zero_pad, mode)


def coupling_sweep(params: SpinSystemParams, noise: NoiseModel, n_values, mc_samples: int, seed: int,
                   dt_s: float = DEFAULT_DT_S, n_samples: int = DEFAULT_N_SAMPLES,
                   zero_pad_factor: int = DEFAULT_ZERO_PAD, window_hz=None, mode: str = "absorption",
                   workers: int | None = None) -> list[InfidelityResult]:
    """Secular-vs-full spectral infidelity of the thermal spectrum versus coupling magnification.

    Both models at every point share the same noise stream, so Monte Carlo
    error largely cancels in the difference.
    """
    n_values = [float(v) for v in n_values]
    if any(v < 0 for v in n_values):
        raise ValueError("magnifications must be non-negative")

    def point(n):
        p = magnify_coupling(params, n)
        full = _thermal_spectrum(p, noise, "full", mc_samples, seed, dt_s, n_samples, zero_pad_factor, mode)
        sec = _thermal_spectrum(p, noise, "secular", mc_samples, seed, dt_s, n_samples, zero_pad_factor, mode)
        return spectral_infidelity(sec, full, window_hz, n)

    nw = min(worker_count(workers), len(n_values)) or 1
    if nw == 1:
        return [point(n) for n in n_values]
    with ThreadPoolExecutor(max_workers=nw) as pool:
        return list(pool.map(point, n_values))


def sweep_noise_floor(params: SpinSystemParams, noise: NoiseModel, n_values, mc_samples: int, seed: int,
                      dt_s: float = DEFAULT_DT_S, n_samples: int = DEFAULT_N_SAMPLES,
                      zero_pad_factor: int = DEFAULT_ZERO_PAD, window_hz=None, mode: str = "absorption") -> float:
    """Largest infidelity between Monte Carlo and exact noise averages of the secular thermal spectrum."""
    floor = 0.0
    for n in n_values:
        p = magnify_coupling(params, n)
        mc = _thermal_spectrum(p, noise, "secular", mc_samples, seed, dt_s, n_samples, zero_pad_factor, mode)
        exact = fft_spectrum(fid_analytic_averaged("thermal", p, noise.gamma_fwhm_hz, dt_s=dt_s,
                                                   n_samples=n_samples), zero_pad_factor, mode)
        floor = max(floor, spectral_infidelity(mc, exact, window_hz).delta_s_over_s)
    return floor


def count_inversions(values, tolerance: float = 0.0) -> tuple[int, float]:
    """Number of decreases between consecutive values and the largest drop."""
    drops = [a - b for a, b in zip(values[:-1], values[1:]) if b < a - tolerance]
    return len(drops), max(drops, default=0.0)


def valid_range(results, threshold: float) -> float:
    """Largest magnification below which every infidelity stays at or under ``threshold``."""
    best = -math.inf
    for r in sorted(results, key=lambda r: r.n):
        if r.delta_s_over_s > threshold:
            break
        best = r.n
    return best
