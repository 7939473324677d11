"""Allan deviation of repeated peak-position measurements."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import DEFAULT_DT_S, DEFAULT_N_SAMPLES, noise_averaged_fids
from .model import NoiseModel, SpinSystemParams
from .spectra import DEFAULT_PROMINENCE, DEFAULT_WINDOW_HZ, DEFAULT_ZERO_PAD, fft_spectrum, find_peaks


@dataclass
class AllanResult:
    m_values: list[int]
    sigma_hz: list[float]
    series_length: int

    def to_dict(self) -> dict:
        return {"m_values": self.m_values, "sigma_hz": self.sigma_hz, "series_length": self.series_length}


def default_m_values(length: int) -> list[int]:
    """Powers of two up to ``length // 2``."""
    out, m = [], 1
    while 2 * m <= length:
        out.append(m)
        m *= 2
    return out


def allan_deviation(measurements, m_values=None) -> AllanResult:
    """Non-overlapping two-sample deviation of M-averaged measurements.

    The series is cut into ``K = len // M`` consecutive groups whose means
    ``y_k`` give ``sigma(M)² = Σ (y_{k+1} - y_k)² / (2 (K - 1))``.
    """
    y = np.asarray(measurements, dtype=float)
    if y.ndim != 1:
        raise ValueError("measurements must be a 1-D series")
    if m_values is None:
        m_values = default_m_values(y.size)
    m_values = [int(m) for m in m_values]
    if not m_values:
        raise ValueError("no averaging sizes given")
    if any(m < 1 for m in m_values) or any(b <= a for a, b in zip(m_values, m_values[1:])):
        raise ValueError("m_values must be positive and strictly increasing")
    if y.size < 2 * m_values[-1]:
        raise ValueError(f"series of length {y.size} is too short for M = {m_values[-1]}")
    sigma = []
    for m in m_values:
        k = y.size // m
        means = y[: k * m].reshape(k, m).mean(axis=1)
        sigma.append(float(np.sqrt(np.sum(np.diff(means) ** 2) / (2 * (k - 1)))))
    return AllanResult(m_values, sigma, int(y.size))


def resolution_limit(result: AllanResult) -> tuple[float, int]:
    """Smallest deviation and the M where it occurs (first one on ties)."""
    if not result.sigma_hz:
        raise ValueError("empty Allan result")
    i = int(np.argmin(result.sigma_hz))
    return result.sigma_hz[i], result.m_values[i]


def peak_position_series(params: SpinSystemParams, noise: NoiseModel, n_measurements: int, mc_per_measurement: int,
                         seed: int, hamiltonian: str = "full", labels=("A", "B", "C", "D"),
                         dt_s: float = DEFAULT_DT_S, n_samples: int = DEFAULT_N_SAMPLES,
                         zero_pad_factor: int = DEFAULT_ZERO_PAD, window_hz=DEFAULT_WINDOW_HZ,
                         prominence: float = DEFAULT_PROMINENCE, sampling: str = "iid") -> dict[str, np.ndarray]:
    """Simulate repeated acquisitions and record the main peak of each PPS spectrum.

    Measurement ``i`` averages ``mc_per_measurement`` noise draws from stream
    ``seed + i``; all labels share that stream. The default ``iid`` sampling
    keeps the shot-to-shot scatter of a finite ensemble.
    """
    out = {k: np.empty(n_measurements) for k in labels}
    for i in range(n_measurements):
        fids = noise_averaged_fids(list(labels), params, noise, mc_per_measurement, seed + i, dt_s, n_samples,
                                   hamiltonian=hamiltonian, workers=1, sampling=sampling)
        for k in labels:
            peaks = find_peaks(fft_spectrum(fids[k], zero_pad_factor), window_hz, 1, prominence)
            out[k][i] = peaks[0].position_hz if peaks else np.nan
    return out
