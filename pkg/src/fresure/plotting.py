"""Static SVG figures (matplotlib, Agg backend, reproducible output)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "fresure"

PPS_STYLE = {"A": "tab:orange", "B": "tab:green", "C": "tab:red", "D": "tab:purple"}


def _save(fig, path) -> Path:
    path = Path(path)
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    finally:
        plt.close(fig)
    return path


def _window(ax, spec, window_hz):
    if window_hz is not None:
        ax.set_xlim(*window_hz)
        m = spec.mask(window_hz)
        top = np.max(spec.amplitude[m]) if m.any() else 1.0
        ax.set_ylim(-0.05 * top, 1.1 * top)


def plot_decomposition(spectra: dict, sum_spectrum, path, window_hz=None, title: str = "") -> Path:
    """Thermal spectrum (markers), PPS spectra (dashed) and their scaled sum."""
    fig, ax = plt.subplots(figsize=(6, 4))
    if "thermal" in spectra:
        s = spectra["thermal"]
        m = s.mask(window_hz)
        step = max(1, int(m.sum() // 120))
        ax.plot(s.freq_hz[m][::step], s.amplitude[m][::step], "o", mfc="none", color="tab:blue", ms=4, label="thermal")
    for k in "ABCD":
        if k in spectra:
            ax.plot(spectra[k].freq_hz, spectra[k].amplitude, "--", color=PPS_STYLE[k], label=f"PPS {k}")
    if sum_spectrum is not None:
        ax.plot(sum_spectrum.freq_hz, sum_spectrum.amplitude, "-", color="purple", lw=1.5, label="λ × sum of PPS")
    _window(ax, next(iter(spectra.values())), window_hz)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("spectrum (arb.)")
    ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_fit(spec, fit, path, window_hz=None) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(spec.freq_hz, spec.amplitude, "o", mfc="none", ms=3, color="tab:blue", label="data")
    for i, comp in enumerate(fit.components, 1):
        ax.plot(fit.freq_hz, comp, "k--", lw=0.8, label="components" if i == 1 else None)
    ax.plot(fit.freq_hz, fit.curve, color="purple", label="fit sum")
    _window(ax, spec, window_hz)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("spectrum (arb.)")
    ax.set_title(f"{len(fit.peaks)}-peak Lorentzian fit ({fit.constraint})")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_sweep(results, path, threshold: float | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot([r.n for r in results], [r.delta_s_over_s for r in results], "o-")
    if threshold is not None:
        ax.axhline(threshold, ls=":", color="gray", label="threshold")
        ax.legend(fontsize=8)
    ax.set_xlabel("coupling magnification n")
    ax.set_ylabel("spectral infidelity ΔS/S")
    return _save(fig, path)


def plot_allan(m_values, sigmas: dict, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for k, s in sigmas.items():
        s = np.asarray(s, dtype=float)
        # zero deviation cannot be drawn on log axes
        ax.loglog(m_values, np.where(s > 0, s, np.nan), "o-", label=k)
    ax.set_xlabel("averaged measurements M")
    ax.set_ylabel("Allan deviation σ (Hz)")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_spectrum(spec, path, window_hz=None, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(spec.freq_hz, spec.amplitude)
    _window(ax, spec, window_hz)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("spectrum (arb.)")
    ax.set_title(title)
    return _save(fig, path)
