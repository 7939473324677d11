"""End-to-end acceptance checks, one class per criterion.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary lists one
PASS/FAIL line per criterion with the measured values.
"""

import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import ANALYTIC_PEAKS_HZ, distorted_fid
from fresure.cli import default_fit_init
from fresure.config import ExperimentConfig
from fresure.dynamics import fid_analytic_averaged, fid_noise_averaged, noise_averaged_fids
from fresure.metrology import allan_deviation, default_m_values, peak_position_series, resolution_limit
from fresure.model import NoiseModel, SpinSystemParams
from fresure.spectra import (
    count_inversions,
    count_local_maxima,
    coupling_sweep,
    fft_spectrum,
    find_peaks,
    fit_decomposition_scale,
    fit_multi_lorentzian,
    spectral_infidelity,
    sweep_noise_floor,
    valid_range,
)

PARAMS = SpinSystemParams()
NOISE = NoiseModel(40.0)
LABELS = "ABCD"
STATES = ["thermal", *LABELS]
WINDOW = (850.0, 1200.0)


def pps_sum(items):
    total = items["A"]
    for k in "BCD":
        total = total + items[k]
    return total


@pytest.fixture(scope="module")
def full_spectra():
    """Full Hamiltonian, baseline parameters, Γ = 40 Hz, 1e4 samples, 0.8 s."""
    fids = noise_averaged_fids(STATES, PARAMS, NOISE, 10_000, 2024, hamiltonian="full")
    return {k: fft_spectrum(v) for k, v in fids.items()}


@pytest.mark.criterion(1)
class TestDecompositionIdentity:
    @settings(max_examples=10)
    @given(st.integers(0, 2**63 - 1))
    def test_secular_any_seed(self, seed):
        start = time.perf_counter()
        fids = noise_averaged_fids(STATES, PARAMS, NOISE, 256, seed, hamiltonian="secular")
        scale = PARAMS.thermal_p / PARAMS.pps_q
        bound = 1e-10 * 4 * PARAMS.thermal_p
        fid_err = np.max(np.abs(fids["thermal"].values - scale * pps_sum(fids).values))
        spectra = {k: fft_spectrum(v) for k, v in fids.items()}
        spec_err = np.max(np.abs(spectra["thermal"].amplitude - scale * pps_sum(spectra).amplitude))
        elapsed = time.perf_counter() - start
        assert fid_err < bound
        assert spec_err < bound
        assert elapsed < 1.0

    def test_record(self, record_property):
        fids = noise_averaged_fids(STATES, PARAMS, NOISE, 256, 99, hamiltonian="secular")
        err = np.max(np.abs(fids["thermal"].values - 1.5 * pps_sum(fids).values))
        record_property("measured", f"max |s_T - (p/q)Σs_X| = {err:.1e} vs bound {4e-10 * PARAMS.thermal_p:.1e}")
        assert err < 1e-10 * 4 * PARAMS.thermal_p


@pytest.mark.criterion(2)
class TestFullModelSpectra:
    def test_one_dominant_peak_each(self, full_spectra, record_property):
        positions = []
        for label, expected in zip(LABELS, ANALYTIC_PEAKS_HZ):
            peaks = find_peaks(full_spectra[label], WINDOW)
            assert len(peaks) == 1, f"PPS {label}: {len(peaks)} peaks"
            positions.append(peaks[0].position_hz)
        record_property("measured", "positions " + ", ".join(f"{p:.1f}" for p in positions))
        np.testing.assert_allclose(positions, ANALYTIC_PEAKS_HZ, atol=5.0)

    def test_sum_matches_thermal(self, full_spectra, record_property):
        total = pps_sum(full_spectra).scaled(PARAMS.thermal_p / PARAMS.pps_q)
        d = spectral_infidelity(full_spectra["thermal"], total, WINDOW).delta_s_over_s
        record_property("measured", f"sum-vs-thermal ΔS/S = {d:.1e}")
        assert d < 0.02


@pytest.mark.criterion(3)
class TestLineWidth:
    @pytest.mark.parametrize("label", LABELS)
    def test_analytic_average(self, label, record_property):
        peaks = find_peaks(fft_spectrum(fid_analytic_averaged(label, PARAMS, 40.0)), WINDOW)
        assert len(peaks) == 1
        record_property("measured", f"{label} analytic FWHM {peaks[0].fwhm_hz:.2f}")
        assert peaks[0].fwhm_hz == pytest.approx(40.0, abs=2.0)

    def test_monte_carlo(self, record_property):
        fids = noise_averaged_fids(list(LABELS), PARAMS, NOISE, 10_000, 31, hamiltonian="secular")
        widths = []
        for label in LABELS:
            peaks = find_peaks(fft_spectrum(fids[label]), WINDOW)
            assert len(peaks) == 1
            widths.append(peaks[0].fwhm_hz)
        record_property("measured", "MC FWHM " + ", ".join(f"{w:.2f}" for w in widths))
        np.testing.assert_allclose(widths, 40.0, atol=4.0)


@pytest.fixture(scope="module")
def mc():
    # independent draws, so the CLT bound is what is being tested
    return fid_noise_averaged("A", PARAMS, NOISE, 100_000, 4, hamiltonian="secular", sampling="iid")


@pytest.mark.criterion(4)
class TestNoiseAverageOracle:
    N_MC = 100_000

    def test_deviation_bound(self, mc, record_property):
        ref = fid_analytic_averaged("A", PARAMS, 40.0)
        dev = np.max(np.abs(mc.values - ref.values))
        bound = 5 * PARAMS.pps_q / np.sqrt(self.N_MC)
        record_property("measured", f"max deviation {dev / PARAMS.pps_q:.4f} q (bound {bound / PARAMS.pps_q:.4f} q)")
        assert dev < bound

    def test_envelope_at_10ms(self, mc, record_property):
        k = round(0.010 / mc.dt_s)
        # remove the carrier so only the noise envelope is left
        env = (mc.values[k] * np.exp(-2j * np.pi * ANALYTIC_PEAKS_HZ[0] * mc.times[k])).real / PARAMS.pps_q
        expected = np.exp(-0.4 * np.pi)
        assert expected == pytest.approx(0.2846, abs=5e-5)
        # 3σ of a mean of N cosines, each with variance at most 1/2
        tol = 3 * np.sqrt(0.5 / self.N_MC)
        record_property("measured", f"envelope(10 ms) = {env:.4f} q (expected 0.2846 ± {tol:.4f})")
        assert env == pytest.approx(expected, abs=tol)


@pytest.mark.criterion(5)
class TestLambdaFit:
    def test_simulated_inputs(self, full_spectra, record_property):
        res = fit_decomposition_scale(full_spectra["thermal"], [full_spectra[k] for k in LABELS], WINDOW)
        record_property("measured", f"λ = {res.lam:.6f}")
        assert res.lam == pytest.approx(1.5, abs=1e-3)

    def test_analytic_inputs(self):
        thermal = fft_spectrum(fid_analytic_averaged("thermal", PARAMS, 40.0))
        parts = [fft_spectrum(fid_analytic_averaged(k, PARAMS, 40.0)) for k in LABELS]
        assert fit_decomposition_scale(thermal, parts, WINDOW).lam == pytest.approx(1.5, abs=1e-3)


@pytest.mark.criterion(6)
class TestConstrainedFitFailure:
    """Lines with broad skirts: the tied fit merges them, the decomposition does not."""

    @settings(max_examples=15)
    @given(wing=st.floats(0.5, 0.7), wing_ratio=st.floats(4.0, 6.0), asym=st.sampled_from([0.85, 1.0, 1.15]))
    def test_single_fat_peak_vs_decomposition(self, wing, wing_ratio, asym):
        kw = dict(asym=asym, wing=wing, wing_ratio=wing_ratio)
        thermal = fft_spectrum(distorted_fid(PARAMS, [PARAMS.thermal_p] * 4, **kw))
        assert count_local_maxima(thermal.amplitude[thermal.mask(WINDOW)]) >= 2

        cfg = ExperimentConfig()
        fit = fit_multi_lorentzian(thermal, 4, default_fit_init(cfg, thermal, 4),
                                   constraint="equal_width_and_height", window_hz=WINDOW)
        assert fit.converged
        assert fit.n_local_maxima == 1

        positions = {}
        for i, label in enumerate("BC", start=1):
            weights = np.zeros(4)
            weights[i] = PARAMS.pps_q
            peaks = find_peaks(fft_spectrum(distorted_fid(PARAMS, weights, **kw)), WINDOW)
            assert len(peaks) == 1
            positions[label] = peaks[0].position_hz
        assert positions["B"] - positions["C"] == pytest.approx(19.0, abs=2.0)

    def test_record(self, record_property):
        thermal = fft_spectrum(distorted_fid(PARAMS, [PARAMS.thermal_p] * 4, wing=0.6, wing_ratio=5.0))
        fit = fit_multi_lorentzian(thermal, 4, default_fit_init(ExperimentConfig(), thermal, 4),
                                   constraint="equal_width_and_height", window_hz=WINDOW)
        data_max = count_local_maxima(thermal.amplitude[thermal.mask(WINDOW)])
        record_property("measured", f"data maxima {data_max}, fitted-sum maxima {fit.n_local_maxima}")
        assert fit.single_fat_peak


@pytest.fixture(scope="module")
def sweep():
    n_values, mc_samples = [0.5, 1.0, 2.0, 3.0, 4.0, 5.0], 1000
    results = coupling_sweep(PARAMS, NOISE, n_values, mc_samples, 2024)
    floor = sweep_noise_floor(PARAMS, NOISE, n_values, mc_samples, 2024)
    return results, floor


@pytest.mark.criterion(7)
class TestCouplingSweep:
    def test_nondecreasing_within_floor(self, sweep, record_property):
        results, floor = sweep
        values = [r.delta_s_over_s for r in results]
        record_property("measured", "ΔS/S " + ", ".join(f"{v:.3f}" for v in values) + f"; floor {floor:.3f}")
        inversions, _ = count_inversions(values)
        assert inversions <= 1
        assert count_inversions(values, tolerance=floor)[0] == 0

    def test_endpoints(self, sweep):
        values = {r.n: r.delta_s_over_s for r in sweep[0]}
        assert values[1.0] < values[5.0]

    def test_valid_range_at_n2(self, sweep, record_property):
        results, _ = sweep
        threshold = {r.n: r.delta_s_over_s for r in results}[2.0]
        limit = valid_range(results, threshold)
        record_property("measured", f"valid up to n = {limit:g}")
        assert limit == 2.0


@pytest.mark.criterion(8)
class TestAllanSuite:
    def test_white_noise_slope(self, record_property):
        y = np.random.default_rng(8).normal(0.0, 1.0, 4096)
        res = allan_deviation(y, [1, 2, 4, 8, 16, 32, 64])
        slope = np.polyfit(np.log(res.m_values), np.log(res.sigma_hz), 1)[0]
        record_property("measured", f"white slope {slope:.3f}")
        assert -0.6 <= slope <= -0.4

    def test_drift_interior_minimum(self):
        rng = np.random.default_rng(80)
        y = rng.normal(0.0, 1.0, 4096) + 0.002 * np.arange(4096)
        res = allan_deviation(y, default_m_values(y.size))
        _, m_min = resolution_limit(res)
        assert res.m_values[0] < m_min < res.m_values[-1]

    def test_pipeline_super_resolution(self, record_property):
        series = peak_position_series(PARAMS, NOISE, 32, 1000, 500, "full")
        minima = {k: resolution_limit(allan_deviation(v))[0] for k, v in series.items()}
        record_property("measured", "σ_min " + ", ".join(f"{k} {v:.2f} Hz" for k, v in minima.items()))
        for v in minima.values():
            assert v < NOISE.gamma_fwhm_hz / 10


@pytest.mark.criterion(9)
class TestInvariantSuites:
    def test_invariant_suites(self, record_property):
        root = Path(__file__).resolve().parent.parent
        env = dict(os.environ, PYTHONHASHSEED="0")
        start = time.perf_counter()
        proc = subprocess.run([sys.executable, "-m", "pytest", "-m", "invariant", "-q", "-p", "no:cacheprovider",
                               str(root / "tests")], cwd=root, env=env, capture_output=True, text=True)
        elapsed = time.perf_counter() - start
        tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr
        record_property("measured", f"{tail} ({elapsed:.0f} s)")
        assert proc.returncode == 0, proc.stdout[-3000:]
        assert elapsed < 120
