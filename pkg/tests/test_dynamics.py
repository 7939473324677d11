import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import ANALYTIC_PEAKS_HZ
from fresure.dynamics import (
    FidRecord,
    fid_analytic_averaged,
    fid_closed_form,
    fid_from_lines,
    fid_noise_averaged,
    fid_numeric,
    noise_averaged_fids,
    worker_count,
)
from fresure.model import (
    NoiseModel,
    SpinSystemParams,
    build_full_hamiltonian,
    build_secular_hamiltonian,
    coupling_matrix,
    magnify_coupling,
    sample_eta,
)
from fresure.states import pps_initial, thermal_initial

N = 500
LABELS = "ABCD"


def pps_sum(fids, params):
    return params.thermal_p / params.pps_q * sum(fids[k].values for k in LABELS)


class TestFidRecord:
    def test_times_and_acquisition(self):
        rec = FidRecord(2e-4, np.zeros(4000, complex))
        assert rec.n_samples == 4000
        assert rec.acquisition_s == pytest.approx(0.8)
        assert rec.times[1] == pytest.approx(2e-4)

    def test_add_requires_same_grid(self):
        a = FidRecord(1e-3, np.ones(8, complex))
        with pytest.raises(ValueError):
            a + FidRecord(2e-3, np.ones(8, complex))
        np.testing.assert_array_equal((a + a.scaled(2.0)).values, 3.0)


class TestNumeric:
    def test_maximally_mixed_is_silent(self, params):
        rec = fid_numeric(np.eye(8) / 8, build_full_hamiltonian(params, 12.0), n_samples=N)
        np.testing.assert_array_equal(rec.values, 0)

    def test_pps_a_is_a_cosine(self, params):
        rec = fid_numeric(pps_initial("A", params.pps_q), build_secular_hamiltonian(params), n_samples=N)
        expected = params.pps_q * np.cos(2 * np.pi * ANALYTIC_PEAKS_HZ[0] * rec.times)
        np.testing.assert_allclose(rec.values.real, expected, rtol=0, atol=1e-10 * params.pps_q)

    def test_real_observable(self, params):
        h = build_full_hamiltonian(params)
        c = fid_numeric(thermal_initial(params), h, n_samples=N)
        r = fid_numeric(thermal_initial(params), h, n_samples=N, observable="real")
        np.testing.assert_array_equal(r.values.imag, 0)
        np.testing.assert_allclose(r.values.real, c.values.real, atol=1e-15)

    def test_dimension_mismatch(self, params):
        with pytest.raises(ValueError):
            fid_numeric(np.eye(4) / 4, build_full_hamiltonian(params))

    @pytest.mark.parametrize("label", LABELS)
    def test_matches_closed_form(self, params, label):
        num = fid_numeric(pps_initial(label, params.pps_q), build_secular_hamiltonian(params, 7.5), n_samples=N)
        ref = fid_closed_form(label, params, eta_hz=7.5, n_samples=N)
        assert np.max(np.abs(num.values - ref.values)) < 1e-10 * params.pps_q

    def test_matches_direct_propagation(self, params):
        # independent of the line expansion: propagate with scipy's expm
        from scipy.linalg import expm
        from fresure.quantum import pauli_embed
        h = build_full_hamiltonian(params, -3.0)
        rho = thermal_initial(params)
        dt = 2e-4
        u = expm(-1j * dt * h)
        obs = pauli_embed("x", 3, 3) + 1j * pauli_embed("y", 3, 3)
        vals, r = [], rho
        for _ in range(40):
            vals.append(np.trace(r @ obs))
            r = u @ r @ u.conj().T
        rec = fid_numeric(rho, h, dt, 40)
        np.testing.assert_allclose(rec.values, vals, atol=1e-12)


class TestClosedForm:
    def test_initial_values(self, params):
        assert fid_closed_form("A", params, n_samples=4).values[0] == params.pps_q
        assert fid_closed_form("thermal", params, n_samples=4).values[0] == pytest.approx(4 * params.thermal_p)

    @pytest.mark.invariant
    def test_magnitude_bound(self, params):
        rec = fid_closed_form("thermal", params, n_samples=N)
        assert np.max(np.abs(rec.values)) <= 4 * params.thermal_p * (1 + 1e-9)


class TestDecompositionIdentity:
    @given(st.floats(-500, 500), st.floats(0.001, 0.08), st.floats(0.001, 1.0),
           st.floats(-100, 100), st.floats(-100, 100), st.floats(-100, 100))
    @pytest.mark.invariant
    def test_secular_any_offset(self, eta, p, q, j12, j13, j23):
        params = SpinSystemParams(thermal_p=p, pps_q=q, j_coupling_hz=coupling_matrix(j12, j13, j23))
        h = build_secular_hamiltonian(params, eta)
        th = fid_numeric(thermal_initial(params), h, n_samples=200).values
        parts = sum(fid_numeric(pps_initial(k, q), h, n_samples=200).values for k in LABELS)
        assert np.max(np.abs(th - p / q * parts)) < 1e-12 * max(p, 1e-3)

    @pytest.mark.invariant
    @pytest.mark.parametrize("model", ["secular", "full"])
    def test_after_noise_average(self, params, noise, model):
        fids = noise_averaged_fids(["thermal", *LABELS], params, noise, 96, 3, n_samples=N, hamiltonian=model)
        diff = fids["thermal"].values - pps_sum(fids, params)
        assert np.max(np.abs(diff)) < 1e-12 * params.thermal_p


class TestAnalyticAverage:
    def test_zero_width_is_closed_form(self, params):
        a = fid_analytic_averaged("B", params, 0.0, n_samples=N)
        np.testing.assert_array_equal(a.values, fid_closed_form("B", params, n_samples=N).values)

    def test_first_point(self, params):
        assert fid_analytic_averaged("C", params, 40.0).values[0] == params.pps_q

    def test_envelope(self, params):
        a = fid_analytic_averaged("D", params, 40.0, n_samples=N)
        np.testing.assert_allclose(np.abs(a.values), params.pps_q * np.exp(-np.pi * 40 * a.times), rtol=1e-12)

    def test_full_model_unsupported(self, params):
        with pytest.raises(NotImplementedError):
            fid_analytic_averaged("A", params, 40.0, model="full")


class TestNoiseAverage:
    def test_single_sample_is_noiseless_fid(self, params, noise):
        eta = sample_eta(noise, 7, 0)
        for sampling in ("iid", "stratified"):
            mc = fid_noise_averaged("A", params, noise, 1, 7, n_samples=N, sampling=sampling)
            ref = fid_numeric(pps_initial("A", params.pps_q), build_full_hamiltonian(params, eta), n_samples=N)
            np.testing.assert_allclose(mc.values, ref.values, atol=1e-14)

    def test_vanishing_width(self, params):
        mc = fid_noise_averaged("B", params, NoiseModel(1e-12), 1, 0, n_samples=N)
        ref = fid_numeric(pps_initial("B", params.pps_q), build_full_hamiltonian(params), n_samples=N)
        np.testing.assert_allclose(mc.values, ref.values, atol=1e-12)

    def test_density_matrix_input(self, params, noise):
        a = fid_noise_averaged(pps_initial("C", params.pps_q), params, noise, 40, 1, n_samples=N)
        b = fid_noise_averaged("C", params, noise, 40, 1, n_samples=N)
        np.testing.assert_array_equal(a.values, b.values)

    def test_meta(self, params, noise):
        rec = fid_noise_averaged("A", params, noise, 10, 5, n_samples=N, hamiltonian="secular")
        assert rec.meta["n_averaged"] == 10 and rec.meta["seed"] == 5 and rec.meta["model"] == "secular"

    def test_rejects_empty_average(self, params, noise):
        with pytest.raises(ValueError):
            fid_noise_averaged("A", params, noise, 0, 1)

    @pytest.mark.invariant
    def test_envelope_oracle(self, params, noise):
        n_mc = 10_000
        mc = fid_noise_averaged("A", params, noise, n_mc, 11, n_samples=N, hamiltonian="secular", sampling="iid")
        ref = fid_analytic_averaged("A", params, noise.gamma_fwhm_hz, n_samples=N)
        assert np.max(np.abs(mc.values - ref.values)) < 5 * params.pps_q / np.sqrt(n_mc)

    @pytest.mark.invariant
    def test_uncoupled_models_identical(self, params, noise):
        p = magnify_coupling(params, 0)
        full = noise_averaged_fids(["thermal"], p, noise, 64, 2, n_samples=N, hamiltonian="full")
        sec = noise_averaged_fids(["thermal"], p, noise, 64, 2, n_samples=N, hamiltonian="secular")
        np.testing.assert_array_equal(full["thermal"].values, sec["thermal"].values)

    @pytest.mark.invariant
    @settings(max_examples=5)
    @given(st.integers(0, 2**31), st.integers(1, 200), st.sampled_from(["iid", "stratified"]))
    def test_worker_count_invariance(self, seed, n_mc, sampling):
        params, noise = SpinSystemParams(), NoiseModel()
        runs = [noise_averaged_fids(["thermal", "A"], params, noise, n_mc, seed, n_samples=128,
                                    workers=w, sampling=sampling) for w in (1, 2, 5)]
        for r in runs[1:]:
            for k in ("thermal", "A"):
                np.testing.assert_array_equal(r[k].values, runs[0][k].values)

    def test_thread_cap(self, monkeypatch, params, noise):
        monkeypatch.setenv("FRESURE_THREADS", "1")
        assert worker_count(8) == 1
        capped = fid_noise_averaged("D", params, noise, 100, 4, n_samples=N)
        monkeypatch.setenv("FRESURE_THREADS", "4")
        assert worker_count(8) == 4
        wide = fid_noise_averaged("D", params, noise, 100, 4, n_samples=N, workers=4)
        np.testing.assert_array_equal(capped.values, wide.values)


class TestSyntheticLines:
    def test_envelope_applied(self):
        rec = fid_from_lines([100.0], [1.0], 1e-3, 10, envelope=lambda t: np.exp(-t))
        np.testing.assert_allclose(rec.values, np.exp(2j * np.pi * 100 * rec.times - rec.times))
