"""Noise-averaged NMR spectra of a weakly coupled three-qubit register.

Simulates free-induction decays of thermal and pseudo-pure states under
Lorentzian field noise, decomposes thermal spectra into pseudo-pure parts,
fits Lorentzian lineshapes and estimates resolution via Allan deviation.
"""

from .config import ExperimentConfig, load_config, save_config
from .dynamics import (
    FidRecord,
    fid_analytic_averaged,
    fid_closed_form,
    fid_noise_averaged,
    fid_numeric,
    noise_averaged_fids,
    transition_lines,
)
from .metrology import AllanResult, allan_deviation, peak_position_series, resolution_limit
from .model import (
    DerivedFrequencies,
    NoiseModel,
    SpinSystemParams,
    build_full_hamiltonian,
    build_hamiltonian,
    build_secular_hamiltonian,
    derived_frequencies,
    magnify_coupling,
    sample_eta,
    sample_etas,
)
from .quantum import ValidationError
from .spectra import (
    FitResult,
    PeakEstimate,
    Spectrum,
    coupling_sweep,
    fft_spectrum,
    find_peaks,
    fit_decomposition_scale,
    fit_multi_lorentzian,
    spectral_infidelity,
)
from .states import PpsLabel, initial_state, pps_initial, thermal_equilibrium, thermal_initial

__version__ = "0.1.0"
