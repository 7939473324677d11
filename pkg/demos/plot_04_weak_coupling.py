"""
How far the secular approximation holds
=======================================

Scaling every coupling by n and comparing thermal spectra from the full and
the diagonal Hamiltonian shows where dropping the flip-flop terms stops being
harmless.
"""

from pathlib import Path

from fresure import NoiseModel, SpinSystemParams
from fresure.plotting import plot_sweep
from fresure.spectra import count_inversions, coupling_sweep, sweep_noise_floor, valid_range

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)

params, noise = SpinSystemParams(), NoiseModel(40.0)
n_values = [0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0]
results = coupling_sweep(params, noise, n_values, mc_samples=1000, seed=2024)
for r in results:
    print(f"n = {r.n:3.1f}   ΔS/S = {r.delta_s_over_s:.3f}")

# Monte Carlo against the exact average bounds how much wiggle is sampling noise.
floor = sweep_noise_floor(params, noise, n_values[1:], 1000, 2024)
print(f"noise floor {floor:.3f}; inversions {count_inversions([r.delta_s_over_s for r in results])[0]}")

threshold = results[n_values.index(2.0)].delta_s_over_s
print(f"with threshold {threshold:.3f} the approximation holds up to n = {valid_range(results, threshold):g}")
plot_sweep(results, out / "sweep.svg", threshold)
