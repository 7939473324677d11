"""Three-spin Hamiltonians and the stray-field noise model.

All user-facing frequencies are cyclic (Hz). The Hamiltonian builders return
matrices in rad/s; that is the only place the factor 2π enters.

The default parameters put spin F3 near 1030 Hz in a rotating frame with the
second line of F1 at 0 Hz. ``delta_3``, ``J13`` and ``J23`` reproduce the
analytic line positions (1088.5, 1039.5, 1020.5, 971.5) Hz. ``delta_1``,
``delta_2`` and ``J12`` are placeholders that only respect the weak-coupling
regime; they are not measured values for C2F3I.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .quantum import pauli_embed

NSPINS = 3
WEAK_COUPLING_WARN = 0.5


def _default_j() -> np.ndarray:
    return coupling_matrix(j12=69.0, j13=68.0, j23=49.0)


def coupling_matrix(j12: float = 0.0, j13: float = 0.0, j23: float = 0.0) -> np.ndarray:
    """Symmetric 3x3 J matrix (Hz) with zero diagonal."""
    return np.array([[0.0, j12, j13], [j12, 0.0, j23], [j13, j23, 0.0]])


@dataclass(frozen=True)
class SpinSystemParams:
    """Physical constants of the three-spin molecule.

    Attributes
    ----------
    larmor_offset_hz : float
        Carrier frequency left in the rotating frame (Hz).
    chemical_shift_hz : array of 3 floats
        Chemical shifts delta_1..delta_3 (Hz).
    j_coupling_hz : (3, 3) array
        Symmetric scalar couplings with zero diagonal (Hz).
    thermal_p : float
        High-temperature polarisation scale of the thermal state.
    pps_q : float
        Pseudo-pure-state weight, 0 < q <= 1.
    """

    larmor_offset_hz: float = 0.0
    chemical_shift_hz: np.ndarray = field(default_factory=lambda: np.array([0.0, -13000.0, 1030.0]))
    j_coupling_hz: np.ndarray = field(default_factory=_default_j)
    thermal_p: float = 0.015
    pps_q: float = 0.01

    def __post_init__(self):
        shifts = np.array(self.chemical_shift_hz, dtype=float)
        j = np.array(self.j_coupling_hz, dtype=float)
        if shifts.shape != (NSPINS,):
            raise ValueError(f"chemical_shift_hz must have 3 entries, got shape {shifts.shape}")
        if j.shape != (NSPINS, NSPINS):
            raise ValueError(f"j_coupling_hz must be 3x3, got shape {j.shape}")
        if not np.array_equal(j, j.T):
            raise ValueError("j_coupling_hz must be symmetric")
        if np.any(np.diag(j) != 0):
            raise ValueError("j_coupling_hz must have zero diagonal")
        if not 0 < self.pps_q <= 1:
            raise ValueError(f"pps_q must lie in (0, 1], got {self.pps_q}")
        shifts.flags.writeable = False
        j.flags.writeable = False
        object.__setattr__(self, "chemical_shift_hz", shifts)
        object.__setattr__(self, "j_coupling_hz", j)
        object.__setattr__(self, "larmor_offset_hz", float(self.larmor_offset_hz))
        object.__setattr__(self, "thermal_p", float(self.thermal_p))
        object.__setattr__(self, "pps_q", float(self.pps_q))
        ratio = self.weak_coupling_ratio()
        if ratio > WEAK_COUPLING_WARN:
            warnings.warn(
                f"weak-coupling ratio max|J/(δi-δj)| = {ratio:.3g} exceeds {WEAK_COUPLING_WARN}",
                stacklevel=3,
            )

    def weak_coupling_ratio(self) -> float:
        """``max |J_ij / (delta_i - delta_j)|`` over spin pairs (inf if degenerate)."""
        worst = 0.0
        for i in range(NSPINS):
            for j in range(i + 1, NSPINS):
                jij = abs(self.j_coupling_hz[i, j])
                if jij == 0:
                    continue
                gap = abs(self.chemical_shift_hz[i] - self.chemical_shift_hz[j])
                worst = max(worst, np.inf if gap == 0 else jij / gap)
        return float(worst)

    def __eq__(self, other):
        if not isinstance(other, SpinSystemParams):
            return NotImplemented
        return (
            self.larmor_offset_hz == other.larmor_offset_hz
            and np.array_equal(self.chemical_shift_hz, other.chemical_shift_hz)
            and np.array_equal(self.j_coupling_hz, other.j_coupling_hz)
            and self.thermal_p == other.thermal_p
            and self.pps_q == other.pps_q
        )

    __hash__ = None

    def to_dict(self) -> dict:
        j = self.j_coupling_hz
        return {
            "larmor_offset_hz": self.larmor_offset_hz,
            "chemical_shift_hz": self.chemical_shift_hz.tolist(),
            "j_coupling_hz": {"j12": j[0, 1], "j13": j[0, 2], "j23": j[1, 2]},
            "thermal_p": self.thermal_p,
            "pps_q": self.pps_q,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpinSystemParams":
        kwargs = dict(d)
        if "j_coupling_hz" in kwargs:
            j = kwargs["j_coupling_hz"]
            if isinstance(j, dict):
                kwargs["j_coupling_hz"] = coupling_matrix(**{k: float(v) for k, v in j.items()})
        unknown = set(kwargs) - {"larmor_offset_hz", "chemical_shift_hz", "j_coupling_hz", "thermal_p", "pps_q"}
        if unknown:
            raise ValueError(f"unknown system parameters: {sorted(unknown)}")
        return cls(**kwargs)


@dataclass(frozen=True)
class NoiseModel:
    """Lorentzian (Cauchy) distribution of the stray-field offset eta."""

    gamma_fwhm_hz: float = 40.0
    kind: str = "lorentzian"

    def __post_init__(self):
        if self.kind != "lorentzian":
            raise ValueError(f"unsupported noise kind {self.kind!r}")
        if not self.gamma_fwhm_hz > 0:
            raise ValueError(f"gamma_fwhm_hz must be positive, got {self.gamma_fwhm_hz}")

    def pdf(self, eta_hz):
        hw = 0.5 * self.gamma_fwhm_hz
        return (self.gamma_fwhm_hz / (2 * np.pi)) / (np.asarray(eta_hz) ** 2 + hw**2)

    def eta_from_uniform(self, u):
        """Inverse CDF: ``(Γ/2) tan(π (u - 1/2))``."""
        return 0.5 * self.gamma_fwhm_hz * np.tan(np.pi * (np.asarray(u, dtype=float) - 0.5))


@dataclass(frozen=True)
class DerivedFrequencies:
    alpha_hz: float
    beta_hz: float
    gamma_c_hz: float
    peak_hz: tuple[float, float, float, float]


@lru_cache(maxsize=None)
def _spin_operators():
    n = NSPINS
    ops = {(axis, i): pauli_embed(axis, i + 1, n) for axis in "xyz" for i in range(n)}
    sz_total = sum(ops["z", i] for i in range(n))
    for op in (*ops.values(), sz_total):
        op.flags.writeable = False
    return ops, sz_total


def hamiltonian_parts(params: SpinSystemParams, model: str = "full") -> tuple[np.ndarray, np.ndarray]:
    """Split ``H(eta) = H0 + pi * eta * Sz_total`` (rad/s, eta in Hz).

    The field offset enters only through total Sz, which commutes with both
    models.
    """
    if model not in ("full", "secular"):
        raise ValueError(f"model must be 'full' or 'secular', got {model!r}")
    ops, sz_total = _spin_operators()
    n = NSPINS
    f = params.larmor_offset_hz + params.chemical_shift_hz
    h0 = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n):
        h0 += np.pi * f[i] * ops["z", i]
    axes = "xyz" if model == "full" else "z"
    for i in range(n):
        for j in range(i + 1, n):
            jij = params.j_coupling_hz[i, j]
            for axis in axes:
                h0 += 0.5 * np.pi * jij * (ops[axis, i] @ ops[axis, j])
    if model == "secular":
        h0 = np.diag(np.diag(h0))
    return h0, sz_total


def build_hamiltonian(params: SpinSystemParams, eta_hz: float = 0.0, model: str = "full") -> np.ndarray:
    h0, sz_total = hamiltonian_parts(params, model)
    return h0 + np.pi * eta_hz * sz_total


def build_secular_hamiltonian(params: SpinSystemParams, eta_hz: float = 0.0) -> np.ndarray:
    """Weak-coupling Hamiltonian (Ising couplings only); exactly diagonal, rad/s."""
    return build_hamiltonian(params, eta_hz, "secular")


def build_full_hamiltonian(params: SpinSystemParams, eta_hz: float = 0.0) -> np.ndarray:
    """Zeeman terms plus isotropic Heisenberg couplings, in rad/s."""
    return build_hamiltonian(params, eta_hz, "full")


def magnify_coupling(params: SpinSystemParams, n: float) -> SpinSystemParams:
    """Copy of ``params`` with every J_ij multiplied by ``n``."""
    if n < 0:
        raise ValueError(f"magnification must be non-negative, got {n}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return replace(params, j_coupling_hz=n * params.j_coupling_hz)


def derived_frequencies(params: SpinSystemParams) -> DerivedFrequencies:
    """Analytic F3 line positions for environment states |00>, |01>, |10>, |11>."""
    alpha = params.larmor_offset_hz + params.chemical_shift_hz[2]
    beta = params.j_coupling_hz[0, 2] / 2
    gc = params.j_coupling_hz[1, 2] / 2
    peaks = (alpha + beta + gc, alpha + beta - gc, alpha - beta + gc, alpha - beta - gc)
    return DerivedFrequencies(float(alpha), float(beta), float(gc), tuple(float(p) for p in peaks))


def uniform(seed: int, index: int) -> float:
    """Counter-based uniform draw on the open interval (0, 1).

    The value depends only on ``(seed, index)``, never on how samples are
    split between workers.
    """
    raw = np.random.Philox(key=int(seed), counter=int(index)).random_raw()
    return ((int(raw) >> 11) + 0.5) * 2.0**-53


def uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Vectorised ``uniform`` for consecutive indices; bit-identical to the scalar form."""
    if count <= 0:
        return np.empty(0)
    # Philox emits four words per counter value; the first word of each block
    # is the scalar draw for that counter
    raw = np.random.Philox(key=int(seed), counter=int(start)).random_raw(4 * count)[::4]
    return ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0**-53


def stratified_uniforms(seed: int, start: int, count: int, n_total: int) -> np.ndarray:
    """Draw ``k`` falls in stratum ``[k/n_total, (k+1)/n_total)`` of the unit interval."""
    k = np.arange(start, start + count)
    return (k + uniforms(seed, start, count)) / n_total


def sample_eta(noise: NoiseModel, seed: int, index: int) -> float:
    """Field offset (Hz) of Monte Carlo sample ``index`` in stream ``seed``."""
    return float(noise.eta_from_uniform(uniform(seed, index)))


SAMPLING = ("stratified", "iid")


def sample_etas(noise: NoiseModel, seed: int, start: int, count: int,
                n_total: int | None = None, sampling: str = "iid") -> np.ndarray:
    """Field offsets for samples ``start .. start+count-1`` of a stream.

    ``sampling="stratified"`` places one draw in each of ``n_total`` equal
    probability strata of the Lorentzian, which removes the histogram noise of
    independent Cauchy draws while keeping the estimator unbiased.
    """
    if sampling == "iid":
        u = uniforms(seed, start, count)
    elif sampling == "stratified":
        if n_total is None:
            raise ValueError("stratified sampling needs the total sample count")
        u = stratified_uniforms(seed, start, count, n_total)
    else:
        raise ValueError(f"sampling must be one of {SAMPLING}, got {sampling!r}")
    return noise.eta_from_uniform(u)
