"""Initial density matrices: thermal states and the four pseudo-pure states."""

from __future__ import annotations

import enum

import numpy as np

from .model import NSPINS, SpinSystemParams
from .quantum import PAULI, pauli_embed, validate_density_matrix

DIM = 2**NSPINS


class PpsLabel(str, enum.Enum):
    """Environment basis state (F1, F2) selected by each pseudo-pure state."""

    A = "A"
    B = "B"
    C = "C"
    D = "D"

    @property
    def env_bits(self) -> tuple[int, int]:
        return {"A": (0, 0), "B": (0, 1), "C": (1, 0), "D": (1, 1)}[self.value]


def thermal_equilibrium(params: SpinSystemParams) -> np.ndarray:
    """High-temperature equilibrium state ``I/8 + (p/2) Σ σ_iz``."""
    p = params.thermal_p
    rho = np.eye(DIM, dtype=complex) / DIM
    for i in range(1, NSPINS + 1):
        rho = rho + 0.5 * p * pauli_embed("z", i, NSPINS)
    return validate_density_matrix(rho)


def rotation_operator(target: int, axis: str, angle: float, n: int = NSPINS) -> np.ndarray:
    """``exp(-i angle/2 σ_axis)`` acting on one spin."""
    s = pauli_embed(axis, target, n)
    # σ² = I, so the exponential is exact in closed form
    return np.cos(angle / 2) * np.eye(2**n) - 1j * np.sin(angle / 2) * s


def rotate(rho: np.ndarray, target: int, axis: str, angle: float) -> np.ndarray:
    """Ideal hard pulse of ``angle`` radians about ``axis`` on spin ``target``."""
    n = int(np.log2(np.shape(rho)[0]))
    r = rotation_operator(target, axis, angle, n)
    return r @ rho @ r.conj().T


def thermal_initial(params: SpinSystemParams) -> np.ndarray:
    """Thermal state after a π/2 pulse about y on spin F3."""
    p = params.thermal_p
    rho = np.eye(DIM, dtype=complex) / DIM + 0.5 * p * (
        pauli_embed("z", 1, NSPINS) + pauli_embed("z", 2, NSPINS) + pauli_embed("x", 3, NSPINS)
    )
    return validate_density_matrix(rho)


def pps_initial(label: PpsLabel | str, q: float) -> np.ndarray:
    """``(1-q)/8 I + q |ab><ab| ⊗ (I2 + σx)/2`` for environment state ``|ab>``."""
    label = PpsLabel(label)
    if not 0 < q <= 1:
        raise ValueError(f"pps weight q must lie in (0, 1], got {q}")
    a, b = label.env_bits
    env = np.zeros((4, 4), dtype=complex)
    env[2 * a + b, 2 * a + b] = 1.0
    spin3 = 0.5 * (np.eye(2) + PAULI["x"])
    rho = (1 - q) / DIM * np.eye(DIM, dtype=complex) + q * np.kron(env, spin3)
    return validate_density_matrix(rho)


def initial_state(tag: str, params: SpinSystemParams) -> np.ndarray:
    """Density matrix for ``"thermal"`` or one of ``"A"``..``"D"``."""
    if tag.lower() == "thermal":
        return thermal_initial(params)
    return pps_initial(PpsLabel(tag.upper()), params.pps_q)
