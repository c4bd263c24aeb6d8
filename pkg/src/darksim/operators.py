"""Spin operators and the rotating-frame Hamiltonian of the hybrid system.

Conventions used throughout the package: hbar = 1, every energy is an
angular frequency in rad/us and every time is in us.  The six-dimensional
product space is ordered NV factor first, flux-qubit factor second,

    (|+1>, |0>, |-1>)  x  (|up>, |down>),

so the flat index of |m, s> is 2*i_nv + i_fq with i_nv in {0: +1, 1: 0,
2: -1} and i_fq in {0: up, 1: down}.  States are 1-D complex arrays,
operators are dense complex square matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "SystemParams",
    "BrightDark",
    "pauli",
    "spin1",
    "bright_dark_basis",
    "tensor",
    "build_hamiltonian",
    "noise_operator",
    "hybrid_ket",
    "require_hermitian",
]

# Paper operating point: G_perp = 2*pi x 100 kHz in rad/us.
DEFAULT_G_PERP = 2.0 * np.pi * 0.1

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class SystemParams:
    """Rotating-frame Hamiltonian parameters, all in rad/us.

    g_perp    transverse coupling (sets the protective gap)
    g_par     longitudinal coupling
    delta_fq  flux-qubit detuning from the rotating frame
    delta_nv  NV zero-field splitting detuning from the rotating frame
    b_z       longitudinal magnetic field on the NV, g_e*mu_B*B_z
    """

    g_perp: float = DEFAULT_G_PERP
    g_par: float = 0.0
    delta_fq: float = 0.0
    delta_nv: float = 0.0
    b_z: float = 0.0

    def __post_init__(self) -> None:
        if self.g_perp < 0:
            raise ValueError(f"g_perp must be >= 0, got {self.g_perp}")

    @property
    def at_operating_point(self) -> bool:
        """True when delta_fq == delta_nv and g_par == b_z (compensated).

        Under the compensation condition the longitudinal terms cancel on
        the zero/one-excitation block, so the four-level analytic spectrum
        applies exactly.
        """
        scale = max(1.0, *(abs(getattr(self, f)) for f in
                           ("g_perp", "g_par", "delta_fq", "delta_nv", "b_z")))
        return (abs(self.delta_fq - self.delta_nv) <= 1e-12 * scale
                and abs(self.g_par - self.b_z) <= 1e-12 * scale)


class BrightDark(NamedTuple):
    ket_b: np.ndarray
    ket_d: np.ndarray
    s_plus_bar: np.ndarray
    s_minus_bar: np.ndarray


def pauli(axis: str) -> np.ndarray:
    """2x2 Pauli matrix in the (|up>, |down>) basis, sigma_z|up> = +|up>."""
    if axis == "x":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if axis == "y":
        return np.array([[0, -1j], [1j, 0]], dtype=complex)
    if axis == "z":
        return np.array([[1, 0], [0, -1]], dtype=complex)
    raise ValueError(f"invalid Pauli axis {axis!r}, expected 'x', 'y' or 'z'")


def spin1(axis: str) -> np.ndarray:
    """3x3 spin-1 matrix in the (|+1>, |0>, |-1>) basis, S_z = diag(1, 0, -1)."""
    if axis == "x":
        return np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / _SQRT2
    if axis == "y":
        return np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / _SQRT2
    if axis == "z":
        return np.array([[1, 0, 0], [0, 0, 0], [0, 0, -1]], dtype=complex)
    raise ValueError(f"invalid spin-1 axis {axis!r}, expected 'x', 'y' or 'z'")


def bright_dark_basis() -> BrightDark:
    """Bright/dark combinations of the m_s = +-1 levels and their ladder operators.

    |B> = (|+1> + |-1>)/sqrt(2), |D> = (|+1> - |-1>)/sqrt(2),
    S+_bar = |B><0|, S-_bar = |0><B|.  Only the bright state couples
    transversely to the flux qubit; the dark state is left with the
    protective gap.
    """
    ket_b = np.array([1, 0, 1], dtype=complex) / _SQRT2
    ket_d = np.array([1, 0, -1], dtype=complex) / _SQRT2
    ket_0 = np.array([0, 1, 0], dtype=complex)
    s_plus_bar = np.outer(ket_b, ket_0.conj())
    return BrightDark(ket_b, ket_d, s_plus_bar, s_plus_bar.conj().T)


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, NV factor first.  This ordering is fixed repo-wide."""
    return np.kron(a, b)


_SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)   # |up><down|
_SIGMA_MINUS = _SIGMA_PLUS.conj().T


def build_hamiltonian(p: SystemParams) -> np.ndarray:
    """Rotating-frame Hamiltonian of the hybrid system, 6x6, rad/us.

    H0 = delta_fq/2 * I (x) sigma_z
       + g_perp * (S-_bar (x) sigma_+ + S+_bar (x) sigma_-)
       + g_par * S_z (x) sigma_z
       + delta_nv * S_z^2 (x) I
       + b_z * S_z (x) I
    """
    bd = bright_dark_basis()
    s_z = spin1("z")
    i2 = np.eye(2, dtype=complex)
    i3 = np.eye(3, dtype=complex)
    h = 0.5 * p.delta_fq * tensor(i3, pauli("z"))
    h += p.g_perp * (tensor(bd.s_minus_bar, _SIGMA_PLUS)
                     + tensor(bd.s_plus_bar, _SIGMA_MINUS))
    h += p.g_par * tensor(s_z, pauli("z"))
    h += p.delta_nv * tensor(s_z @ s_z, i2)
    h += p.b_z * tensor(s_z, i2)
    return h


def noise_operator() -> np.ndarray:
    """The magnetic-noise coupling operator S_z (x) I.

    The time-dependent prefactor b/2 * f(t) is applied by the dynamics
    layer; this is only the operator part.
    """
    return tensor(spin1("z"), np.eye(2, dtype=complex))


_NV_KETS = {
    "+1": np.array([1, 0, 0], dtype=complex),
    "0": np.array([0, 1, 0], dtype=complex),
    "-1": np.array([0, 0, 1], dtype=complex),
}


def hybrid_ket(nv: str, fq: str) -> np.ndarray:
    """Product state |nv, fq> as a 6-vector.

    nv is one of '+1', '0', '-1', 'B', 'D'; fq is 'up' or 'down'.
    """
    if nv in _NV_KETS:
        nv_vec = _NV_KETS[nv]
    elif nv == "B":
        nv_vec = bright_dark_basis().ket_b
    elif nv == "D":
        nv_vec = bright_dark_basis().ket_d
    else:
        raise ValueError(f"unknown NV state {nv!r}")
    if fq == "up":
        fq_vec = np.array([1, 0], dtype=complex)
    elif fq == "down":
        fq_vec = np.array([0, 1], dtype=complex)
    else:
        raise ValueError(f"unknown flux-qubit state {fq!r}")
    return np.kron(nv_vec, fq_vec)


def require_hermitian(m: np.ndarray, rtol: float = 1e-12, what: str = "matrix") -> None:
    """Raise ValueError if m deviates from hermiticity beyond rtol (relative)."""
    scale = max(np.abs(m).max(), 1e-300)
    defect = np.abs(m - m.conj().T).max()
    if defect > rtol * scale:
        raise ValueError(f"{what} is not hermitian: max|M - M^dag| = {defect:.3e} "
                         f"exceeds {rtol:.0e} of max|M| = {scale:.3e}")
