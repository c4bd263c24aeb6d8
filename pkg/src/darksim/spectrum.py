"""Eigenstructure of the hybrid Hamiltonian in the zero/one-excitation block.

The analytic four-level spectrum at the compensated operating point serves
as a cross-check oracle for the numeric Hamiltonian builder.  Eigenvector
comparisons go through spectral projectors because individual eigenvectors
are gauge-free (overall phase, rotations inside degenerate subspaces).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .operators import SystemParams, build_hamiltonian, hybrid_ket, require_hermitian

__all__ = [
    "EigenSystem",
    "SpectrumMatch",
    "numeric_eigensystem",
    "analytic_subspace",
    "zero_one_subspace",
    "match_analytic",
]


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues in ascending order with eigenvectors as matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def numeric_eigensystem(h: np.ndarray) -> EigenSystem:
    """Full spectral decomposition of a hermitian operator."""
    h = np.asarray(h, dtype=complex)
    require_hermitian(h, what="eigensystem input")
    w, v = np.linalg.eigh(h)
    return EigenSystem(w, v)


def zero_one_subspace() -> np.ndarray:
    """6x4 isometry whose columns are |0 down>, |B down>, |D down>, |0 up>.

    This block is exactly invariant under the hybrid Hamiltonian; the
    remaining two columns of the identity would be the two-excitation
    states |+1 up> and |-1 up>.
    """
    return np.column_stack([
        hybrid_ket("0", "down"),
        hybrid_ket("B", "down"),
        hybrid_ket("D", "down"),
        hybrid_ket("0", "up"),
    ])


def _analytic_levels(delta0: float, g_perp: float) -> EigenSystem:
    """Four-level spectrum of the compensated block, sorted ascending.

    E1 = -delta0/2 with |0 down>, E2 = delta0/2 - g_perp with
    (|B down> - |0 up>)/sqrt(2), E3 = delta0/2 with |D down>,
    E4 = delta0/2 + g_perp with (|B down> + |0 up>)/sqrt(2).
    """
    ket_0d = hybrid_ket("0", "down")
    ket_bd = hybrid_ket("B", "down")
    ket_dd = hybrid_ket("D", "down")
    ket_0u = hybrid_ket("0", "up")
    values = np.array([
        -0.5 * delta0,
        0.5 * delta0 - g_perp,
        0.5 * delta0,
        0.5 * delta0 + g_perp,
    ])
    vectors = np.column_stack([
        ket_0d,
        (ket_bd - ket_0u) / np.sqrt(2.0),
        ket_dd,
        (ket_bd + ket_0u) / np.sqrt(2.0),
    ])
    order = np.argsort(values, kind="stable")
    return EigenSystem(values[order], vectors[:, order])


def analytic_subspace(p: SystemParams) -> EigenSystem:
    """Closed-form eigensystem of the zero/one-excitation block.

    Requires the operating point delta_fq == delta_nv and g_par == b_z;
    under the compensation condition the longitudinal terms vanish on the
    block, so the four-level form is exact for any common value of
    g_par = b_z.
    """
    if not p.at_operating_point:
        raise ValueError(
            "analytic spectrum requires the operating point "
            f"(delta_fq == delta_nv and g_par == b_z), got {p}")
    return _analytic_levels(p.delta_nv, p.g_perp)


class SpectrumMatch(NamedTuple):
    ok: bool
    analytic: EigenSystem
    numeric: EigenSystem
    max_value_error: float
    max_projector_error: float


def _grouped_projectors(values: np.ndarray, vectors: np.ndarray,
                        ctol: float) -> list[tuple[float, np.ndarray]]:
    """Cluster near-degenerate eigenvalues and sum their rank-1 projectors."""
    groups: list[tuple[float, np.ndarray]] = []
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] - values[start] > ctol:
            block = vectors[:, start:k]
            groups.append((float(values[start:k].mean()), block @ block.conj().T))
            start = k
    return groups


def match_analytic(p: SystemParams, atol: float = 1e-10) -> SpectrumMatch:
    """Compare the operating-point formula against numeric diagonalization.

    Unlike analytic_subspace this never rejects the parameters: it
    evaluates the four-level formula with delta0 := delta_nv and compares
    it to the numeric spectrum of the zero/one-excitation block, so that
    off-operating-point inputs surface as a reported disagreement rather
    than an input error.
    """
    analytic = _analytic_levels(p.delta_nv, p.g_perp)
    q = zero_one_subspace()
    h4 = q.conj().T @ build_hamiltonian(p) @ q
    w, v = np.linalg.eigh(h4)
    numeric = EigenSystem(w, q @ v)

    value_err = float(np.abs(analytic.eigenvalues - numeric.eigenvalues).max())

    scale = max(1.0, float(np.abs(analytic.eigenvalues).max()))
    ctol = 1e-8 * scale
    proj_err = 0.0
    ana_groups = _grouped_projectors(analytic.eigenvalues, analytic.eigenvectors, ctol)
    for mean_val, p_ana in ana_groups:
        sel = np.abs(numeric.eigenvalues - mean_val) <= ctol + value_err
        block = numeric.eigenvectors[:, sel]
        p_num = block @ block.conj().T
        proj_err = max(proj_err, float(np.abs(p_ana - p_num).max()))

    ok = value_err <= atol and proj_err <= atol
    return SpectrumMatch(ok, analytic, numeric, value_err, proj_err)
