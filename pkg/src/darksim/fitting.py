"""Decay-rate extraction from fidelity curves.

The model is the fixed-floor exponential 1/2 + 1/2 exp(-Gamma t); only
Gamma is fitted.  A log-linear fit of 2F - 1 over the points clear of the
floor seeds a bracket, which golden-section search then refines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DecayCurve

__all__ = ["FitResult", "FitError", "fit_exponential"]

# Points with 2F - 1 at or below this are excluded from the log-linear
# seed (the log transform blows up near the floor); they still enter the
# final least squares.
_FLOOR_CUT = 0.05

# Golden-section termination, relative bracket width.  Tighter than
# strictly needed so the fit is scale-equivariant to ~1e-9.
_REL_WIDTH = 1e-11

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class FitError(RuntimeError):
    """Raised when no decay rate can be resolved from the data."""


@dataclass(frozen=True)
class FitResult:
    """Fitted rate Gamma (1/us) with 1/Gamma (us) and fit diagnostics."""

    gamma: float
    inv_gamma: float
    rms_residual: float
    n_points_used: int


def _objective(gamma: float, times: np.ndarray, fid: np.ndarray) -> float:
    residual = fid - 0.5 - 0.5 * np.exp(-gamma * times)
    return float(residual @ residual)


def _golden_section(times: np.ndarray, fid: np.ndarray,
                    lo: float, hi: float) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = _objective(c, times, fid)
    fd = _objective(d, times, fid)
    while (b - a) > _REL_WIDTH * b:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = _objective(c, times, fid)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = _objective(d, times, fid)
    return 0.5 * (a + b)


def fit_exponential(curve: DecayCurve) -> FitResult:
    """Least-squares fit of 1/2 + 1/2 exp(-Gamma t) to a decay curve.

    Raises FitError when every point sits on the 1/2 floor (rate
    unresolvable) and ValueError for malformed input.
    """
    times = np.asarray(curve.times, dtype=float)
    fid = np.asarray(curve.fidelities, dtype=float)
    if len(times) < 10:
        raise ValueError(f"need at least 10 points to fit, got {len(times)}")
    if len(times) != len(fid):
        raise ValueError("times and fidelities must have equal length")
    if np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly ascending")
    if fid.min() < -1e-9 or fid.max() > 1.0 + 1e-9:
        raise ValueError("fidelities must lie in [0, 1]")
    fid = np.clip(fid, 0.0, 1.0)

    excess = 2.0 * fid - 1.0
    seed_mask = excess > _FLOOR_CUT
    if not seed_mask.any():
        raise FitError("rate unresolvable: every point is on the 1/2 floor")

    t_seed = times[seed_mask]
    if len(t_seed) >= 2 and t_seed[-1] > t_seed[0]:
        slope = np.polyfit(t_seed, np.log(excess[seed_mask]), 1)[0]
        gamma_seed = max(-float(slope), 0.0)
    else:
        gamma_seed = math.log(2.0) / max(times[-1], 1e-300)

    if gamma_seed == 0.0:
        # Non-decaying data: report the no-decay result directly.
        rms = math.sqrt(_objective(0.0, times, fid) / len(times))
        return FitResult(0.0, math.inf, rms, len(times))

    lo, hi = gamma_seed / 10.0, gamma_seed * 10.0
    for _ in range(60):
        if _objective(hi, times, fid) < _objective(hi / 2.0, times, fid):
            hi *= 10.0
        else:
            break
    for _ in range(60):
        if _objective(lo, times, fid) < _objective(lo * 2.0, times, fid):
            lo /= 10.0
        else:
            break

    gamma = _golden_section(times, fid, lo, hi)
    if _objective(0.0, times, fid) <= _objective(gamma, times, fid):
        gamma = 0.0
    rms = math.sqrt(_objective(gamma, times, fid) / len(times))
    inv_gamma = 1.0 / gamma if gamma > 0 else math.inf
    return FitResult(gamma, inv_gamma, rms, len(times))
