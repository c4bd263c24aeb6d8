"""Closed-form noise spectra, coherence times and perturbative infidelity.

The environment is a normalized random telegraph process with correlation
function exp(-2|tau|/tau_c), whose power spectral density under
S(nu) = integral of corr(tau) * exp(-i 2 pi nu tau) d tau is

    S(f) = tau_c / (1 + (pi f tau_c)^2),

identical to Ornstein-Uhlenbeck noise.  The formulas below share this one
tau_c convention with the dynamics module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "NoiseParams",
    "oun_power_spectrum",
    "t_fid",
    "t_echo",
    "t_dark",
    "infidelity_rate",
    "perturbative_infidelity",
]


@dataclass(frozen=True)
class NoiseParams:
    """Environment parameters.

    b       noise amplitude g_e*mu_B*B_noise in rad/us
    tau_c   noise correlation time in us
    t1_fq   flux-qubit energy relaxation time in us; None switches the
            channel off (infinite T1)
    t2_fq   flux-qubit quasi-static dephasing time in us; None means off
    """

    b: float = 0.032
    tau_c: float = 800.0
    t1_fq: float | None = None
    t2_fq: float | None = None

    def __post_init__(self) -> None:
        if self.b < 0:
            raise ValueError(f"b must be >= 0, got {self.b}")
        if self.tau_c <= 0:
            raise ValueError(f"tau_c must be > 0, got {self.tau_c}")
        for name in ("t1_fq", "t2_fq"):
            val = getattr(self, name)
            if val is not None and val <= 0:
                raise ValueError(f"{name} must be > 0 when present, got {val}")

    @property
    def j_coupling(self) -> float:
        """Quasi-static dephasing strength J = 1/(sqrt(2) T2), 0 when off."""
        if self.t2_fq is None:
            return 0.0
        return 1.0 / (math.sqrt(2.0) * self.t2_fq)


def oun_power_spectrum(f: float, tau_c: float) -> float:
    """Power spectral density tau_c / (1 + (pi f tau_c)^2) in us."""
    if tau_c <= 0:
        raise ValueError(f"tau_c must be > 0, got {tau_c}")
    return tau_c / (1.0 + (math.pi * f * tau_c) ** 2)


def t_fid(n: NoiseParams) -> float:
    """Free-induction-decay time 2/b in us; inf when b = 0 (no decay)."""
    if n.b == 0:
        return math.inf
    return 2.0 / n.b


def t_echo(n: NoiseParams) -> float:
    """Spin-echo time (24 tau_c / b^2)^(1/3) in us; inf when b = 0."""
    if n.b == 0:
        return math.inf
    return (24.0 * n.tau_c / n.b**2) ** (1.0 / 3.0)


def infidelity_rate(n: NoiseParams, g_perp: float, beta_sq: float) -> float:
    """Perturbative infidelity growth rate b^2/4 * |beta|^2 * S(g_perp/2pi).

    This single rate underlies both t_dark and perturbative_infidelity so
    the two stay exactly consistent.
    """
    _check_dark_inputs(n, g_perp, beta_sq)
    spectrum = oun_power_spectrum(g_perp / (2.0 * math.pi), n.tau_c)
    return 0.25 * n.b**2 * beta_sq * spectrum


def t_dark(n: NoiseParams, g_perp: float, beta_sq: float) -> float:
    """Gap-protected coherence time 4/(b^2 |beta|^2 S(g_perp/2pi)) in us.

    In the gapped regime g_perp * tau_c >> 1 this approaches
    tau_c * g_perp^2 / (b^2 |beta|^2).
    """
    return 1.0 / infidelity_rate(n, g_perp, beta_sq)


def perturbative_infidelity(t: float, n: NoiseParams, g_perp: float,
                            beta_sq: float, clamp: bool = True) -> float:
    """Second-order infidelity 1 - F at time t (us).

    The raw value grows linearly in t; with clamp=True it is capped at 1/2,
    the long-time floor of the fidelity curves.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    value = infidelity_rate(n, g_perp, beta_sq) * t
    if clamp:
        return min(max(value, 0.0), 0.5)
    return value


def _check_dark_inputs(n: NoiseParams, g_perp: float, beta_sq: float) -> None:
    if n.b <= 0:
        raise ValueError(f"b must be > 0, got {n.b}")
    # g_perp = 0 is the ungapped limit S(0) = tau_c and is well defined.
    if g_perp < 0:
        raise ValueError(f"g_perp must be >= 0, got {g_perp}")
    if not 0 < beta_sq <= 1:
        raise ValueError(f"beta_sq must lie in (0, 1], got {beta_sq}")
