"""Coupled conditional master equations, quasi-static averaging, Monte Carlo.

The telegraph noise f(t) in {+1, -1} is treated with a pair of conditional
density operators rho_1, rho_2 (one per noise branch) obeying

    d rho_j / dt = -i [H_j, rho_j] - (1/tau_c)(rho_j - rho_other) + D[rho_j],

with H_{1,2} = H0_eff +- (b/2) S_z (x) I and D the flux-qubit T1
dissipator.  The physical state is rho_1 + rho_2; the switching term
relaxes the conditional difference at rate 2/tau_c, which reproduces the
telegraph autocorrelation exp(-2|tau|/tau_c).  Quasi-static flux-qubit
dephasing enters as a fixed frequency shift J*f_R on the qubit, averaged
over a standard normal f_R by Gauss-Hermite quadrature.

All runs are pure functions of the scenario: the equations are linear and
autonomous, so a run is carried out by the one-step fourth-order
Runge-Kutta operator of the vectorized system, applied a fixed number of
times per sample interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .noise_analytics import NoiseParams
from .operators import SystemParams, build_hamiltonian, hybrid_ket, noise_operator, pauli, tensor

__all__ = [
    "SimScenario",
    "ConditionalState",
    "DecayCurve",
    "IntegrationError",
    "conditional_derivative",
    "evolve",
    "gauss_hermite_average",
    "monte_carlo_oracle",
    "fidelity",
    "telegraph_flip_times",
]

_DIM = 6
_I6 = np.eye(_DIM, dtype=complex)
_I36 = np.eye(_DIM * _DIM, dtype=complex)
_INV_SQRT2 = 1.0 / math.sqrt(2.0)

# Hard cap on the integration step in us; the rule below divides the
# fastest system timescale by 50 and never exceeds this.
_MAX_STEP = 0.02
_STEP_DIVISOR = 50.0

# Flat indices of the two-excitation populations |+1 up> and |-1 up>
# in the row-major vectorization of a 6x6 density matrix.
_LEAK_INDICES = (0, 4 * _DIM + 4)


class IntegrationError(RuntimeError):
    """Raised when the fixed-step integration becomes unstable."""


@dataclass(frozen=True)
class SimScenario:
    """One simulation setup: system, environment, initial state and grid.

    The initial state is alpha|0 down> + beta|D down>.  f_r, when set,
    pins the quasi-static dephasing variable instead of averaging over it.
    """

    system: SystemParams
    noise: NoiseParams
    t_max: float
    n_samples: int = 300
    alpha: complex = _INV_SQRT2
    beta: complex = _INV_SQRT2
    f_r: float | None = None

    def __post_init__(self) -> None:
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"|alpha|^2 + |beta|^2 must be 1, got {norm!r}")
        if self.t_max <= 0:
            raise ValueError(f"t_max must be > 0, got {self.t_max}")
        if int(self.n_samples) != self.n_samples or self.n_samples < 2:
            raise ValueError(f"n_samples must be an integer >= 2, got {self.n_samples}")

    @property
    def initial_ket(self) -> np.ndarray:
        return self.alpha * hybrid_ket("0", "down") + self.beta * hybrid_ket("D", "down")

    def record(self) -> dict:
        """Fully resolved parameter record, for metadata and output echo."""
        return {
            "system": {
                "g_perp_rad_per_us": self.system.g_perp,
                "g_par_rad_per_us": self.system.g_par,
                "delta_fq_rad_per_us": self.system.delta_fq,
                "delta_nv_rad_per_us": self.system.delta_nv,
                "b_z_rad_per_us": self.system.b_z,
            },
            "noise": {
                "b_rad_per_us": self.noise.b,
                "tau_c_us": self.noise.tau_c,
                "t1_fq_us": self.noise.t1_fq,
                "t2_fq_us": self.noise.t2_fq,
            },
            "initial": {
                "alpha_re": complex(self.alpha).real,
                "alpha_im": complex(self.alpha).imag,
                "beta_re": complex(self.beta).real,
                "beta_im": complex(self.beta).imag,
            },
            "grid": {"t_max_us": self.t_max, "n_samples": int(self.n_samples)},
            "f_r": self.f_r,
        }


@dataclass(frozen=True)
class ConditionalState:
    """The conditional pair (rho_1, rho_2) at a given time; rho_1 + rho_2 is physical."""

    rho1: np.ndarray
    rho2: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        total = self.rho1 + self.rho2
        trace = complex(np.trace(total))
        if abs(trace - 1.0) > 1e-8:
            raise ValueError(f"trace(rho1 + rho2) must be 1, got {trace!r}")
        if np.abs(total - total.conj().T).max() > 1e-10:
            raise ValueError("rho1 + rho2 must be hermitian")

    @property
    def total(self) -> np.ndarray:
        return self.rho1 + self.rho2


@dataclass(frozen=True)
class DecayCurve:
    """Sampled fidelity-versus-time series with the producing parameters."""

    times: np.ndarray
    fidelities: np.ndarray
    metadata: dict = field(default_factory=dict)


def fidelity(rho: np.ndarray, psi0: np.ndarray) -> float:
    """<psi0| rho |psi0>, clamped to [0, 1]."""
    psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
    norm = np.linalg.norm(psi0)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"psi0 must be normalized, |psi0| = {norm!r}")
    value = float(np.real(psi0.conj() @ np.asarray(rho, dtype=complex) @ psi0))
    return min(max(value, 0.0), 1.0)


# ---------------------------------------------------------------------------
# Generators.  Row-major vectorization: vec(A rho B) = (A kron B^T) vec(rho).

def _lift(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b.T)


def _commutator_generator(h: np.ndarray) -> np.ndarray:
    return -1j * (_lift(h, _I6) - _lift(_I6, h))


def _t1_dissipator(t1: float) -> np.ndarray:
    sigma_p = tensor(np.eye(3, dtype=complex), np.array([[0, 1], [0, 0]], dtype=complex))
    sigma_m = sigma_p.conj().T
    number = sigma_p @ sigma_m
    return -(0.5 / t1) * (_lift(number, _I6) + _lift(_I6, number)
                          - 2.0 * _lift(sigma_m, sigma_p))


def _hamiltonian_pair(sc: SimScenario) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(H_1, H_2, H_0): the conditional Hamiltonians and the noiseless one."""
    h0 = build_hamiltonian(sc.system)
    h_eff = h0
    if sc.f_r is not None:
        j = sc.noise.j_coupling
        if j != 0.0:
            h_eff = h0 + j * sc.f_r * tensor(np.eye(3, dtype=complex), pauli("z"))
    h_noise = 0.5 * sc.noise.b * noise_operator()
    return h_eff + h_noise, h_eff - h_noise, h0


def _single_generator(h: np.ndarray, t1: float | None) -> np.ndarray:
    gen = _commutator_generator(h)
    if t1 is not None:
        gen = gen + _t1_dissipator(t1)
    return gen


def _pair_generator(sc: SimScenario) -> np.ndarray:
    """72x72 generator of the vectorized conditional pair (vec rho1, vec rho2)."""
    h1, h2, _ = _hamiltonian_pair(sc)
    switch = _I36 / sc.noise.tau_c
    gen = np.zeros((72, 72), dtype=complex)
    gen[:36, :36] = _single_generator(h1, sc.noise.t1_fq) - switch
    gen[:36, 36:] = switch
    gen[36:, :36] = switch
    gen[36:, 36:] = _single_generator(h2, sc.noise.t1_fq) - switch
    return gen


def conditional_derivative(state: ConditionalState,
                           sc: SimScenario) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side (d rho_1/dt, d rho_2/dt) of the coupled equations."""
    h1, h2, _ = _hamiltonian_pair(sc)
    rate = 1.0 / sc.noise.tau_c
    d1 = -1j * (h1 @ state.rho1 - state.rho1 @ h1) - rate * (state.rho1 - state.rho2)
    d2 = -1j * (h2 @ state.rho2 - state.rho2 @ h2) - rate * (state.rho2 - state.rho1)
    if sc.noise.t1_fq is not None:
        sigma_p = tensor(np.eye(3, dtype=complex),
                         np.array([[0, 1], [0, 0]], dtype=complex))
        sigma_m = sigma_p.conj().T
        number = sigma_p @ sigma_m
        for rho, out in ((state.rho1, 1), (state.rho2, 2)):
            diss = -(0.5 / sc.noise.t1_fq) * (number @ rho + rho @ number
                                              - 2.0 * sigma_m @ rho @ sigma_p)
            if out == 1:
                d1 = d1 + diss
            else:
                d2 = d2 + diss
    return d1, d2


# ---------------------------------------------------------------------------
# Fixed-step integration of the linear autonomous system.

def _step_size(noise: NoiseParams, g_perp: float) -> float:
    """dt = min(t1_fq, 1/g_perp, tau_c)/50, capped at 0.02 us."""
    scales = [noise.tau_c]
    if noise.t1_fq is not None:
        scales.append(noise.t1_fq)
    if g_perp > 0:
        scales.append(1.0 / g_perp)
    return min(min(scales) / _STEP_DIVISOR, _MAX_STEP)


def _rk4_step_matrix(gen: np.ndarray, dt: float) -> np.ndarray:
    """One-step operator of classical RK4 for dv/dt = gen v.

    For a linear autonomous system the RK4 update is exactly the degree-4
    Taylor polynomial of expm(gen*dt).
    """
    a = dt * gen
    eye = np.eye(gen.shape[0], dtype=complex)
    return eye + a + a @ a / 2.0 + a @ a @ a / 6.0 + a @ a @ a @ a / 24.0


def _matrix_power(m: np.ndarray, n: int) -> np.ndarray:
    out = np.eye(m.shape[0], dtype=complex)
    base = m
    while n:
        if n & 1:
            out = out @ base
        base = base @ base
        n >>= 1
    return out


def _reference_weights(h0: np.ndarray, psi0: np.ndarray,
                       times: np.ndarray) -> np.ndarray:
    """Fidelity functionals in the interaction picture of h0.

    Row k satisfies F(t_k) = Re(w_k . vec(rho)) with the deterministic
    phase of h0 removed, so a noiseless run gives a constant curve.
    """
    w, v = np.linalg.eigh(h0)
    coeff = v.conj().T @ psi0
    weights = np.empty((len(times), _DIM * _DIM), dtype=complex)
    for k, t in enumerate(times):
        psi_t = v @ (np.exp(-1j * w * t) * coeff)
        weights[k] = np.outer(psi_t.conj(), psi_t).reshape(-1)
    return weights


def _sample_checks(vec_rho: np.ndarray, checks: dict) -> None:
    rho = vec_rho.reshape(_DIM, _DIM)
    checks["max_trace_error"] = max(checks["max_trace_error"],
                                    abs(float(np.real(np.trace(rho))) - 1.0)
                                    + abs(float(np.imag(np.trace(rho)))))
    checks["max_hermiticity_defect"] = max(checks["max_hermiticity_defect"],
                                           float(np.abs(rho - rho.conj().T).max()))
    checks["min_eigenvalue"] = min(checks["min_eigenvalue"],
                                   float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()))
    leak = sum(float(np.real(vec_rho[i])) for i in _LEAK_INDICES)
    checks["max_two_excitation_population"] = max(
        checks["max_two_excitation_population"], leak)


def _new_checks() -> dict:
    return {
        "max_trace_error": 0.0,
        "max_hermiticity_defect": 0.0,
        "min_eigenvalue": np.inf,
        "max_two_excitation_population": 0.0,
    }


def evolve(sc: SimScenario, dt_us: float | None = None) -> DecayCurve:
    """Integrate the coupled conditional equations and sample the fidelity.

    Fixed-step explicit fourth-order scheme; the optional dt_us overrides
    the automatic step rule (used for convergence studies).  Raises
    IntegrationError if any state entry exceeds 10 in magnitude.
    """
    if dt_us is not None and dt_us <= 0:
        raise ValueError(f"dt_us must be > 0, got {dt_us}")
    times = np.linspace(0.0, sc.t_max, int(sc.n_samples))
    interval = times[1] - times[0]
    dt_target = dt_us if dt_us is not None else _step_size(sc.noise, sc.system.g_perp)
    n_sub = max(1, int(math.ceil(interval / dt_target)))
    dt = interval / n_sub

    gen = _pair_generator(sc)
    propagator = _matrix_power(_rk4_step_matrix(gen, dt), n_sub)

    psi0 = sc.initial_ket
    rho0 = np.outer(psi0, psi0.conj())
    v = np.concatenate([rho0.reshape(-1) / 2.0, rho0.reshape(-1) / 2.0])
    weights = _reference_weights(_hamiltonian_pair(sc)[2], psi0, times)

    checks = _new_checks()
    fidelities = np.empty(len(times))
    for k in range(len(times)):
        if k > 0:
            v = propagator @ v
        if np.abs(v).max() > 10.0:
            raise IntegrationError(
                f"state entry exceeded 10 in magnitude at t = {times[k]:.6g} us; "
                "reduce the integration step")
        total = v[:36] + v[36:]
        fidelities[k] = min(max(float(np.real(weights[k] @ total)), 0.0), 1.0)
        _sample_checks(total, checks)

    meta = {"params": sc.record(), "checks": checks,
            "engine": "master_equation", "dt_us": dt}
    return DecayCurve(times, fidelities, meta)


def gauss_hermite_average(sc: SimScenario, n_nodes: int = 15) -> DecayCurve:
    """Average evolve over the quasi-static variable f_R ~ N(0, 1).

    Uses n_nodes Gauss-Hermite abscissae with the change of variables
    f_R = sqrt(2) x; any f_r fixed on the scenario is replaced node by
    node.  Requires t2_fq to be present.
    """
    if sc.noise.t2_fq is None:
        raise ValueError("gauss_hermite_average requires t2_fq; "
                         "without it the average equals a single evolve run")
    n_nodes = int(n_nodes)
    if n_nodes < 3 or n_nodes % 2 == 0:
        raise ValueError(f"n_nodes must be an odd integer >= 3, got {n_nodes}")

    nodes, raw_weights = np.polynomial.hermite.hermgauss(n_nodes)
    quad_weights = raw_weights / math.sqrt(math.pi)

    fidelities = None
    checks = _new_checks()
    times = None
    for x, w in zip(nodes, quad_weights):
        curve = evolve(replace(sc, f_r=math.sqrt(2.0) * float(x)))
        times = curve.times
        contrib = w * curve.fidelities
        fidelities = contrib if fidelities is None else fidelities + contrib
        node_checks = curve.metadata["checks"]
        checks["max_trace_error"] = max(checks["max_trace_error"],
                                        node_checks["max_trace_error"])
        checks["max_hermiticity_defect"] = max(checks["max_hermiticity_defect"],
                                               node_checks["max_hermiticity_defect"])
        checks["min_eigenvalue"] = min(checks["min_eigenvalue"],
                                       node_checks["min_eigenvalue"])
        checks["max_two_excitation_population"] = max(
            checks["max_two_excitation_population"],
            node_checks["max_two_excitation_population"])

    meta = {"params": sc.record(), "checks": checks,
            "engine": "gauss_hermite", "n_nodes": n_nodes}
    return DecayCurve(times, np.clip(fidelities, 0.0, 1.0), meta)


# ---------------------------------------------------------------------------
# Monte-Carlo oracle: explicit telegraph paths, exact piecewise propagation.

def telegraph_flip_times(rng: np.random.Generator, t_max: float,
                         tau_c: float) -> np.ndarray:
    """Flip instants of a telegraph process on [0, t_max].

    Flips arrive from an exponential clock of rate 1/tau_c, which gives
    the autocorrelation exp(-2|tau|/tau_c) for the +-1 signal.
    """
    flips = []
    t = rng.exponential(tau_c)
    while t < t_max:
        flips.append(t)
        t += rng.exponential(tau_c)
    return np.asarray(flips)


class _Propagator:
    """Action of expm(t * gen) on vectors, via eigendecomposition.

    Falls back to scipy expm per call if the generator is too close to
    defective for a reliable eigenbasis.
    """

    def __init__(self, gen: np.ndarray):
        self._gen = gen
        w, vecs = np.linalg.eig(gen)
        try:
            inv = np.linalg.inv(vecs)
        except np.linalg.LinAlgError:
            inv = None
        if inv is not None:
            defect = np.abs((vecs * w) @ inv - gen).max()
            scale = max(np.abs(gen).max(), 1.0)
            if defect <= 1e-9 * scale:
                self._eig: tuple | None = (w, vecs, inv)
                return
        self._eig = None

    def apply(self, v: np.ndarray, t: float) -> np.ndarray:
        if t == 0.0:
            return v
        if self._eig is not None:
            w, vecs, inv = self._eig
            return vecs @ (np.exp(w * t) * (inv @ v))
        from scipy.linalg import expm
        return expm(self._gen * t) @ v


def _trajectory_rng(seed: int, index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(index,))
    return np.random.Generator(np.random.Philox(seq))


def monte_carlo_oracle(sc: SimScenario, n_traj: int, seed: int) -> DecayCurve:
    """Trajectory average over explicit telegraph paths, as an independent oracle.

    Each trajectory draws f_R from N(0, 1) when t2_fq is present (unless
    the scenario pins f_r), a random initial telegraph sign, and
    exponential flip times; between events the single-state Lindblad
    equation (unitary plus T1 dissipator) is propagated exactly.
    Deterministic for a fixed seed; the metadata carries the pointwise
    standard error of the fidelity mean.
    """
    n_traj = int(n_traj)
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj}")

    times = np.linspace(0.0, sc.t_max, int(sc.n_samples))
    psi0 = sc.initial_ket
    rho0_vec = np.outer(psi0, psi0.conj()).reshape(-1)
    weights = _reference_weights(build_hamiltonian(sc.system), psi0, times)

    sample_frozen = sc.noise.t2_fq is not None and sc.f_r is None
    shared: tuple[_Propagator, _Propagator] | None = None
    if not sample_frozen:
        shared = _propagator_pair(sc, sc.f_r if sc.f_r is not None else 0.0)

    n_pts = len(times)
    sum_f = np.zeros(n_pts)
    sum_f2 = np.zeros(n_pts)
    mean_vec = np.zeros((n_pts, _DIM * _DIM), dtype=complex)

    for i in range(n_traj):
        rng = _trajectory_rng(seed, i)
        if sample_frozen:
            props = _propagator_pair(sc, float(rng.standard_normal()))
        else:
            props = shared
        sign = 1 if rng.random() < 0.5 else -1
        flips = telegraph_flip_times(rng, sc.t_max, sc.noise.tau_c)

        v = rho0_vec.copy()
        t_cur = 0.0
        flip_idx = 0
        for k in range(n_pts):
            target = times[k]
            while flip_idx < len(flips) and flips[flip_idx] <= target:
                v = _prop_for(props, sign).apply(v, flips[flip_idx] - t_cur)
                t_cur = flips[flip_idx]
                sign = -sign
                flip_idx += 1
            v = _prop_for(props, sign).apply(v, target - t_cur)
            t_cur = target
            f = min(max(float(np.real(weights[k] @ v)), 0.0), 1.0)
            sum_f[k] += f
            sum_f2[k] += f * f
            mean_vec[k] += v

    mean_f = sum_f / n_traj
    if n_traj >= 2:
        var = np.maximum(sum_f2 / n_traj - mean_f**2, 0.0) * n_traj / (n_traj - 1)
        stderr = np.sqrt(var / n_traj)
    else:
        stderr = np.full(n_pts, np.inf)

    checks = _new_checks()
    for k in range(n_pts):
        _sample_checks(mean_vec[k] / n_traj, checks)

    meta = {"params": sc.record(), "checks": checks, "engine": "monte_carlo",
            "n_traj": n_traj, "seed": int(seed), "stderr": stderr}
    return DecayCurve(times, mean_f, meta)


def _propagator_pair(sc: SimScenario, f_r: float) -> tuple[_Propagator, _Propagator]:
    pinned = replace(sc, f_r=f_r) if sc.noise.j_coupling != 0.0 else sc
    h1, h2, _ = _hamiltonian_pair(pinned)
    return (_Propagator(_single_generator(h1, sc.noise.t1_fq)),
            _Propagator(_single_generator(h2, sc.noise.t1_fq)))


def _prop_for(props: tuple[_Propagator, _Propagator], sign: int) -> _Propagator:
    return props[0] if sign > 0 else props[1]
