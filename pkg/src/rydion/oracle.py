"""Brute-force time propagation of the driven ladder.

Shares the level basis and absorber with the Floquet engine but integrates
the Schroedinger equation directly with exponential mid-point steps, so
agreement with the spectral route is an independent check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DomainError
from .floquet import default_absorber_rate
from .species import LevelBasis, dipole_matrix
from .units import Frequency

MAX_ORACLE_LEVELS = 200
MIN_STEPS_PER_PERIOD = 256
STEP_HALVING_TOL = 1e-4


@dataclass(frozen=True)
class PropagationResult:
    times: np.ndarray
    survival: np.ndarray
    norm_leak: np.ndarray
    interior: np.ndarray  # population on levels n <= n_ion
    edge: np.ndarray  # population on absorbing levels
    step_halving_delta: float | None = None

    @property
    def final(self) -> float:
        return float(self.survival[-1])


def _hamiltonian_parts(basis, absorber_rate):
    h0 = basis.energies - 0.5j * absorber_rate * basis.absorber_profile()
    return h0, dipole_matrix(basis)


def _step_propagators(h0, d, omega, field, steps):
    """Mid-point exponentials for one period; index s covers [s*dt, (s+1)*dt]."""
    dt = 2.0 * math.pi / omega / steps
    out = np.empty((steps, h0.size, h0.size), complex)
    for s in range(steps):
        h = field * math.cos(omega * (s + 0.5) * dt) * d
        h = h.astype(complex)
        h[np.diag_indices_from(h)] += h0
        out[s] = scipy.linalg.expm(-1j * dt * h)
    return out


def _run(basis, omega, field, t_final, steps, absorber_rate, per_step):
    h0, d = _hamiltonian_parts(basis, absorber_rate)
    props = _step_propagators(h0, d, omega.value, field, steps)
    dt = omega.period / steps
    n_steps = int(round(t_final / dt))
    full_periods, rest = divmod(n_steps, steps)

    psi = np.zeros(len(basis), complex)
    psi[basis.launch_index] = 1.0
    edge_mask = basis.absorber_profile() > 0
    samples = [(0.0, psi.copy())]
    if per_step:
        for p in range(full_periods):
            for s in range(steps):
                psi = props[s] @ psi
            samples.append(((p + 1) * steps * dt, psi.copy()))
    else:
        period_prop = np.eye(len(basis), dtype=complex)
        for s in range(steps):
            period_prop = props[s] @ period_prop
        for p in range(full_periods):
            psi = period_prop @ psi
            samples.append(((p + 1) * steps * dt, psi.copy()))
    for s in range(rest):
        psi = props[s] @ psi
    if rest:
        samples.append((n_steps * dt, psi.copy()))

    times = np.array([t for t, _ in samples])
    pops = np.array([np.abs(v) ** 2 for _, v in samples])
    norm = pops.sum(axis=1)
    edge = pops[:, edge_mask].sum(axis=1)
    return PropagationResult(times, np.clip(norm, 0.0, 1.0), 1.0 - norm, norm - edge, edge)


def propagate(basis: LevelBasis, omega: Frequency, field: float, t_final: float,
              dt_per_period: int = MIN_STEPS_PER_PERIOD, absorber_rate: float | None = None,
              check: bool = True, per_step: bool = False) -> PropagationResult:
    """Integrate i dpsi/dt = (H0 - i Gamma/2 + F cos(omega t) x) psi from the launch level.

    Samples are taken at every full driving period and at ``t_final``.  With
    ``check`` the run is repeated at twice the step density and a
    ``ConvergenceError`` is raised if the final survival moves by more than
    1e-4.  ``per_step`` applies every step to the state instead of forming
    the one-period product first (same arithmetic, slower).
    """
    if dt_per_period < MIN_STEPS_PER_PERIOD:
        raise DomainError(f"need at least {MIN_STEPS_PER_PERIOD} steps per period")
    if len(basis) > MAX_ORACLE_LEVELS:
        raise DomainError(f"oracle is limited to {MAX_ORACLE_LEVELS} levels, basis has {len(basis)}")
    if t_final < 0 or field < 0:
        raise DomainError("t_final and field must be non-negative")
    if absorber_rate is None:
        absorber_rate = default_absorber_rate(omega)
    result = _run(basis, omega, field, t_final, dt_per_period, absorber_rate, per_step)
    if not check:
        return result
    fine = _run(basis, omega, field, t_final, 2 * dt_per_period, absorber_rate, False)
    delta = abs(fine.final - result.final)
    if delta > STEP_HALVING_TOL:
        raise ConvergenceError(f"step halving moved P_surv by {delta:.2e}", step_halving_delta=delta)
    return PropagationResult(result.times, result.survival, result.norm_leak, result.interior,
                             result.edge, delta)


def evolve(basis: LevelBasis, psi0: np.ndarray, omega: Frequency, field: float, t: float,
           dt_per_period: int = MIN_STEPS_PER_PERIOD, absorber_rate: float = 0.0,
           backward: bool = False) -> np.ndarray:
    """Propagate an arbitrary state by ``t`` (or back by ``t`` when ``backward``)."""
    h0, d = _hamiltonian_parts(basis, absorber_rate)
    dt = omega.period / dt_per_period
    n = int(round(t / dt))
    psi = np.asarray(psi0, complex).copy()
    order = range(n - 1, -1, -1) if backward else range(n)
    sign = 1.0 if backward else -1.0
    for s in order:
        h = field * math.cos(omega.value * (s + 0.5) * dt) * d
        h = h.astype(complex)
        h[np.diag_indices_from(h)] += h0
        psi = scipy.linalg.expm(sign * 1j * dt * h) @ psi
    return psi
