"""Truncated Floquet matrix of the driven ladder and its complex-symmetric spectrum.

Photon block ``k`` of level ``i`` sits at row ``i + L*(k+K)``; the diagonal
carries ``E_i - i*Gamma_i/2 + k*omega`` and neighbouring blocks couple
through ``(F/2)*d_ij``.  The matrix is complex symmetric, so every spectral
decomposition here uses the unconjugated c-product ``u.T @ v``.

Two eigensolvers are provided.  :func:`diagonalize` is a dense full
decomposition.  :func:`central_spectrum` uses shift-invert Arnoldi on the
sparse block-tridiagonal matrix and returns only the Floquet states whose
quasienergy lies in the zone centred on the launch energy, one replica per
physical state, which is all the survival probability needs.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, DomainError
from .species import LevelBasis, dipole_matrix
from .units import Frequency, photon_number

log = logging.getLogger(__name__)

DEFAULT_DIM_CAP = 20000
PHOTON_GUARD = 2
RESIDUAL_TOL = 1e-8
COMPLETENESS_TOL = 1e-6
ZONE_SLACK = 0.05  # tolerated zone-edge overhang, in units of omega
REPLICA_OVERLAP = 0.9  # folded states this parallel, and
REPLICA_SHIFT_TOL = 0.1  # this close to a whole number of photons apart, are replicas


def default_absorber_rate(omega: Frequency) -> float:
    return omega.value / 10.0


def minimum_photon_blocks(basis: LevelBasis, omega: Frequency, guard: int = PHOTON_GUARD) -> int:
    """Photons lifting the launch level to the continuum, plus ``guard``."""
    return photon_number(basis.n0, basis.delta, omega) + guard


def required_photon_blocks(basis: LevelBasis, omega: Frequency, guard: int = PHOTON_GUARD) -> int:
    """Default cutoff: the continuum reach or the depth of the lowest level, whichever is larger.

    Every level needs a replica next to the launch energy for the central
    zone to hold one state per level.
    """
    depth = math.ceil((basis.launch.energy - basis.energies.min()) / omega.value)
    return max(photon_number(basis.n0, basis.delta, omega), depth) + guard


@dataclass(frozen=True, eq=False)
class FloquetMatrix:
    """Block layout of the Floquet matrix; build the entries with dense() or sparse()."""

    basis: LevelBasis
    omega: Frequency
    field: float
    K: int
    absorber_rate: float

    @property
    def L(self) -> int:
        return len(self.basis)

    @property
    def dim(self) -> int:
        return self.L * (2 * self.K + 1)

    @property
    def photons(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    @property
    def launch_row(self) -> int:
        return self.basis.launch_index + self.L * self.K

    @property
    def level_of(self) -> np.ndarray:
        return np.tile(np.arange(self.L), 2 * self.K + 1)

    @property
    def photon_of(self) -> np.ndarray:
        return np.repeat(self.photons, self.L)

    @property
    def level_rates(self) -> np.ndarray:
        return self.absorber_rate * self.basis.absorber_profile()

    def diagonal(self) -> np.ndarray:
        block = self.basis.energies - 0.5j * self.level_rates
        return np.concatenate([block + k * self.omega.value for k in self.photons])

    def coupling(self) -> np.ndarray:
        return 0.5 * self.field * dipole_matrix(self.basis)

    def sparse(self) -> sp.csc_matrix:
        nb = 2 * self.K + 1
        ones = np.ones(nb - 1)
        hop = sp.diags([ones, ones], [-1, 1], shape=(nb, nb))
        m = sp.kron(hop, sp.csr_matrix(self.coupling()), format="csr").astype(complex)
        return (m + sp.diags(self.diagonal())).tocsc()

    def dense(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim), complex)
        c = self.coupling()
        L = self.L
        for b in range(2 * self.K):
            m[b * L:(b + 1) * L, (b + 1) * L:(b + 2) * L] = c
            m[(b + 1) * L:(b + 2) * L, b * L:(b + 1) * L] = c
        m[np.diag_indices_from(m)] = self.diagonal()
        return m

    @property
    def matrix(self) -> np.ndarray:
        return self.dense()


def build_floquet(basis: LevelBasis, omega: Frequency, field: float, K: int,
                  absorber_rate: float | None = None, guard: int = PHOTON_GUARD) -> FloquetMatrix:
    """Set up the Floquet problem, refusing photon cutoffs that cannot reach the continuum.

    ``K`` must be at least the number of photons that lift the launch level
    to zero energy plus ``guard``; smaller cutoffs silently under-estimate
    ionization and are rejected with a :class:`ConvergenceError`.
    """
    if field < 0:
        raise DomainError(f"field must be non-negative, got {field}")
    if absorber_rate is None:
        absorber_rate = default_absorber_rate(omega)
    if not absorber_rate > 0:
        raise DomainError(f"absorber rate must be positive, got {absorber_rate}")
    if guard < 2:
        raise DomainError("photon guard must be at least 2")
    needed = minimum_photon_blocks(basis, omega, guard)
    if K < needed:
        raise ConvergenceError(
            f"K={K} photon blocks cannot carry ionization: {needed - guard} photons lift "
            f"n0={basis.n0} (defect {basis.delta}) to the continuum at omega={omega.value:.6g} a.u.; "
            f"need K >= {needed}", K=K, required=needed)
    return FloquetMatrix(basis, omega, float(field), int(K), float(absorber_rate))


@dataclass(frozen=True, eq=False)
class FloquetSpectrum:
    """Quasienergies with their launch-state amplitudes.

    ``amplitudes[j]`` is the c-product overlap of c-normalized eigenvector
    ``j`` with the launch state and ``folded[:, j]`` is the eigenvector
    summed over photon blocks, i.e. the level-space Floquet state at
    integer multiples of the period.  A *central* spectrum keeps one replica
    per physical state (quasienergy within omega/2 of the launch energy) and
    re-normalizes the folded states in level space, where they form a
    c-orthonormal basis.
    """

    quasienergies: np.ndarray
    amplitudes: np.ndarray
    folded: np.ndarray
    omega: float
    launch_energy: float
    launch_index: int
    central: bool = False
    worst_residual: float = 0.0

    def __len__(self):
        return self.quasienergies.size

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega

    @property
    def rates(self) -> np.ndarray:
        return -2.0 * self.quasienergies.imag

    @property
    def cweights(self) -> np.ndarray:
        """Complex weights c_j**2; they sum to one when the set is complete."""
        return self.amplitudes**2

    @property
    def weights(self) -> np.ndarray:
        """Non-negative weights |c_j|**2 normalized to unit sum."""
        w = np.abs(self.amplitudes) ** 2
        return w / w.sum()

    @property
    def completeness(self) -> float:
        return abs(complex(self.cweights.sum()) - 1.0)

    def zone(self) -> "FloquetSpectrum":
        """Reduce to one replica per physical Floquet state."""
        if self.central:
            return self
        half = 0.5 * self.omega
        off = self.quasienergies.real - self.launch_energy
        keep = (off >= -half) & (off < half)
        return _central_from(self.quasienergies[keep], self.folded[:, keep], self.omega,
                             self.launch_energy, self.launch_index, self.worst_residual)


def _central_from(eps, folded, omega, e0, i0, residual):
    cn = np.einsum("ij,ij->j", folded, folded)
    if cn.size and np.min(np.abs(cn)) < 1e-12:
        raise ConvergenceError("folded Floquet state with vanishing c-norm", min_cnorm=float(np.min(np.abs(cn))))
    u = folded / np.sqrt(cn)
    order = np.lexsort((eps.imag, eps.real))
    return FloquetSpectrum(eps[order], u[i0, order].copy(), u[:, order], omega, e0, i0, True, residual)


def _distinct_nearest(eps, off, folded, omega, count):
    """Indices of up to ``count`` states in order of ``off``, one replica per physical state.

    Replicas of one Floquet state have quasienergies a nonzero multiple of
    omega apart and fold onto the same level-space vector; a candidate that
    is both is skipped.  Parallelism is judged with the Hermitian product
    because strongly absorbed states are nearly self-orthogonal in the
    c-product.
    """
    u = folded / np.linalg.norm(folded, axis=0)
    pick = []
    for j in np.argsort(off, kind="stable"):
        if pick:
            shift = (eps[j] - eps[pick]) / omega
            m = np.round(shift.real)
            replica = (m != 0) & (np.abs(shift - m) < REPLICA_SHIFT_TOL) \
                & (np.abs(u[:, pick].conj().T @ u[:, j]) > REPLICA_OVERLAP)
            if replica.any():
                continue
        pick.append(int(j))
        if len(pick) == count:
            break
    return np.array(pick, dtype=int)


def _check_residual(m, eps, vecs):
    scale = spla.norm(m) if sp.issparse(m) else np.linalg.norm(m)
    res = np.linalg.norm(m @ vecs - vecs * eps, axis=0) / np.linalg.norm(vecs, axis=0)
    worst = float(res.max() / scale) if res.size else 0.0
    if worst > RESIDUAL_TOL:
        raise ConvergenceError(f"eigendecomposition residual {worst:.3e} exceeds {RESIDUAL_TOL:g}*|M|",
                               worst_residual=worst)
    return worst


def _fold(fm: FloquetMatrix, vecs: np.ndarray) -> np.ndarray:
    return vecs.reshape(2 * fm.K + 1, fm.L, -1).sum(axis=0)


def diagonalize(fm: FloquetMatrix, dim_cap: int = DEFAULT_DIM_CAP) -> FloquetSpectrum:
    """Dense eigendecomposition of the whole Floquet matrix.

    Eigenvectors are c-normalized (v.T v = 1) and the amplitudes are their
    launch-row entries, so the complex weights sum to one.
    """
    if fm.dim > dim_cap:
        raise DomainError(f"Floquet dimension {fm.dim} exceeds the cap {dim_cap}")
    basis = fm.basis
    args = (fm.omega.value, basis.launch.energy, basis.launch_index)
    if fm.field == 0.0:
        eps = fm.diagonal()
        amp = np.zeros(fm.dim, complex)
        amp[fm.launch_row] = 1.0
        folded = np.zeros((fm.L, fm.dim), complex)
        folded[fm.level_of, np.arange(fm.dim)] = 1.0
        return FloquetSpectrum(eps, amp, folded, *args)

    m = fm.dense()
    eps, vecs = scipy.linalg.eig(m, overwrite_a=False, check_finite=False)
    worst = _check_residual(m, eps, vecs)
    cn = np.einsum("ij,ij->j", vecs, vecs)
    if np.min(np.abs(cn)) < 1e-12:
        raise ConvergenceError("eigenvector with vanishing c-norm (near-defective matrix)",
                               worst_residual=worst, min_cnorm=float(np.min(np.abs(cn))))
    vecs = vecs / np.sqrt(cn)
    return FloquetSpectrum(eps, vecs[fm.launch_row].copy(), _fold(fm, vecs), *args, worst_residual=worst)


def _start_vector(fm: FloquetMatrix) -> np.ndarray:
    # fixed start vector keeps ARPACK (and everything downstream) deterministic
    v0 = np.cos(0.7 * np.arange(fm.dim)) + 1e-3
    v0[fm.launch_row] += 1.0
    return v0.astype(complex)


def central_spectrum(fm: FloquetMatrix, extra: int = 12, tol: float = 1e-13,
                     max_tries: int = 4) -> FloquetSpectrum:
    """Floquet states of the central quasienergy zone by shift-invert Arnoldi.

    The shift is the launch energy; replicas of every physical state are
    spaced by omega, so exactly ``L`` eigenvalues fall in the half-open zone
    [E0 - omega/2, E0 + omega/2).  The request grows until all of them are
    found.  States are taken in order of distance from E0, skipping any
    whose folded state repeats an accepted one (a replica); replicas that
    the photon cutoff pushes up to ``ZONE_SLACK*omega`` past the zone edge
    are accepted.
    """
    basis = fm.basis
    e0 = basis.launch.energy
    half = 0.5 * fm.omega.value
    need = required_photon_blocks(basis, fm.omega)
    if fm.K < need:
        raise ConvergenceError(f"K={fm.K} leaves the lowest levels without a replica near the launch "
                               f"energy; the central zone needs K >= {need}", K=fm.K, required=need)
    if fm.field == 0.0:
        return diagonalize(fm).zone()
    m = fm.sparse()
    lu = spla.splu((m - e0 * sp.identity(fm.dim, format="csc")).tocsc())
    op = spla.LinearOperator(m.shape, matvec=lu.solve, dtype=complex)
    k = min(fm.L + extra, fm.dim - 2)
    for _ in range(max_tries):
        mu, vecs = spla.eigs(op, k=k, which="LM", tol=tol, v0=_start_vector(fm),
                             ncv=min(fm.dim, max(2 * k + 1, 40)))
        eps = e0 + 1.0 / mu
        off = np.abs(eps.real - e0)
        folded = _fold(fm, vecs)
        pick = _distinct_nearest(eps, off, folded, fm.omega.value, fm.L)
        # every state closer than the farthest pick has been found once a returned state lies beyond it
        if len(pick) == fm.L and np.abs(eps - e0).max() > off[pick].max():
            break
        k = min(int(1.6 * k) + 4, fm.dim - 2)
    else:
        raise ConvergenceError(f"found {len(pick)} of {fm.L} central Floquet states",
                               found=len(pick), expected=fm.L)
    overhang = off[pick].max() - half
    if overhang > ZONE_SLACK * fm.omega.value:
        raise ConvergenceError(f"central zone incomplete: a state lies {overhang / fm.omega.value:.3g} omega "
                               f"outside it", overhang=float(overhang))
    if overhang >= 0:
        log.info("central zone uses a state %.2e omega beyond its edge", overhang / fm.omega.value)
    eps, vecs, folded = eps[pick], vecs[:, pick], folded[:, pick]
    worst = _check_residual(m, eps, vecs)
    return _central_from(eps, folded, fm.omega.value, e0, basis.launch_index, worst)


def survival(spec: FloquetSpectrum, t: float, coherent: bool = False) -> float:
    """Probability of not having been absorbed after time ``t`` (a.u.).

    The default incoherent form is ``sum_j w_j exp(-Gamma_j t)`` over the
    central Floquet states.  The coherent form rebuilds the level-space state
    ``sum_j c_j exp(-i eps_j t) u_j`` and is exact at integer periods.
    """
    if t < 0:
        raise DomainError("time must be non-negative")
    z = spec.zone()
    if coherent:
        psi = z.folded @ (z.amplitudes * np.exp(-1j * z.quasienergies * t))
        p = float(np.vdot(psi, psi).real)
    else:
        p = float(np.dot(z.weights, np.exp(-z.rates * t)))
    return min(1.0, max(0.0, p))


def zone_periodicity_defect(fm: FloquetMatrix, spec: FloquetSpectrum, edge_blocks: int = 2) -> float:
    """Worst distance from eps + omega to the spectrum, over interior eigenvalues.

    Interior means the quasienergy sits at least ``edge_blocks`` photon
    blocks inside the cutoff on both sides of the shift.
    """
    eps = spec.quasienergies
    w = fm.omega.value
    e = fm.basis.energies
    lo = e.max() - (fm.K - edge_blocks) * w
    hi = e.min() + (fm.K - edge_blocks - 1) * w
    worst = 0.0
    for x in eps[(eps.real > lo) & (eps.real < hi)]:
        worst = max(worst, float(np.min(np.abs(eps - (x + w)))))
    return worst
