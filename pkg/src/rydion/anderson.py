"""Tight-binding (Anderson) chain for the photon ladder and its localization diagnostics.

Site ``m`` of the chain is the basis level closest to ``E_launch + m*omega``;
its detuning from that photon-dressed energy acts as on-site disorder and the
dipole coupling ``(F/2) d`` between consecutive site levels as hopping.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .species import LevelBasis, dipole
from .units import Frequency

log = logging.getLogger(__name__)

MIN_SITES = 8
STATISTICAL_STEPS = 10_000
DEFAULT_SEED = 20240601


@dataclass(frozen=True)
class Site:
    m: int
    level_n: int
    level_index: int
    detuning: float  # a.u.
    hopping: float  # a.u., to site m + 1 (0 on the last site)


@dataclass(frozen=True)
class AndersonChain:
    sites: tuple[Site, ...]
    field: float
    omega: float
    truncated: bool = False  # stopped at the absorbing edge before photon_number + guard sites

    def __len__(self):
        return len(self.sites)

    @property
    def length(self) -> int:
        return len(self.sites)

    @property
    def detunings(self) -> np.ndarray:
        return np.array([s.detuning for s in self.sites])

    @property
    def hoppings(self) -> np.ndarray:
        """The N - 1 bond hoppings."""
        return np.array([s.hopping for s in self.sites[:-1]])

    def scaled(self, factor: float) -> "AndersonChain":
        """Same detunings, every hopping multiplied by ``factor``."""
        sites = tuple(replace(s, hopping=s.hopping * factor) for s in self.sites)
        return replace(self, sites=sites, field=self.field * factor)

    def hamiltonian(self) -> np.ndarray:
        v = self.hoppings
        return np.diag(self.detunings) + np.diag(v, 1) + np.diag(v, -1)


def chain_from_arrays(detunings, hoppings, field: float = 1.0, omega: float = 1.0) -> AndersonChain:
    """Synthetic chain; ``hoppings`` holds the N - 1 bonds."""
    eps = np.asarray(detunings, float)
    v = np.asarray(hoppings, float)
    if v.size != eps.size - 1:
        raise DomainError("need one hopping per bond (len(detunings) - 1)")
    v = np.append(v, 0.0)
    sites = tuple(Site(m, -1, -1, float(e), float(h)) for m, (e, h) in enumerate(zip(eps, v)))
    return AndersonChain(sites, field, omega)


def nearest_level(energies: np.ndarray, target: float) -> int:
    """Index of the level closest to ``target``; ties go to the higher level."""
    dist = np.abs(energies - target)
    best = np.flatnonzero(np.isclose(dist, dist.min(), rtol=1e-12, atol=0.0))
    if best.size > 1:
        pick = best[np.argmax(energies[best])]
        log.info("levels %s equidistant from %.6e, taking the higher one", best.tolist(), target)
        return int(pick)
    return int(best[0])


def build_chain(basis: LevelBasis, omega: Frequency, field: float, n_sites: int | None = None,
                guard: int = 2) -> AndersonChain:
    """Chain of up to ``photon_number + guard`` sites, cut where the ladder reaches the absorber.

    Only levels below the absorbing edge (plus the launch level) can host a
    site; the chain stops at the first photon index whose target energy lies
    above the highest such level.
    """
    if field <= 0:
        raise DomainError("field must be positive")
    w = omega.value
    e0 = basis.launch.energy
    if n_sites is None:
        n_sites = math.ceil(-e0 / w) + guard
    usable = [i for i, lv in enumerate(basis.levels) if lv.launch or lv.n <= basis.n_ion]
    e = basis.energies[usable]
    top = e.max()
    picks = []
    for m in range(n_sites):
        target = e0 + m * w
        if m > 0 and target > top + 0.5 * w:
            break
        picks.append(usable[nearest_level(e, target)])
    truncated = len(picks) < n_sites
    sites = []
    for m, idx in enumerate(picks):
        nxt = picks[m + 1] if m + 1 < len(picks) else None
        v = 0.0 if nxt is None or nxt == idx else 0.5 * field * dipole(basis, idx, nxt)
        lv = basis.levels[idx]
        sites.append(Site(m, lv.n, idx, lv.energy - (e0 + m * w), v))
    return AndersonChain(tuple(sites), field, w, truncated)


@dataclass(frozen=True)
class LocalizationDiagnostics:
    xi: float  # sites
    participation: float
    extended: bool
    n_sites: int
    lyapunov: float


def lyapunov_exponent(detunings, hoppings, energy: float = 0.0) -> float:
    """Growth rate per site of the 2x2 transfer-matrix product.

    The recursion is ``psi[m+1] = ((E - eps[m]) psi[m] - V[m-1] psi[m-1]) / V[m]``;
    the product is renormalised every step and the log norms summed exactly.
    """
    eps = np.asarray(detunings, float)
    v = np.asarray(hoppings, float)
    if np.any(v == 0):
        raise DomainError("chain severed: zero hopping, no transport past that bond")
    m = np.eye(2)
    logs = []
    v_prev = v[0]
    for k in range(v.size):
        t = np.array([[(energy - eps[k]) / v[k], -v_prev / v[k]], [1.0, 0.0]])
        m = t @ m
        s = np.linalg.norm(m, 2)
        logs.append(math.log(s))
        m /= s
        v_prev = v[k]
    return math.fsum(logs) / v.size


def _participation(h: np.ndarray) -> float:
    _, vecs = np.linalg.eigh(h)
    j = int(np.argmax(np.abs(vecs[0])))
    p = vecs[:, j] ** 2
    return float(1.0 / np.sum(p**2))


def localization_length(chain: AndersonChain, energy: float = 0.0) -> LocalizationDiagnostics:
    """Single-shot transfer-matrix xi on the literal chain plus the participation ratio."""
    n = chain.length
    if n < MIN_SITES:
        raise DomainError(f"chain has {n} sites, need at least {MIN_SITES}")
    gamma = lyapunov_exponent(chain.detunings, chain.hoppings, energy)
    xi = math.inf if gamma <= 1e-14 else 1.0 / gamma
    return LocalizationDiagnostics(xi, _participation(chain.hamiltonian()), xi >= n, n, gamma)


def statistical_xi(chain: AndersonChain, steps: int = STATISTICAL_STEPS, seed: int = DEFAULT_SEED,
                   energy: float = 0.0) -> float:
    """xi from at least ``steps`` recursion steps over re-shuffled copies of the chain's sites."""
    if steps < STATISTICAL_STEPS:
        raise DomainError(f"statistical xi needs at least {STATISTICAL_STEPS} steps")
    eps, v = chain.detunings[:-1], chain.hoppings
    if np.any(v == 0):
        raise DomainError("chain severed: zero hopping, no transport past that bond")
    rng = np.random.default_rng(seed)
    reps = math.ceil(steps / v.size)
    order = np.concatenate([rng.permutation(v.size) for _ in range(reps)])
    gamma = lyapunov_exponent(eps[order], v[order], energy)
    return math.inf if gamma <= 1e-14 else 1.0 / gamma


def envelope_fit_xi(h: np.ndarray, energy_window: float, min_tail: int = 5, floor: float = 1e-12) -> float:
    """Brute-force xi: fit exponential envelopes to the eigenstates near the band centre.

    Every eigenvector with |E| < energy_window contributes both tails, from its
    peak outward to the first amplitude below ``floor``; the average decay
    rate of the straight-line fits of log|psi| against distance is inverted.
    """
    vals, vecs = np.linalg.eigh(h)
    rates = []
    for j in np.flatnonzero(np.abs(vals) < energy_window):
        a = np.abs(vecs[:, j])
        peak = int(np.argmax(a))
        for tail in (a[peak:], a[peak::-1]):
            keep = np.flatnonzero(tail < floor)
            tail = tail[: keep[0]] if keep.size else tail
            if tail.size < min_tail:
                continue
            x = np.arange(tail.size)
            slope = np.polyfit(x, np.log(tail), 1)[0]
            rates.append(-slope)
    if not rates:
        raise DomainError("no eigenstate tails long enough to fit")
    return 1.0 / float(np.mean(rates))


def disorder_chain(n_sites: int, w_over_v: float, rng: np.random.Generator, v: float = 1.0) -> AndersonChain:
    eps = rng.uniform(-0.5 * w_over_v * v, 0.5 * w_over_v * v, n_sites)
    return chain_from_arrays(eps, np.full(n_sites - 1, v))


def localization_field_for_chain(unit_chain: AndersonChain, ratio: float = 1.0,
                                 bounds: tuple[float, float] = (1e-14, 1e-4), rtol: float = 1e-6) -> float:
    """Field at which xi/N reaches ``ratio`` for a chain built at unit field."""
    if ratio <= 0:
        raise DomainError("target ratio must be positive")
    lo, hi = sorted(bounds)
    if lo <= 0:
        raise DomainError("field bounds must be positive")
    n = unit_chain.length
    xi_over_n = lambda f: localization_length(unit_chain.scaled(f)).xi / n  # noqa: E731
    if xi_over_n(lo) >= ratio:
        raise DomainError(f"xi/N already {xi_over_n(lo):.3g} >= {ratio} at the lower field bound")
    if xi_over_n(hi) < ratio:
        raise DomainError(f"xi/N stays below {ratio} up to field {hi:g} a.u.")
    while (hi - lo) / hi > rtol:
        mid = math.sqrt(lo * hi)
        if xi_over_n(mid) >= ratio:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def predict_localization_field(basis: LevelBasis, omega: Frequency, target_xi_over_n: float = 1.0,
                               bounds: tuple[float, float] | None = None) -> float:
    """Chain-model proxy for the ionization threshold: smallest F with xi >= ratio*N.

    The site sequence is frozen at unit field, so xi depends on F only
    through the hoppings.
    """
    if bounds is None:
        bounds = (1e-5 / basis.n0**4, 10.0 / basis.n0**4)
    return localization_field_for_chain(build_chain(basis, omega, 1.0), target_xi_over_n, bounds)
