"""Quantum-defect species models and the reduced one-dimensional level ladder.

The ladder is hydrogenic (integer effective quantum numbers) except for a
single launch level whose effective quantum number n0 - delta carries the
species' quantum defect in the launch channel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import ConfigError, DomainError

# |<n|x|n+1>| / (n (n+1)) for the half-line Coulomb problem at n = 20,
# frozen from quadrature (see tests/test_species.py for the recomputation).
DIPOLE_C = 0.32489867047919496
DIPOLE_EXPONENT = 5.0 / 3.0

# Rydberg-Ritz leading quantum defects (NIST / standard spectroscopy tables).
DEFAULT_DEFECTS: Mapping[str, Mapping[int, float]] = MappingProxyType({
    "H": MappingProxyType({0: 0.0, 1: 0.0, 2: 0.0, 3: 0.0}),
    "Li": MappingProxyType({0: 0.399, 1: 0.047, 2: 0.002, 3: 0.0}),
    "Na": MappingProxyType({0: 1.348, 1: 0.855, 2: 0.015, 3: 0.002}),
    "Rb": MappingProxyType({0: 3.131, 1: 2.65, 2: 1.348, 3: 0.016}),
})


@dataclass(frozen=True)
class SpeciesModel:
    name: str
    defects: Mapping[int, float]
    launch_channel: int = 0

    def __post_init__(self):
        frozen = MappingProxyType({int(l): float(d) for l, d in dict(self.defects).items()})
        object.__setattr__(self, "defects", frozen)
        for l, d in frozen.items():
            if l not in (0, 1, 2, 3):
                raise ConfigError(f"{self.name}: angular momentum channel l={l} not in 0..3")
            if not 0.0 <= d < 4.0:
                raise ConfigError(f"{self.name}: quantum defect l={l} is {d}, outside [0, 4)")
        if self.launch_channel not in frozen:
            raise ConfigError(f"{self.name}: no quantum defect stored for launch channel l={self.launch_channel}")

    def __reduce__(self):
        # mappingproxy does not pickle; worker processes get a plain dict
        return (SpeciesModel, (self.name, dict(self.defects), self.launch_channel))

    @property
    def launch_defect(self) -> float:
        return self.defects[self.launch_channel]

    def with_launch(self, channel: int) -> "SpeciesModel":
        return replace(self, launch_channel=channel)


def get_species(name: str, launch_channel: int = 0, overrides: Mapping[int, float] | None = None) -> SpeciesModel:
    """Look up a default species, optionally overriding individual defects."""
    try:
        defects = dict(DEFAULT_DEFECTS[name])
    except KeyError:
        raise ConfigError(f"unknown species {name!r}; known: {', '.join(DEFAULT_DEFECTS)}") from None
    defects.update(overrides or {})
    return SpeciesModel(name, defects, launch_channel)


def hydrogenic_with_defect(delta: float, name: str | None = None) -> SpeciesModel:
    """Synthetic species with a single launch-channel defect (used for sweeps)."""
    return SpeciesModel(name or f"delta={delta:g}", {0: delta})


def level_energy(n: float, delta: float = 0.0) -> float:
    """Rydberg energy -1/(2 (n - delta)**2) in atomic units."""
    if n <= delta:
        raise DomainError(f"n={n} must exceed the quantum defect {delta}")
    return -0.5 / (n - delta) ** 2


@dataclass(frozen=True)
class Level:
    n: int
    n_eff: float
    energy: float
    launch: bool = False


@dataclass(frozen=True)
class LevelBasis:
    levels: tuple[Level, ...]
    n_min: int
    n_max: int
    n_ion: int
    absorber_width: int
    species: str = "H"
    n0: int = 0
    delta: float = 0.0
    launch_index: int = field(init=False)

    def __post_init__(self):
        launch = [i for i, lv in enumerate(self.levels) if lv.launch]
        if len(launch) != 1:
            raise ConfigError("basis needs exactly one launch level")
        object.__setattr__(self, "launch_index", launch[0])

    def __len__(self):
        return len(self.levels)

    @property
    def energies(self) -> np.ndarray:
        return np.array([lv.energy for lv in self.levels])

    @property
    def n_eff(self) -> np.ndarray:
        return np.array([lv.n_eff for lv in self.levels])

    @property
    def launch(self) -> Level:
        return self.levels[self.launch_index]

    def absorber_profile(self) -> np.ndarray:
        """Quadratic ramp, 0 at n_ion and 1 at n_max, on the edge levels only."""
        prof = np.zeros(len(self.levels))
        for i, lv in enumerate(self.levels):
            if not lv.launch and lv.n > self.n_ion:
                prof[i] = ((lv.n - self.n_ion) / self.absorber_width) ** 2
        return prof

    def index_of(self, n: int) -> int:
        """Index of the hydrogenic ladder level ``n`` (the launch level if it is hydrogenic)."""
        for i, lv in enumerate(self.levels):
            if lv.n == n and (not lv.launch or lv.n_eff == n):
                return i
        raise KeyError(n)


def build_basis(species: SpeciesModel, n0: int, margin_below: int, margin_above: int,
                absorber_width: int) -> LevelBasis:
    """Hydrogenic ladder n0-margin_below .. n0+margin_above plus the launch level.

    The launch level has effective quantum number n0 - delta. When the
    defect is an integer (hydrogen in particular) it coincides with a ladder
    level and that level is marked as the launch level instead of adding a
    duplicate.
    """
    delta = species.launch_defect
    n_min = n0 - margin_below
    n_max = n0 + margin_above
    if n_min < max(1, math.ceil(delta) + 1):
        raise ConfigError(f"basis bottom n={n_min} too low for defect {delta}")
    if not margin_above >= absorber_width >= 1:
        raise ConfigError(
            f"need margin_above >= absorber_width >= 1, got {margin_above} and {absorber_width}")
    n_eff0 = n0 - delta
    coincide = abs(n_eff0 - round(n_eff0)) < 1e-12
    if not n_min <= n_eff0:
        raise ConfigError("launch level lies below the basis")
    levels = []
    for n in range(n_min, n_max + 1):
        is_launch = coincide and n == round(n_eff0)
        levels.append(Level(n, float(n), level_energy(n), is_launch))
    if not coincide:
        levels.append(Level(n0, n_eff0, level_energy(n0, delta), True))
    levels.sort(key=lambda lv: lv.energy)
    return LevelBasis(tuple(levels), n_min, n_max, n_max - absorber_width, absorber_width,
                      species.name, n0, delta)


def _dipole_value(n_eff_i: float, n_eff_j: float) -> float:
    p = max(1, abs(math.floor(n_eff_i + 0.5) - math.floor(n_eff_j + 0.5)))
    return DIPOLE_C * n_eff_i * n_eff_j / p**DIPOLE_EXPONENT


def dipole(basis: LevelBasis, i: int, j: int) -> float:
    """Semiclassical dipole element C n_c**2 / p**(5/3) between levels i and j.

    ``n_c`` is the geometric mean of the effective quantum numbers and ``p``
    the difference of their rounded values, floored at 1 so that the launch
    level keeps a finite coupling to the ladder level it rounds onto.
    """
    if i == j:
        raise DomainError("dipole element needs two distinct levels")
    return _dipole_value(basis.levels[i].n_eff, basis.levels[j].n_eff)


def dipole_matrix(basis: LevelBasis) -> np.ndarray:
    """All dipole elements as a symmetric matrix with zero diagonal."""
    ne = basis.n_eff
    rounded = np.floor(ne + 0.5)
    p = np.maximum(1.0, np.abs(rounded[:, None] - rounded[None, :]))
    d = DIPOLE_C * np.outer(ne, ne) / p**DIPOLE_EXPONENT
    np.fill_diagonal(d, 0.0)
    return d
