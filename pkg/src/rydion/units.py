"""Atomic-unit conversions, Coulomb scaling and photon counting.

Everything inside the package works in atomic units; laboratory units
(GHz) appear only at the I/O boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

# CODATA 2018: atomic unit of time is hbar/E_h = 2.4188843265857e-17 s,
# so the atomic unit of angular frequency is its inverse.
AU_TIME_S = 2.4188843265857e-17
AU_ANGULAR_FREQUENCY = 1.0 / AU_TIME_S  # 4.134137333518e16 s^-1
# Atomic unit of electric field, V/m (CODATA 2018).
AU_FIELD_V_PER_M = 5.14220674763e11


@dataclass(frozen=True)
class Frequency:
    """Angular frequency in atomic units."""

    value: float

    def __post_init__(self):
        if not (self.value > 0 and math.isfinite(self.value)):
            raise DomainError(f"frequency must be positive, got {self.value!r}")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.value

    @property
    def ghz(self) -> float:
        return au_to_ghz(self)


@dataclass(frozen=True)
class ScaledParams:
    omega0: float
    f0: float


def ghz_to_au(f_ghz: float) -> Frequency:
    """Convert a laboratory frequency nu (GHz) to omega = 2 pi nu in atomic units."""
    if not f_ghz > 0:
        raise DomainError(f"frequency in GHz must be positive, got {f_ghz!r}")
    return Frequency(2.0 * math.pi * f_ghz * 1e9 / AU_ANGULAR_FREQUENCY)


def au_to_ghz(omega: Frequency | float) -> float:
    value = omega.value if isinstance(omega, Frequency) else float(omega)
    return value * AU_ANGULAR_FREQUENCY / (2.0 * math.pi * 1e9)


def _omega_value(omega) -> float:
    return omega.value if isinstance(omega, Frequency) else Frequency(float(omega)).value


def scale(omega: Frequency | float, field: float, n0: int) -> ScaledParams:
    """Scaled frequency omega*n0**3 and scaled field F*n0**4."""
    if n0 < 1:
        raise DomainError(f"n0 must be >= 1, got {n0}")
    if field < 0:
        raise DomainError(f"field must be non-negative, got {field}")
    return ScaledParams(_omega_value(omega) * n0**3, field * n0**4)


def unscale_field(f0: float, n0: int) -> float:
    return f0 / n0**4


def omega_for_scaled(omega0: float, n0: int) -> Frequency:
    return Frequency(omega0 / n0**3)


def photon_number(n0: int, delta: float, omega: Frequency | float) -> int:
    """Minimal number of photons lifting the level n0 - delta to E >= 0."""
    if n0 <= delta:
        raise DomainError(f"n0={n0} must exceed the quantum defect {delta}")
    binding = 0.5 / (n0 - delta) ** 2
    return math.ceil(binding / _omega_value(omega))
