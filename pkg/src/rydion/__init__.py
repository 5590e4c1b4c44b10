"""Reduced-model microwave ionization of Rydberg atoms: Floquet thresholds, a
propagation oracle and an Anderson-chain picture of the photon ladder."""

from importlib.metadata import PackageNotFoundError, version

from .errors import ConfigError, ConvergenceError, DomainError, RydionError
from .species import build_basis, get_species
from .units import Frequency, ghz_to_au, photon_number, scale

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "ConfigError", "ConvergenceError", "DomainError", "RydionError", "Frequency",
    "build_basis", "get_species", "ghz_to_au", "photon_number", "scale", "__version__",
]
