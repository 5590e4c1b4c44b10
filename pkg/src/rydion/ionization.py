"""Ionization thresholds F(10%), scaled threshold curves, regimes and time scaling."""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import floquet
from .errors import ConvergenceError, DomainError, RydionError
from .species import LevelBasis, SpeciesModel, build_basis
from .units import Frequency, au_to_ghz, scale

TARGET_YIELD = 0.10
BISECTION_RTOL = 1e-3


class Regime(str, enum.Enum):
    I = "I"
    II = "II"
    III = "III"


@dataclass(frozen=True)
class FieldGrid:
    """Field scan in scaled units F0 = F*n0**4."""

    f0_min: float = 0.005
    f0_max: float = 0.5
    points: int = 24
    spacing: str = "log"

    def __post_init__(self):
        if not 0 < self.f0_min < self.f0_max:
            raise DomainError(f"field grid needs 0 < min < max, got {self.f0_min}, {self.f0_max}")
        if self.points < 20:
            raise DomainError(f"field grid needs at least 20 points, got {self.points}")
        if self.spacing not in ("log", "linear"):
            raise DomainError(f"grid spacing must be 'log' or 'linear', got {self.spacing!r}")

    def scaled(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.f0_min, self.f0_max, self.points)
        return np.linspace(self.f0_min, self.f0_max, self.points)

    def fields(self, n0: int) -> np.ndarray:
        return self.scaled() / n0**4


@dataclass(frozen=True)
class Settings:
    """Numerical settings of the reduced model.

    Unset margins follow n0: ``margin_below = max(4, round(0.25*n0))``,
    ``margin_above = round(0.8*n0)`` and ``absorber_width =
    max(4, round(0.4*n0))``; the wide, gentle absorber keeps thresholds
    insensitive to its strength.  The absorber rate is ``absorber_factor*omega``
    and the photon cutoff defaults to the larger of the ionization photon count
    and the photon depth of the lowest level, plus ``photon_guard +
    extra_blocks``; ``photon_blocks_fixed`` pins it instead.
    """

    margin_below: int | None = None
    margin_above: int | None = None
    absorber_width: int | None = None
    absorber_factor: float = 0.1
    photon_guard: int = floquet.PHOTON_GUARD
    extra_blocks: int = 0
    photon_blocks_fixed: int | None = None
    coherent: bool = False

    def margins(self, n0: int, delta: float = 0.0) -> tuple[int, int, int]:
        below = self.margin_below if self.margin_below is not None else max(4, round(0.25 * n0))
        below = min(below, n0 - max(1, math.ceil(delta) + 1))
        above = self.margin_above if self.margin_above is not None else round(0.8 * n0)
        width = self.absorber_width if self.absorber_width is not None else max(4, round(0.4 * n0))
        return below, above, width

    def basis(self, species: SpeciesModel, n0: int) -> LevelBasis:
        return build_basis(species, n0, *self.margins(n0, species.launch_defect))

    def photon_blocks(self, basis: LevelBasis, omega: Frequency) -> int:
        if self.photon_blocks_fixed is not None:
            return self.photon_blocks_fixed + self.extra_blocks
        return floquet.required_photon_blocks(basis, omega, self.photon_guard) + self.extra_blocks

    def absorber_rate(self, omega: Frequency) -> float:
        return self.absorber_factor * omega.value

    def doubled(self, species: SpeciesModel, n0: int, omega: Frequency) -> "Settings":
        """Twice the photon cutoff and twice every basis margin."""
        below, above, width = self.margins(n0, species.launch_defect)
        k = self.photon_blocks(self.basis(species, n0), omega)
        return replace(self, margin_below=2 * below, margin_above=2 * above,
                       absorber_width=2 * width, extra_blocks=self.extra_blocks + k)


DEFAULT_SETTINGS = Settings()


def spectrum(species: SpeciesModel, n0: int, omega: Frequency, fld: float,
             settings: Settings = DEFAULT_SETTINGS) -> floquet.FloquetSpectrum:
    basis = settings.basis(species, n0)
    fm = floquet.build_floquet(basis, omega, fld, settings.photon_blocks(basis, omega),
                               settings.absorber_rate(omega), settings.photon_guard)
    return floquet.central_spectrum(fm)


def survival_probability(species: SpeciesModel, n0: int, omega: Frequency, fld: float,
                         t_periods: float, settings: Settings = DEFAULT_SETTINGS) -> float:
    spec = spectrum(species, n0, omega, fld, settings)
    return floquet.survival(spec, t_periods * omega.period, settings.coherent)


def convergence_delta(species: SpeciesModel, n0: int, omega: Frequency, fld: float,
                      t_periods: float, settings: Settings = DEFAULT_SETTINGS) -> float:
    """Change of P_surv when the photon cutoff and basis margins are doubled."""
    p = survival_probability(species, n0, omega, fld, t_periods, settings)
    p2 = survival_probability(species, n0, omega, fld, t_periods, settings.doubled(species, n0, omega))
    return abs(p2 - p)


@dataclass(frozen=True)
class ThresholdPoint:
    species: str
    n0: int
    omega_lab: float  # GHz
    omega0: float
    f_threshold: float  # a.u.
    f0_threshold: float
    t_interaction: float  # periods
    regime: Regime
    bracket: tuple[float, float]  # a.u.
    evaluations: int = 0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class ThresholdCurve:
    species: str
    omega_lab: float
    t_interaction: float
    points: tuple[ThresholdPoint, ...] = field(default_factory=tuple)

    def __len__(self):
        return len(self.points)

    def rows(self):
        for p in self.points:
            yield p


def extract_threshold(species: SpeciesModel, n0: int, omega: Frequency, t_periods: float,
                      grid: FieldGrid = FieldGrid(), settings: Settings = DEFAULT_SETTINGS,
                      eta: float = 0.5) -> ThresholdPoint:
    """Weakest field giving 10% ionization after ``t_periods`` driving periods.

    The grid is walked upwards until the first point with yield >= 10%; the
    bracketing cell is then bisected (geometric mid-points) until its
    relative width drops below 1e-3.
    """
    if t_periods <= 0:
        raise DomainError("interaction time must be positive")
    count = 0

    def ionizes(f):
        nonlocal count
        count += 1
        p = survival_probability(species, n0, omega, f, t_periods, settings)
        return 1.0 - p >= TARGET_YIELD, 1.0 - p

    fields = grid.fields(n0)
    hit, first_yield = ionizes(fields[0])
    if hit:
        raise DomainError(f"threshold below scan range: F0={grid.f0_min:g} already ionizes "
                          f"{first_yield:.1%} at n0={n0}", yield_at_min=first_yield)
    lo = fields[0]
    hi = None
    best = first_yield
    for f in fields[1:]:
        hit, y = ionizes(f)
        best = max(best, y)
        if hit:
            hi = f
            break
        lo = f
    if hi is None:
        raise DomainError(f"threshold above scan range: max yield {best:.3%} up to F0={grid.f0_max:g} "
                          f"at n0={n0}", max_yield=best)
    while (hi - lo) / hi >= BISECTION_RTOL:
        mid = math.sqrt(lo * hi)
        if ionizes(mid)[0]:
            hi = mid
        else:
            lo = mid
    f_thr = 0.5 * (lo + hi)
    sp_ = scale(omega, f_thr, n0)
    return ThresholdPoint(species.name, n0, au_to_ghz(omega), sp_.omega0, f_thr, sp_.f0, t_periods,
                          classify_regime(species, n0, omega, eta, settings), (lo, hi), count)


def _failed_point(species, n0, omega, t_periods, settings, eta, exc):
    return ThresholdPoint(species.name, n0, au_to_ghz(omega), omega.value * n0**3, math.nan, math.nan,
                          t_periods, classify_regime(species, n0, omega, eta, settings),
                          (math.nan, math.nan), 0, f"{type(exc).__name__}: {exc}")


def _map(fn, tasks, workers):
    # results come back in task order whatever the completion order
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(task) for task in tasks]


def _threshold_task(args):
    species, n0, omega, t_periods, grid, settings, eta = args
    try:
        return extract_threshold(species, n0, omega, t_periods, grid, settings, eta)
    except RydionError as exc:
        return _failed_point(species, n0, omega, t_periods, settings, eta, exc)


def threshold_curve(species: SpeciesModel, n0_list, omega: Frequency, t_periods: float,
                    grid: FieldGrid = FieldGrid(), settings: Settings = DEFAULT_SETTINGS,
                    eta: float = 0.5, workers: int = 1) -> ThresholdCurve:
    """One threshold per n0; failures are kept as annotated points."""
    n0_list = [int(n) for n in n0_list]
    if not n0_list:
        raise DomainError("n0 list is empty")
    if n0_list != sorted(n0_list):
        raise DomainError("n0 list must be sorted")
    tasks = [(species, n0, omega, t_periods, grid, settings, eta) for n0 in n0_list]
    points = _map(_threshold_task, tasks, workers)
    return ThresholdCurve(species.name, au_to_ghz(omega), t_periods, tuple(points))


def upward_gaps(basis: LevelBasis) -> np.ndarray:
    e = basis.energies
    e0 = basis.launch.energy
    return e[e > e0] - e0


def classify_regime(species: SpeciesModel, n0: int, omega: Frequency, eta: float = 0.5,
                    settings: Settings = DEFAULT_SETTINGS) -> Regime:
    """I when omega*n0**3 >= 1; otherwise III unless some level above the launch
    level lies within a one-photon gap of at most (1 + eta)*omega."""
    if omega.value * n0**3 >= 1.0:
        return Regime.I
    gaps = upward_gaps(settings.basis(species, n0))
    if gaps.size == 0 or gaps.min() > (1.0 + eta) * omega.value:
        return Regime.III
    return Regime.II


@dataclass(frozen=True)
class TimeScalingFit:
    gamma: float
    r_squared: float
    t_range: tuple[float, float]
    amplitude: float = math.nan
    thresholds: tuple[float, ...] = ()
    times: tuple[float, ...] = ()


def fit_power_law(t_list, f0_list) -> TimeScalingFit:
    """Least-squares line through (log t, log F0); gamma is minus the slope."""
    t = np.asarray(t_list, float)
    f = np.asarray(f0_list, float)
    if t.size < 4:
        raise DomainError("need at least 4 interaction times")
    if t.max() / t.min() < 10.0:
        raise DomainError("interaction times must span at least one decade")
    x, y = np.log(t), np.log(f)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return TimeScalingFit(float(-slope), r2, (float(t.min()), float(t.max())), float(math.exp(intercept)),
                          tuple(map(float, f)), tuple(map(float, t)))


def fit_time_scaling(species: SpeciesModel, n0: int, omega: Frequency, t_list,
                     grid: FieldGrid = FieldGrid(), settings: Settings = DEFAULT_SETTINGS,
                     workers: int = 1) -> TimeScalingFit:
    t_list = [float(t) for t in t_list]
    if len(t_list) < 4 or max(t_list) / min(t_list) < 10.0:
        raise DomainError("need at least 4 interaction times spanning a decade")
    tasks = [(species, n0, omega, t, grid, settings, 0.5) for t in t_list]
    points = _map(_threshold_task, tasks, workers)
    failed = [(p.t_interaction, p.error) for p in points if not p.ok]
    if failed:
        raise ConvergenceError("threshold extraction failed at t = " + ", ".join(f"{t:g}" for t, _ in failed),
                               failed=failed)
    return fit_power_law(t_list, [p.f0_threshold for p in points])
