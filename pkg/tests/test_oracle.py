import math

import numpy as np
import pytest

from rydion import oracle
from rydion.errors import DomainError
from rydion.species import build_basis, dipole, get_species
from rydion.units import Frequency


def damped_rabi(t, rabi, gamma):
    """Closed-form resonant two-level survival (rotating wave) with decay rate gamma on the upper level."""
    mu = math.sqrt(rabi**2 / 4 - gamma**2 / 16)
    c1 = np.exp(-gamma * t / 4) * (np.cos(mu * t) + gamma / (4 * mu) * np.sin(mu * t))
    c2 = rabi / (2 * mu) * np.exp(-gamma * t / 4) * np.sin(mu * t)
    return np.abs(c1) ** 2 + np.abs(c2) ** 2


def test_zero_field(small_h, w36):
    r = oracle.propagate(small_h, w36, 0.0, 327 * w36.period)
    assert np.abs(r.survival - 1).max() <= 1e-10
    assert np.abs(r.norm_leak).max() <= 1e-10


def test_damped_two_level():
    b = build_basis(get_species("H"), 60, 0, 1, 1)  # n = 60, 61 with the upper level absorbing
    w = Frequency(b.energies[1] - b.energies[0])
    # weak drive keeps counter-rotating corrections at O((rabi/omega)**2) on integer periods
    rabi = 1e-4 * w.value
    r = oracle.propagate(b, w, rabi / dipole(b, 0, 1), 3000 * w.period, 2048, absorber_rate=rabi)
    assert np.abs(r.survival - damped_rabi(r.times, rabi, rabi)).max() <= 1e-6


def test_norm_accounting(small_h, w36):
    r = oracle.propagate(small_h, w36, 0.05 / 30**4, 327 * w36.period)
    assert np.all((r.survival >= 0) & (r.survival <= 1))
    assert np.all(np.diff(r.survival) <= 1e-9)
    assert np.abs(r.interior + r.edge + r.norm_leak - 1).max() <= 1e-8
    assert r.step_halving_delta <= oracle.STEP_HALVING_TOL


def test_per_step_equals_period_product(small_h, w36):
    f = 0.04 / 30**4
    a = oracle.propagate(small_h, w36, f, 20 * w36.period, check=False)
    b = oracle.propagate(small_h, w36, f, 20 * w36.period, check=False, per_step=True)
    assert np.abs(a.survival - b.survival).max() < 1e-12


def test_time_reversal(small_h, w36):
    psi0 = np.zeros(len(small_h), complex)
    psi0[small_h.launch_index] = 1.0
    t = 5 * w36.period
    fwd = oracle.evolve(small_h, psi0, w36, 0.0, t)
    back = oracle.evolve(small_h, fwd, w36, 0.0, t, backward=True)
    assert np.abs(back - psi0).max() <= 1e-10


def test_driven_reversal(small_h, w36):
    # closed system: forward then backward with the drive on also returns the state
    psi0 = np.zeros(len(small_h), complex)
    psi0[small_h.launch_index] = 1.0
    t = 3 * w36.period
    fwd = oracle.evolve(small_h, psi0, w36, 0.05 / 30**4, t)
    back = oracle.evolve(small_h, fwd, w36, 0.05 / 30**4, t, backward=True)
    assert np.abs(back - psi0).max() <= 1e-9


@pytest.mark.parametrize("kw", [{"dt_per_period": 128}, {"field": -1.0}, {"t_final": -1.0}])
def test_preconditions(small_h, w36, kw):
    args = {"field": 1e-9, "t_final": 1e4, "dt_per_period": 256} | kw
    with pytest.raises(DomainError):
        oracle.propagate(small_h, w36, args["field"], args["t_final"], args["dt_per_period"])


def test_dimension_limit(w36):
    big = build_basis(get_species("H"), 150, 40, 170, 10)
    assert len(big) > oracle.MAX_ORACLE_LEVELS
    with pytest.raises(DomainError):
        oracle.propagate(big, w36, 0.0, 1.0)
