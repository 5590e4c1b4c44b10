"""Acceptance criteria; each test prints one PASS/FAIL line with the measured numbers."""
import math
import subprocess
import sys

import numpy as np
import pytest

from rydion import anderson as an
from rydion import floquet, ionization as ion, oracle
from rydion.errors import ConvergenceError
from rydion.species import build_basis, get_species
from rydion.units import ghz_to_au, photon_number, scale

from .test_cli import SHIPPED

W36 = ghz_to_au(36)
SPECIES = ("H", "Li", "Na", "Rb")
T = 327


def f0(species, n0, omega=W36, t=T, settings=ion.DEFAULT_SETTINGS):
    return ion.extract_threshold(get_species(species), n0, omega, t, settings=settings).f0_threshold


def test_1_photon_numbers(report):
    a, b = photon_number(25, 0, W36), photon_number(100, 0, W36)
    report(1, 140 <= a <= 155 and 9 <= b <= 11, f"photon_number(25)={a} in [140,155], photon_number(100)={b} in [9,11]")


def test_2_scaling_anchor(report):
    w0 = scale(ghz_to_au(12.6), 0.0, 89).omega0
    report(2, abs(w0 - 1.35) <= 0.05, f"omega0(12.6 GHz, n0=89)={w0:.4f}, target 1.35 +- 0.05")


def test_3_zero_field(report):
    worst_p, worst_rate = 0.0, math.inf
    for name in SPECIES:
        for n0 in (28, 57, 80):
            b = ion.DEFAULT_SETTINGS.basis(get_species(name), n0)
            fm = floquet.build_floquet(b, W36, 0.0, ion.DEFAULT_SETTINGS.photon_blocks(b, W36))
            spec = floquet.central_spectrum(fm)
            worst_p = max(worst_p, abs(floquet.survival(spec, T * W36.period) - 1))
            worst_rate = min(worst_rate, spec.rates.min())
    report(3, worst_p <= 1e-10 and worst_rate >= -1e-10,
           f"max |P(327T;F=0)-1|={worst_p:.1e} (<=1e-10), min Gamma={worst_rate:.1e} (>=-1e-10)")


def _oracle_final(basis, f, t):
    steps = oracle.MIN_STEPS_PER_PERIOD
    while True:
        try:
            return oracle.propagate(basis, W36, f, t, steps).final, steps
        except ConvergenceError:
            if steps >= 4096:
                raise
            steps *= 2


def _central(basis, f):
    """Central spectrum at the smallest admissible cutoff, grown while the zone is truncated."""
    K = floquet.required_photon_blocks(basis, W36)
    for _ in range(4):
        try:
            return floquet.central_spectrum(floquet.build_floquet(basis, W36, f, K)), K
        except ConvergenceError:
            K += 30
    return floquet.central_spectrum(floquet.build_floquet(basis, W36, f, K)), K


def test_4_oracle_equivalence(report):
    # H ladder n = 20 ... 44 (n0 = 30); K starts at the smallest admissible cutoff, see the ledger
    basis = build_basis(get_species("H"), 30, 10, 14, 6)
    t = T * W36.period
    worst, rows = 0.0, []
    for f0_ in np.geomspace(0.005, 0.5, 5):
        f = f0_ / 30**4
        spec, K = _central(basis, f)
        p_fl = floquet.survival(spec, t, coherent=True)
        p_or, steps = _oracle_final(basis, f, t)
        worst = max(worst, abs(p_fl - p_or))
        rows.append(f"F0={f0_:.3g}:P={p_or:.4f},K={K}")
    report(4, worst <= 2e-3, f"max |P_floquet-P_oracle|={worst:.2e} (<=2e-3); {' '.join(rows)}")


def test_5_universality(report):
    n0 = 65  # omega0 = 1.50 at 36 GHz
    vals = {name: f0(name, n0) for name in SPECIES}
    v = np.array(list(vals.values()))
    spread = (v.max() - v.min()) / v.mean()
    detail = ", ".join(f"{k}={x:.4f}" for k, x in vals.items())
    report(5, spread <= 0.30, f"omega0={W36.value * n0**3:.2f}: F0 {detail}; (max-min)/mean={spread:.3f} (<=0.30)")


def test_6_regime_ii_separation(report):
    n0 = 38  # omega0 = 0.30 at 36 GHz
    vals = {name: f0(name, n0) for name in SPECIES}
    ratios = {k: vals["H"] / vals[k] for k in SPECIES[1:]}
    detail = ", ".join(f"{k}={x:.4f}" for k, x in vals.items())
    report(6, min(ratios.values()) >= 3.0,
           f"omega0={W36.value * n0**3:.2f}: F0 {detail}; min H/alkali={min(ratios.values()):.2f} (>=3)")


def test_7_time_scaling(report):
    times = [100, 327, 1000, 3270]
    fit = ion.fit_time_scaling(get_species("H"), 40, W36, times)
    mono = all(a >= b for a, b in zip(fit.thresholds, fit.thresholds[1:]))
    report(7, mono and fit.gamma > 0 and fit.r_squared >= 0.9,
           f"F0(t)={', '.join(f'{x:.4f}' for x in fit.thresholds)} nonincreasing={mono}; "
           f"gamma={fit.gamma:.4f} (>0), r2={fit.r_squared:.4f} (>=0.9)")


def test_8_scaled_invariance(report):
    a = f0("H", 60)
    b = f0("H", 96, omega=ghz_to_au(8.867))
    rel = abs(a - b) / max(a, b)
    report(8, rel <= 0.25 and b <= a,
           f"F0(36 GHz, n0=60)={a:.4f}, F0(8.867 GHz, n0=96)={b:.4f}; rel diff={rel:.3f} (<=0.25), larger n0 not larger={b <= a}")


def test_9_anderson(report):
    clean = an.localization_length(an.chain_from_arrays(np.zeros(200), np.ones(199)))
    rng = np.random.default_rng(20240601)
    base = [an.disorder_chain(200, 4.0, rng) for _ in range(50)]
    means = [float(np.mean([an.localization_length(c.scaled(lam)).xi for c in base])) for lam in (1.0, 1.25, 1.5, 2.0)]
    monotone = all(x <= y for x, y in zip(means, means[1:]))
    tm, env = [], []
    for _ in range(100):
        c = an.disorder_chain(200, 4.0, rng)
        tm.append(an.localization_length(c).xi)
        env.append(an.envelope_fit_xi(c.hamiltonian(), 0.5))
    rel = abs(np.mean(tm) / np.mean(env) - 1)
    report(9, clean.extended and monotone and rel <= 0.15,
           f"clean extended={clean.extended}; mean xi vs V scale {', '.join(f'{m:.2f}' for m in means)} "
           f"nondecreasing={monotone}; xi_TM={np.mean(tm):.2f} vs envelope {np.mean(env):.2f}, rel={rel:.3f} (<=0.15)")


def test_10_robustness(report):
    cases = [("H", 57), ("Rb", 65), ("H", 40)]
    worst_abs, parts = 0.0, []
    for name, n0 in cases:
        base = f0(name, n0)
        for factor in (0.05, 0.2):
            other = f0(name, n0, settings=ion.Settings(absorber_factor=factor))
            worst_abs = max(worst_abs, abs(other / base - 1))
        parts.append(f"{name}{n0}")
    sp = get_species("H")
    f_thr = ion.extract_threshold(sp, 57, W36, T).f_threshold
    delta = ion.convergence_delta(sp, 57, W36, f_thr, T)
    report(10, worst_abs < 0.05 and delta < 1e-3,
           f"absorber x2 and /2 on {'/'.join(parts)}: max |dF/F|={worst_abs:.3f} (<0.05); "
           f"doubling K and margins at H57 threshold: |dP|={delta:.2e} (<1e-3)")


def test_11_determinism(report, tmp_path):
    outs = []
    for i, workers in enumerate(("1", "2")):
        d = tmp_path / f"run{i}"
        subprocess.run([sys.executable, "-m", "rydion.cli", "curve", "--config", str(SHIPPED), "--out", str(d),
                        "--workers", workers], check=True, capture_output=True)
        outs.append((d / "curve.csv").read_bytes())
    n_rows = outs[0].count(b"\r\n") - 1
    report(11, outs[0] == outs[1] and n_rows == 14,
           f"two curve runs of the shipped config ({n_rows} rows, workers 1 and 2): byte-identical={outs[0] == outs[1]}")
