"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line with the measured quantity; the lines are
printed at the end of the pytest run (see conftest.py) or, when this file is
run as a script, as each criterion finishes.
"""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.constants import c, hbar

sys.path.insert(0, str(Path(__file__).parent))

from casimir_si.analysis import analyze  # noqa: E402
from casimir_si.electrostatics import fit_calibration, synthesize_sweep  # noqa: E402
from casimir_si.lifshitz import Geometry, RoughnessProfile, force_curve, lifshitz_force, separation_grid  # noqa: E402
from casimir_si.materials import (  # noqa: E402
    GOLD_DRUDE, ConstantPermittivity, OpticalDataTable, drude_eps_imag_axis, gold_model,
    kramers_kronig_imag_axis, plasma_frequency_from_resistivity, silicon_model,
)
from casimir_si.pipeline import (  # noqa: E402
    DEFAULT_SYSTEMATICS, SynthesisSpec, TheoryModel, default_roughness, synthesize_ensemble,
)
from casimir_si.stats import (  # noqa: E402
    combine_random_systematic, compose_uniform_systematics, experimental_error_budget, random_error_student,
    theoretical_error_budget,
)
from oracles import all_subsets, convolution_quantile  # noqa: E402

RESULTS = {}
R = 101.3e-6
PN = 1e-12


def record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    if __name__ == "__main__":
        print(line, flush=True)
    return ok


def test_criterion_01_ideal_metal_oracle():
    t0 = time.perf_counter()
    z = np.linspace(62e-9, 600e-9, 10)
    big = ConstantPermittivity(1e12)
    F = force_curve(z, Geometry(R), big, big).F
    oracle = math.pi**3 * hbar * c * R / (360 * z**3)
    err = float(np.max(np.abs(F / oracle - 1)))
    dt = time.perf_counter() - t0
    ok = err < 1e-3 and dt < 10
    record(1, ok, f"max |F/F_ideal - 1| = {err:.2e} (tol 1e-3), {dt:.2f} s (limit 10 s)")
    assert ok


def test_criterion_02_drude_dispersion_oracle():
    t0 = time.perf_counter()
    om = np.logspace(9, 18, 9 * 200 + 1)
    table = OpticalDataTable(om, GOLD_DRUDE.eps_im_real_axis(om), "drude")
    xi = np.geomspace(1e13, 1e16, 100)
    eps = kramers_kronig_imag_axis(table, xi, GOLD_DRUDE, "drude_tail", "power_law")
    err = float(np.max(np.abs(eps / drude_eps_imag_axis(GOLD_DRUDE, xi) - 1)))
    dt = time.perf_counter() - t0
    ok = err < 5e-3 and dt < 5
    record(2, ok, f"max rel. deviation = {err:.2e} (tol 5e-3), {dt:.2f} s (limit 5 s)")
    assert ok


def test_criterion_03_plasma_frequency():
    wp = plasma_frequency_from_resistivity(0.0035, 1e-13)
    ok = abs(wp / 6.37e14 - 1) <= 0.01
    record(3, ok, f"omega_p = {wp:.4e} rad/s (target 6.37e14 +- 1%)")
    assert ok


def test_criterion_04_plasma_frequency_insensitivity():
    z = SynthesisSpec().z
    base = TheoryModel.gold_silicon().curve(z)
    sphere, plate = default_roughness()
    scaled = TheoryModel(gold_model(), silicon_model(omega_p_scale=1.5),
                         rough_sphere=sphere, rough_plate=plate).curve(z)
    change = np.abs(scaled.F / base.F - 1)
    worst = int(np.argmax(change))
    ok = bool(np.all(change < 0.01))
    record(4, ok, f"max force change = {100 * change[worst]:.2f}% at {z[worst] * 1e9:.1f} nm, "
                  f"{100 * change[0]:.2f}% at {z[0] * 1e9:.2f} nm (limit 1% everywhere in 62-600 nm)")
    assert ok


def test_criterion_05_error_budget():
    t0 = time.perf_counter()
    syst = compose_uniform_systematics([a for _, a in DEFAULT_SYSTEMATICS])
    rand = random_error_student(1.5 * PN, 65)
    total = combine_random_systematic(rand, syst, 1.5 * PN)
    budget = experimental_error_budget(1.5 * PN, 65, DEFAULT_SYSTEMATICS)
    dt = time.perf_counter() - t0
    ok = (abs(syst - 1.15 * PN) <= 0.05 * PN and abs(rand / (3.0 * PN) - 1) <= 0.01
          and abs(total - 3.33 * PN) <= 0.05 * PN and budget.delta_total == total and dt < 1)
    record(5, ok, f"syst = {syst / PN:.4f} pN (1.15+-0.05), rand = {rand / PN:.4f} pN (3.0+-1%), "
                  f"total = {total / PN:.4f} pN (3.33+-0.05), {dt * 1e3:.1f} ms")
    assert ok


def test_criterion_06_uniform_composition_vs_convolution():
    comps = [round(a / PN, 12) for _, a in DEFAULT_SYSTEMATICS]
    worst, worst_set = 0.0, None
    for subset in all_subsets(comps):
        rel = abs(compose_uniform_systematics(subset) / convolution_quantile(subset) - 1)
        if rel > worst:
            worst, worst_set = rel, subset
    ok = worst <= 0.06
    record(6, ok, f"worst k-rule deviation = {100 * worst:.1f}% for {worst_set} pN (limit 6%)")
    assert ok


def test_criterion_07_input_data_error():
    d3 = theoretical_error_budget(62.33e-9, R, 0.15e-6, 0.8e-9).delta3
    ok = abs(d3 - 0.040) <= 0.001
    record(7, ok, f"delta3 = {100 * d3:.4f}% (target 4.0 +- 0.1%)")
    assert ok


def test_criterion_08_calibration_round_trip():
    t0 = time.perf_counter()
    fit = fit_calibration(synthesize_sweep(32.1e-9, -0.114, R, repeats=1), R, n_bootstrap=0)
    ez, ev = abs(fit.z0 / 32.1e-9 - 1), abs(fit.V0 / -0.114 - 1)
    rng = np.random.default_rng(8)
    z0s = [fit_calibration(synthesize_sweep(32.1e-9, -0.114, R, noise=1.5 * PN, rng=rng), R, n_bootstrap=0).z0
           for _ in range(100)]
    lo, hi = np.percentile(z0s, [2.5, 97.5])
    half = 0.5 * (hi - lo)
    dt = time.perf_counter() - t0
    ok = ez <= 1e-6 and ev <= 1e-6 and half <= 0.8e-9 and dt < 60
    record(8, ok, f"noiseless rel. error z0 {ez:.1e}, V0 {ev:.1e} (tol 1e-6); "
                  f"noisy 95% half-width {half * 1e9:.4f} nm (limit 0.8 nm); {dt:.1f} s (limit 60 s)")
    assert ok


def test_criterion_09_force_ratio():
    z = separation_grid(62.33e-9, 200.0e-9, 0.17e-9)
    g = Geometry(R)
    au, si = gold_model(), silicon_model()
    ratio = lifshitz_force(z, g, au, si) / lifshitz_force(z, g, au, au)
    r200 = float(lifshitz_force(200e-9, g, au, si) / lifshitz_force(200e-9, g, au, au))
    dec = bool(np.all(np.diff(ratio) < 0))
    ok = abs(ratio[0] - 0.74) <= 0.05 and abs(r200 - 0.63) <= 0.05 and dec
    record(9, ok, f"ratio {ratio[0]:.4f} at 62.33 nm (0.74+-0.05), {r200:.4f} at 200 nm (0.63+-0.05), "
                  f"strictly decreasing over {z.size} points: {dec}")
    assert ok


def test_criterion_10_null_coverage():
    t0 = time.perf_counter()
    theory = TheoryModel.gold_silicon().curve(SynthesisSpec().z)
    fractions = []
    for seed in range(50):
        ens = synthesize_ensemble(SynthesisSpec(n_sets=65, noise_sigma=12 * PN, rng_seed=seed), theory)
        fractions.append(analyze(ens, theory).report.fraction_within)
    dt = time.perf_counter() - t0
    ok = min(fractions) >= 0.90 and dt < 300
    record(10, ok, f"fraction within envelope: min {min(fractions):.4f}, mean {np.mean(fractions):.4f} "
                   f"over 50 seeds (limit 0.90); {dt:.1f} s (limit 300 s)")
    assert ok


def test_criterion_11_roughness_double_sum():
    g = Geometry(R)
    au, si = gold_model(), silicon_model()
    rng = np.random.default_rng(11)
    worst = 0.0
    for n1, n2 in [(1, 1), (3, 7), (10, 10), (10, 4)]:
        profs = []
        for n in (n1, n2):
            w = rng.uniform(0.1, 1.0, n)
            w /= w.sum()
            w[-1] = 1.0 - math.fsum(w[:-1])
            profs.append(RoughnessProfile(tuple(zip(w, rng.uniform(0, 20e-9, n)))))
        z = rng.uniform(70e-9, 400e-9)
        fast = force_curve(np.array([z]), g, au, si, rough1=profs[0], rough2=profs[1]).F[0]
        brute = 0.0
        for v1, h1 in profs[0].entries:
            for v2, h2 in profs[1].entries:
                brute += v1 * v2 * lifshitz_force(z + profs[0].zero_level + profs[1].zero_level - h1 - h2, g, au, si)
        worst = max(worst, abs(fast / brute - 1))
    ok = worst <= 1e-12
    record(11, ok, f"max rel. difference vs brute-force double sum = {worst:.1e} (quadrature tol 1e-6; limit 1e-12)")
    assert ok


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_criterion_")):
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
