import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.constants import c, hbar

from casimir_si.lifshitz import (
    ForceCurve, Geometry, QuadratureError, QuadratureSpec, RoughnessError, RoughnessProfile, force_curve,
    ideal_metal_force, lifshitz_force, reflection_coeffs, roughness_corrected_force, separation_grid,
)
from casimir_si.materials import GOLD_DRUDE, ConstantPermittivity, DielectricModel, DrudeParams

R = 101.3e-6
GEOM = Geometry(R)
DRUDE_AU = DielectricModel(drude=GOLD_DRUDE)
DRUDE_SI = DielectricModel(drude=DrudeParams(6.37e14, 1e13))


def oracle_force(z, m1, m2):
    """Force magnitude from the original (k_perp, xi) double integral, scaled by z."""

    def integrand(kt, xt):
        xi = xt * c / z
        q = math.hypot(kt, xt)
        e1, e2 = float(m1.eps_imag_axis(xi)), float(m2.eps_imag_axis(xi))
        k1, k2 = math.sqrt(kt * kt + e1 * xt * xt), math.sqrt(kt * kt + e2 * xt * xt)
        rp = (e1 * q - k1) / (e1 * q + k1) * (e2 * q - k2) / (e2 * q + k2)
        rs = (k1 - q) / (k1 + q) * (k2 - q) / (k2 + q)
        ex = math.exp(-2 * q)
        return kt * (math.log1p(-rp * ex) + math.log1p(-rs * ex))

    val, _ = integrate.dblquad(integrand, 0, 25, 0, 25, epsabs=1e-12, epsrel=1e-10)
    return -hbar * c * R / (2 * math.pi * z**3) * val


@pytest.mark.parametrize("z", [80e-9, 300e-9])
def test_matches_independent_double_integral(z):
    assert lifshitz_force(z, GEOM, DRUDE_AU, DRUDE_SI) == pytest.approx(oracle_force(z, DRUDE_AU, DRUDE_SI), rel=1e-5)


def test_ideal_metal_limit():
    z = np.linspace(62e-9, 600e-9, 10)
    big = ConstantPermittivity(1e12)
    F = lifshitz_force(z, GEOM, big, big)
    assert np.max(np.abs(F / ideal_metal_force(z, R) - 1)) < 1e-4


def test_ideal_closed_form_value():
    expected = math.pi**3 * hbar * c * R / (360 * (100e-9) ** 3)
    assert ideal_metal_force(100e-9, R) == pytest.approx(expected, rel=1e-15)
    assert ideal_metal_force(100e-9, R) == pytest.approx(2.76e-10, rel=2e-3)


def test_ideal_curve_scales_as_inverse_cube():
    z = np.geomspace(62e-9, 600e-9, 12)
    big = ConstantPermittivity(1e12)
    slope = np.polyfit(np.log(z), np.log(lifshitz_force(z, GEOM, big, big)), 1)[0]
    assert slope == pytest.approx(-3.0, abs=1e-4)


def test_real_materials_fall_slower_than_inverse_cube(gold, silicon):
    z = np.geomspace(100e-9, 600e-9, 6)
    F = lifshitz_force(z, GEOM, gold, silicon)
    slope = np.polyfit(np.log(z), np.log(F), 1)[0]
    assert -3.0 < slope < -2.0
    assert np.all(np.diff(F / ideal_metal_force(z, R)) > 0)


def test_symmetric_in_materials(gold, silicon):
    z = np.array([70e-9, 250e-9])
    assert np.allclose(lifshitz_force(z, GEOM, gold, silicon), lifshitz_force(z, GEOM, silicon, gold), rtol=1e-13)


def test_linear_in_radius(gold, silicon):
    a = lifshitz_force(150e-9, Geometry(R), gold, silicon)
    b = lifshitz_force(150e-9, Geometry(2 * R), gold, silicon)
    assert b == pytest.approx(2 * a, rel=1e-14)


def test_weaker_than_ideal_and_silicon_weaker_than_gold(gold, silicon):
    z = np.array([62.33e-9, 200e-9, 600e-9])
    au_si = lifshitz_force(z, GEOM, gold, silicon)
    au_au = lifshitz_force(z, GEOM, gold, gold)
    assert np.all(au_si < au_au) and np.all(au_au < ideal_metal_force(z, R))


def test_reflection_limits():
    xi, k = 1e15, np.array([0.0, 1e6, 1e8])
    (p1, p2), (s1, s2) = reflection_coeffs(1.0, 1.0, k, xi)
    assert np.allclose(p1, 0) and np.allclose(s1, 0)
    (p1, _), (s1, _) = reflection_coeffs(1e14, 1e14, k, xi)
    assert np.allclose(p1, 1, atol=1e-6) and np.all(s1 > 0.99)
    (p1, _), (s1, _) = reflection_coeffs(5.0, 5.0, 0.0, xi)
    assert p1 == pytest.approx(s1, rel=1e-14)
    with pytest.raises(ValueError):
        reflection_coeffs(0.5, 2.0, k, xi)


def test_reflection_agrees_with_scaled_variables():
    z, y, t, eps = 100e-9, 3.0, 0.4, 7.0
    q = y / (2 * z)
    xi = c * q * t
    kp = q * math.sqrt(1 - t * t)
    (p1, _), (s1, _) = reflection_coeffs(eps, eps, kp, xi)
    s = math.sqrt(1 + (eps - 1) * t * t)
    assert p1 == pytest.approx((eps - s) / (eps + s), rel=1e-12)
    assert s1 == pytest.approx((s - 1) / (s + 1), rel=1e-12)


def test_unconverged_quadrature_raises(gold, silicon):
    with pytest.raises(QuadratureError) as info:
        lifshitz_force(100e-9, GEOM, gold, silicon, QuadratureSpec(rel_tol=1e-14, max_panel_depth=1))
    assert info.value.estimate.size == 1 and np.all(info.value.error_bound > 0)


@pytest.mark.parametrize("kw", [{"rel_tol": 0.0}, {"rel_tol": 0.1}, {"xi_cutoff_factor": 5},
                                {"max_panel_depth": 0}])
def test_quadrature_spec_validation(kw):
    with pytest.raises(ValueError):
        QuadratureSpec(**kw)


def test_geometry_validation():
    with pytest.raises(ValueError):
        Geometry(0.0)
    with pytest.raises(ValueError):
        Geometry(1e-6, -1e-9)


def test_nonpositive_separation_rejected(gold):
    with pytest.raises(ValueError):
        lifshitz_force([1e-7, -1e-9], GEOM, gold, gold)


# -- roughness ---------------------------------------------------------------


def brute_force_roughness(z, m1, m2, p1, p2):
    total = 0.0
    for v1, h1 in p1.entries:
        for v2, h2 in p2.entries:
            zz = z + p1.zero_level + p2.zero_level - h1 - h2
            total += v1 * v2 * lifshitz_force(zz, GEOM, m1, m2)
    return total


def profiles(max_size=10):
    @st.composite
    def build(draw):
        n = draw(st.integers(1, max_size))
        w = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n)))
        h = draw(st.lists(st.floats(0.0, 20e-9), min_size=n, max_size=n))
        w = w / w.sum()
        w[-1] = 1.0 - math.fsum(w[:-1])
        return RoughnessProfile(tuple(zip(w, h)))
    return build()


@settings(max_examples=15, deadline=None)
@given(p1=profiles(), p2=profiles(), z=st.floats(70e-9, 400e-9))
def test_roughness_matches_brute_force_double_sum(gold, silicon, p1, p2, z):
    fast = roughness_corrected_force(z, GEOM, gold, silicon, p1, p2)
    assert fast == pytest.approx(brute_force_roughness(z, gold, silicon, p1, p2), rel=1e-12)


def test_flat_profiles_reduce_to_smooth(gold, silicon):
    z = np.array([80e-9, 300e-9])
    smooth = lifshitz_force(z, GEOM, gold, silicon)
    for h in (0.0, 5e-9):
        flat = RoughnessProfile.flat(h)
        assert np.allclose(roughness_corrected_force(z, GEOM, gold, silicon, flat, flat), smooth, rtol=1e-14)


def test_roughness_increases_force(gold, silicon, roughness):
    z = np.array([62.33e-9, 100e-9, 300e-9])
    rough = roughness_corrected_force(z, GEOM, gold, silicon, *roughness)
    assert np.all(rough > lifshitz_force(z, GEOM, gold, silicon))


def test_contact_raises(gold, silicon, roughness):
    with pytest.raises(RoughnessError):
        roughness_corrected_force(5e-9, GEOM, gold, silicon, *roughness)


@pytest.mark.parametrize("entries", [((0.5, 1e-9), (0.4, 2e-9)), ((1.0, -1e-9),), ((0.0, 1e-9), (1.0, 0.0)), ()])
def test_profile_validation(entries):
    with pytest.raises(ValueError):
        RoughnessProfile(entries)


def test_default_zero_levels(roughness):
    sphere, plate = roughness
    assert sphere.zero_level == pytest.approx(15.35e-9, rel=1e-12)
    assert plate.zero_level == pytest.approx(0.545e-9, rel=1e-12)


def test_profile_round_trip(tmp_path, roughness):
    p = tmp_path / "sphere.csv"
    roughness[0].save(p)
    back = RoughnessProfile.load(p)
    assert back.body == "sphere"
    assert np.allclose(back.heights, roughness[0].heights, rtol=1e-15)
    assert np.array_equal(back.fractions, roughness[0].fractions)


def test_profile_malformed_row(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("fraction,height_nm\n0.5,1\n0.5;2\n")
    with pytest.raises(ValueError, match=r"r.csv:3"):
        RoughnessProfile.load(p)


# -- curves --------------------------------------------------------------------


def test_full_grid_has_3164_points(reference_theory):
    assert len(reference_theory) == 3164
    assert reference_theory.provenance == "roughness_corrected"
    assert np.all(np.diff(reference_theory.F) < 0)


def test_separation_grid():
    z = separation_grid(62.33e-9, 600.04e-9, 0.17e-9)
    assert z.size == 3164 and z[-1] == pytest.approx(600.04e-9, rel=1e-12)
    with pytest.raises(ValueError):
        separation_grid(1e-7, 2e-7, 0.0)


def test_interpolated_curve_matches_direct(gold, silicon, roughness):
    z = separation_grid(62.33e-9, 600e-9, 13.4e-9)
    fast = force_curve(z, GEOM, gold, silicon, rough1=roughness[0], rough2=roughness[1], interpolate=True)
    slow = force_curve(z, GEOM, gold, silicon, rough1=roughness[0], rough2=roughness[1])
    assert np.max(np.abs(fast.F / slow.F - 1)) < 1e-5


def test_threads_do_not_change_results(gold, silicon):
    z = np.linspace(70e-9, 500e-9, 23)
    a = force_curve(z, GEOM, gold, silicon, threads=1)
    b = force_curve(z, GEOM, gold, silicon, threads=3)
    assert np.array_equal(a.F, b.F)


def test_curve_provenances(gold, silicon, roughness):
    z = np.array([100e-9, 200e-9])
    assert force_curve(z, GEOM, ideal=True).provenance == "ideal_metal"
    assert force_curve(z, GEOM, gold, silicon).provenance == "smooth"
    with pytest.raises(ValueError):
        force_curve(z, GEOM, gold, silicon, rough1=roughness[0])
    with pytest.raises(ValueError):
        force_curve(z[::-1], GEOM, ideal=True)


def test_force_curve_csv_round_trip(tmp_path):
    z = np.array([100e-9, 200e-9, 300e-9])
    curve = force_curve(z, GEOM, ideal=True)
    p = tmp_path / "f.csv"
    curve.to_csv(p)
    back = ForceCurve.from_csv(p)
    assert back.provenance == "ideal_metal"
    assert np.allclose(back.F, curve.F, rtol=1e-9) and np.allclose(back.z, z, rtol=1e-12)
