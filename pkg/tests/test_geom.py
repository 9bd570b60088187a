import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specshare import geom
from specshare.errors import DomainError
from specshare.geom import Footprint, OrbitSpec

from oracles import mc_cap_overlap, unit_vector


def test_orbital_period_values():
    assert geom.orbital_period(600) == pytest.approx(5792.33, abs=0.05)
    # within 0.03% of a sidereal day; the residual comes from the mean-radius Earth
    assert geom.orbital_period(35786) == pytest.approx(86164.1, rel=5e-4)
    assert geom.orbital_period(1e-9) == pytest.approx(5060.84, abs=0.05)


@pytest.mark.parametrize("h", [0, -1.0])
def test_orbital_period_rejects_nonpositive(h):
    with pytest.raises(DomainError):
        geom.orbital_period(h)


def test_orbit_spec_normalizes_angles():
    o = OrbitSpec(600, 53, raan_deg=-30, arg_latitude0_deg=720 + 45)
    assert o.raan_deg == 330 and o.arg_latitude0_deg == 45
    with pytest.raises(DomainError):
        OrbitSpec(600, 181)


def test_polar_orbit_quarter_period_reaches_pole():
    o = OrbitSpec(600, 90)
    assert geom.propagate(o, o.period_s / 4).subpoint_lat_deg == pytest.approx(90.0, abs=1e-9)


def test_initial_subpoint_at_origin():
    s = geom.propagate(OrbitSpec(600, 53), 0.0)
    assert (s.subpoint_lat_deg, s.subpoint_lon_deg) == pytest.approx((0.0, 0.0), abs=1e-12)


def test_latitude_at_arg_latitude_90_equals_inclination():
    s = geom.propagate(OrbitSpec(600, 53, arg_latitude0_deg=90), 0.0)
    assert s.subpoint_lat_deg == pytest.approx(53.0, abs=1e-9)


def test_earth_rotation_shifts_longitude():
    o = OrbitSpec(600, 0)
    t = 1000.0
    with_rot = geom.propagate(o, t).subpoint_lon_deg
    without = geom.propagate(o, t, rotate_earth=False).subpoint_lon_deg
    assert (without - with_rot) == pytest.approx(math.degrees(geom.CONST.earth_rot_rad_s * t), abs=1e-9)


def test_propagate_rejects_negative_time():
    with pytest.raises(DomainError):
        geom.propagate(OrbitSpec(600, 53), -1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(200, 3000), st.floats(0, 90), st.floats(0, 360), st.floats(0, 360))
def test_latitude_bounded_by_inclination(h, inc, raan, u0):
    o = OrbitSpec(h, inc, raan, u0)
    lat, lon = geom.subpoints(o, np.linspace(0, 3 * o.period_s, 2000))
    assert np.all(np.abs(lat) <= inc + 1e-9)
    assert np.all((lon >= -180) & (lon < 180))


def test_propagate_deterministic():
    o = OrbitSpec(780, 86.4, 12.3, 45.6)
    a = geom.subpoints(o, np.linspace(0, 1e5, 1000))
    b = geom.subpoints(o, np.linspace(0, 1e5, 1000))
    assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()


def test_footprint_half_angle_values():
    assert math.degrees(geom.footprint_half_angle(600, 10)) == pytest.approx(15.84, abs=0.01)
    assert math.degrees(geom.footprint_half_angle(35786, 10)) == pytest.approx(71.44, abs=0.01)
    assert geom.footprint_half_angle(600, 90) == pytest.approx(0.0, abs=1e-12)


def test_footprint_matches_horizon_geometry():
    # at zero elevation the cap edge is the tangent point: cos(psi) = R / (R + h)
    h = 600.0
    assert geom.footprint_half_angle(h, 0) == pytest.approx(math.acos(geom.R_E / (geom.R_E + h)))


@settings(max_examples=100, deadline=None)
@given(st.floats(100, 40000), st.floats(100, 40000), st.floats(0, 80))
def test_footprint_monotone_in_altitude(h1, h2, eps):
    if abs(h1 - h2) < 1e-3:
        return
    lo, hi = sorted((h1, h2))
    assert geom.footprint_half_angle(hi, eps) > geom.footprint_half_angle(lo, eps)


@settings(max_examples=50, deadline=None)
@given(st.floats(100, 40000), st.floats(0, 89), st.floats(0.01, 1))
def test_footprint_decreasing_in_elevation(h, e1, de):
    assert geom.footprint_half_angle(h, e1 + de) < geom.footprint_half_angle(h, e1)


def test_cap_area_values():
    assert geom.cap_area(0.0) == 0.0
    assert geom.cap_area(math.pi) == pytest.approx(4 * math.pi * geom.R_E**2)
    assert geom.cap_area(math.radians(15.8)) == pytest.approx(9.6e6, rel=0.01)


def test_area_ratio_leo_geo():
    ratio = geom.cap_area(geom.footprint_half_angle(600, 10)) / geom.cap_area(geom.footprint_half_angle(35786, 10))
    assert ratio == pytest.approx(0.0557, abs=0.0005)


def test_overlap_exact_regimes():
    psi = math.radians(20)
    a = Footprint(10, 20, psi)
    assert geom.cap_overlap_area(a, a).area_km2 == pytest.approx(geom.cap_area(psi))
    far = Footprint(10, 80, math.radians(15))
    assert geom.cap_overlap_area(a, far) == (0.0, 0.0)
    small = Footprint(12, 22, math.radians(5))
    assert geom.cap_overlap_area(a, small).area_km2 == pytest.approx(geom.cap_area(math.radians(5)))


PARTIAL = [
    ((0, 0, 20), (0, 25, 15)),
    ((40, 10, 30), (55, 60, 25)),
    ((-10, 170, 12), (-5, -175, 10)),   # across the antimeridian
    ((0, 0, 71.44), (20, 60, 15.84)),   # LEO cap straddling the GEO edge
]


@pytest.mark.parametrize("c1,c2", PARTIAL)
def test_overlap_partial_against_monte_carlo(c1, c2):
    f1 = Footprint(c1[0], c1[1], math.radians(c1[2]))
    f2 = Footprint(c2[0], c2[1], math.radians(c2[2]))
    est = geom.cap_overlap_area(f1, f2)
    ref, ref_se = mc_cap_overlap(c1[:2], f1.half_angle_rad, c2[:2], f2.half_angle_rad)
    se = math.hypot(est.stderr_km2, ref_se)
    assert abs(est.area_km2 - ref) <= 3 * se
    assert est.stderr_km2 > 0


@settings(max_examples=30, deadline=None)
@given(st.floats(-60, 60), st.floats(-180, 179), st.floats(1, 40),
       st.floats(-60, 60), st.floats(-180, 179), st.floats(1, 40))
def test_overlap_symmetric_and_bounded(la1, lo1, p1, la2, lo2, p2):
    f1 = Footprint(la1, lo1, math.radians(p1))
    f2 = Footprint(la2, lo2, math.radians(p2))
    a = geom.cap_overlap_area(f1, f2, samples=4000)
    b = geom.cap_overlap_area(f2, f1, samples=4000)
    assert a == b
    assert 0 <= a.area_km2 <= min(f1.area_km2, f2.area_km2) + 1e-6


def test_containment_consistent_with_pointwise_membership():
    big = Footprint(30, 40, math.radians(25))
    small = Footprint(35, 45, math.radians(8))
    rng = np.random.default_rng(3)
    lat, lon = geom.sample_cap(small.center_lat_deg, small.center_lon_deg, small.half_angle_rad, 10_000, rng)
    # sampled points lie in the small cap, and the containment branch says all are in the big one
    assert small.contains(lat, lon).all()
    assert geom.cap_overlap_area(big, small).stderr_km2 == 0.0
    assert big.contains(lat, lon).all()
    # pointwise membership agrees with the unit-vector definition
    g = unit_vector(lat, lon)
    assert np.array_equal(big.contains(lat, lon), g @ unit_vector(30, 40) >= math.cos(big.half_angle_rad) - 1e-12)


def test_sample_cap_is_area_uniform():
    rng = np.random.default_rng(0)
    psi = math.radians(40)
    lat, lon = geom.sample_cap(20, 30, psi, 200_000, rng)
    ang = geom.central_angle(20, 30, lat, lon)
    # fraction inside half the half-angle equals the area ratio
    frac = np.mean(ang <= psi / 2)
    assert frac == pytest.approx(geom.cap_area(psi / 2) / geom.cap_area(psi), abs=0.005)


def test_slant_range_values():
    assert geom.slant_range(600, 90) == pytest.approx(600)
    assert geom.slant_range(35786, 90) == pytest.approx(35786)
    assert geom.slant_range(600, 10) == pytest.approx(1932, abs=1)
    with pytest.raises(DomainError):
        geom.slant_range(600, -1)


def test_slant_range_law_of_cosines():
    h, e = 1200.0, 25.0
    d = geom.slant_range(h, e)
    psi = geom.footprint_half_angle(h, e)
    assert d == pytest.approx(float(geom.ground_to_sat_distance(psi, h)), rel=1e-12)


def test_fspl_values_and_log_laws():
    assert geom.fspl_db(600, 2e9) == pytest.approx(154.0, abs=0.05)
    six = 20 * math.log10(2)
    assert geom.fspl_db(1200, 2e9) - geom.fspl_db(600, 2e9) == pytest.approx(six)
    assert geom.fspl_db(600, 4e9) - geom.fspl_db(600, 2e9) == pytest.approx(six)
    with pytest.raises(DomainError):
        geom.fspl_db(0, 2e9)
