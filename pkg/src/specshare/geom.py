"""Circular-orbit propagation and spherical-Earth footprint geometry.

All angles in the public API are degrees except Earth-central half-angles,
which are radians. Lengths are km, times seconds, frequencies Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .rng import make_rng


@dataclass(frozen=True)
class PhysConstants:
    earth_radius_km: float = 6371.0
    mu_km3_s2: float = 398600.4418
    earth_rot_rad_s: float = 7.2921159e-5
    c_m_s: float = 2.99792458e8
    boltzmann_j_k: float = 1.380649e-23


CONST = PhysConstants()
R_E = CONST.earth_radius_km

GEO_ALTITUDE_KM = 35786.0
DEFAULT_MIN_ELEV_DEG = 10.0


@dataclass(frozen=True)
class OrbitSpec:
    """Circular orbit. Angles are normalized on construction."""

    altitude_km: float
    inclination_deg: float = 0.0
    raan_deg: float = 0.0
    arg_latitude0_deg: float = 0.0
    epoch_s: float = 0.0

    def __post_init__(self):
        if not self.altitude_km > 0:
            raise DomainError(f"altitude must be positive, got {self.altitude_km}")
        if not 0.0 <= self.inclination_deg <= 180.0:
            raise DomainError(f"inclination must lie in [0, 180], got {self.inclination_deg}")
        object.__setattr__(self, "raan_deg", self.raan_deg % 360.0)
        object.__setattr__(self, "arg_latitude0_deg", self.arg_latitude0_deg % 360.0)

    @property
    def period_s(self) -> float:
        return orbital_period(self.altitude_km)


@dataclass(frozen=True)
class SatState:
    time_s: float
    subpoint_lat_deg: float
    subpoint_lon_deg: float
    altitude_km: float


@dataclass(frozen=True)
class Footprint:
    """Spherical cap seen by a satellite above ``min_elevation_deg``."""

    center_lat_deg: float
    center_lon_deg: float
    half_angle_rad: float
    min_elevation_deg: float = DEFAULT_MIN_ELEV_DEG

    def __post_init__(self):
        if not 0.0 <= self.half_angle_rad <= math.pi / 2 + 1e-12:
            raise DomainError(f"footprint half-angle out of [0, pi/2]: {self.half_angle_rad}")

    @classmethod
    def of(cls, state: SatState, min_elev_deg: float = DEFAULT_MIN_ELEV_DEG) -> Footprint:
        psi = footprint_half_angle(state.altitude_km, min_elev_deg)
        return cls(state.subpoint_lat_deg, state.subpoint_lon_deg, psi, min_elev_deg)

    @property
    def area_km2(self) -> float:
        return cap_area(self.half_angle_rad)

    def contains(self, lat_deg, lon_deg):
        """Membership test; vectorizes over numpy arrays."""
        ang = central_angle(self.center_lat_deg, self.center_lon_deg, lat_deg, lon_deg)
        return ang <= self.half_angle_rad


def orbital_period(altitude_km: float) -> float:
    if not altitude_km > 0:
        raise DomainError(f"altitude must be positive, got {altitude_km}")
    a = CONST.earth_radius_km + altitude_km
    return 2.0 * math.pi * math.sqrt(a**3 / CONST.mu_km3_s2)


def _wrap_lon(lon):
    return (np.asarray(lon) + 180.0) % 360.0 - 180.0


def subpoints(orbit: OrbitSpec, times, rotate_earth: bool = True):
    """Sub-satellite latitude and longitude (deg) at an array of times."""
    t = np.asarray(times, dtype=float) - orbit.epoch_s
    n = 2.0 * math.pi / orbital_period(orbit.altitude_km)
    u = math.radians(orbit.arg_latitude0_deg) + n * t
    inc = math.radians(orbit.inclination_deg)
    lat = np.arcsin(np.clip(math.sin(inc) * np.sin(u), -1.0, 1.0))
    # right ascension of the subpoint relative to the ascending node
    dlon = np.arctan2(math.cos(inc) * np.sin(u), np.cos(u))
    lon = math.radians(orbit.raan_deg) + dlon
    if rotate_earth:
        lon = lon - CONST.earth_rot_rad_s * t
    return np.degrees(lat), _wrap_lon(np.degrees(lon))


def propagate(orbit: OrbitSpec, t: float, rotate_earth: bool = True) -> SatState:
    if t < 0:
        raise DomainError(f"time must be non-negative, got {t}")
    lat, lon = subpoints(orbit, t, rotate_earth)
    return SatState(float(t), float(lat), float(lon), orbit.altitude_km)


def footprint_half_angle(altitude_km: float, min_elev_deg: float = DEFAULT_MIN_ELEV_DEG) -> float:
    """Earth-central half-angle (rad) of the region seeing the satellite above ``min_elev_deg``."""
    if not altitude_km > 0:
        raise DomainError(f"altitude must be positive, got {altitude_km}")
    if not 0.0 <= min_elev_deg <= 90.0:
        raise DomainError(f"elevation must lie in [0, 90], got {min_elev_deg}")
    eps = math.radians(min_elev_deg)
    ratio = CONST.earth_radius_km * math.cos(eps) / (CONST.earth_radius_km + altitude_km)
    return max(0.0, math.acos(ratio) - eps)


def cap_area(half_angle_rad: float) -> float:
    if not 0.0 <= half_angle_rad <= math.pi + 1e-12:
        raise DomainError(f"half-angle must lie in [0, pi], got {half_angle_rad}")
    return 2.0 * math.pi * R_E**2 * (1.0 - math.cos(half_angle_rad))


def central_angle(lat1, lon1, lat2, lon2):
    """Great-circle angle (rad) between points given in degrees (haversine)."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dp = p2 - p1
    dl = np.radians(np.asarray(lon2) - np.asarray(lon1))
    h = np.sin(dp / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2) ** 2
    return 2.0 * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def sample_cap(center_lat_deg, center_lon_deg, half_angle_rad, n, rng, cos_bounds=None):
    """Area-uniform points on a spherical cap.

    ``cos_bounds`` restricts the polar coordinate (measured from the cap
    centre) to ``cos(theta)`` in ``[lo, hi]``; it is used by the stratified
    estimator below.
    """
    lo, hi = cos_bounds if cos_bounds is not None else (math.cos(half_angle_rad), 1.0)
    z = rng.uniform(lo, hi, n)
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    s = np.sqrt(np.clip(1.0 - z * z, 0.0, 1.0))
    # local frame with the cap centre on the +z axis
    x, y = s * np.cos(phi), s * np.sin(phi)
    lat0, lon0 = math.radians(center_lat_deg), math.radians(center_lon_deg)
    # rotate about y by (90 deg - lat0), then about z by lon0
    c, sn = math.sin(lat0), math.cos(lat0)
    xr = x * c + z * sn
    zr = -x * sn + z * c
    xe = xr * math.cos(lon0) - y * math.sin(lon0)
    ye = xr * math.sin(lon0) + y * math.cos(lon0)
    lat = np.degrees(np.arcsin(np.clip(zr, -1.0, 1.0)))
    lon = _wrap_lon(np.degrees(np.arctan2(ye, xe)))
    return lat, lon


class OverlapArea(NamedTuple):
    area_km2: float
    stderr_km2: float


def cap_overlap_area(f1: Footprint, f2: Footprint, samples: int = 100_000, seed: int = 0,
                     strata: int = 32) -> OverlapArea:
    """Intersection area of two caps.

    Containment and disjoint configurations are exact. Partial overlaps are
    estimated by sampling the smaller cap, stratified in equal-area rings
    about its centre, and counting hits in the larger cap.
    """
    order = lambda f: (f.half_angle_rad, f.center_lat_deg, f.center_lon_deg)
    small, big = sorted((f1, f2), key=order)
    sep = float(central_angle(small.center_lat_deg, small.center_lon_deg,
                              big.center_lat_deg, big.center_lon_deg))
    if sep >= small.half_angle_rad + big.half_angle_rad:
        return OverlapArea(0.0, 0.0)
    if sep + small.half_angle_rad <= big.half_angle_rad:
        return OverlapArea(small.area_km2, 0.0)

    # canonical ordering keeps the estimate symmetric in its arguments
    rng = make_rng(seed, "cap_overlap", *order(small), *order(big))
    per = max(2, samples // strata)
    edges = np.linspace(math.cos(small.half_angle_rad), 1.0, strata + 1)
    means, variances = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        lat, lon = sample_cap(small.center_lat_deg, small.center_lon_deg,
                              small.half_angle_rad, per, rng, cos_bounds=(lo, hi))
        hit = big.contains(lat, lon).astype(float)
        means.append(hit.mean())
        variances.append(hit.var(ddof=1) / per)
    # equal-area strata: each carries weight 1/strata
    p = float(np.mean(means))
    var = float(np.sum(variances)) / strata**2
    a = small.area_km2
    return OverlapArea(a * p, a * math.sqrt(var))


def slant_range(altitude_km: float, elev_deg: float) -> float:
    if not altitude_km > 0:
        raise DomainError(f"altitude must be positive, got {altitude_km}")
    if not 0.0 <= elev_deg <= 90.0:
        raise DomainError(f"elevation must lie in [0, 90], got {elev_deg}")
    e = math.radians(elev_deg)
    se = math.sin(e)
    return math.sqrt(R_E**2 * se**2 + 2 * R_E * altitude_km + altitude_km**2) - R_E * se


def fspl_db(distance_km, freq_hz):
    """Free-space path loss in dB; vectorizes over distance."""
    d = np.asarray(distance_km, dtype=float)
    if np.any(d <= 0) or not freq_hz > 0:
        raise DomainError("distance and frequency must be positive")
    out = 20.0 * np.log10(4.0 * math.pi * d * 1e3 * freq_hz / CONST.c_m_s)
    return float(out) if out.ndim == 0 else out


def ground_to_sat_distance(central_angle_rad, altitude_km):
    """Straight-line distance from a ground point to a satellite (law of cosines)."""
    rs = R_E + altitude_km
    return np.sqrt(R_E**2 + rs**2 - 2.0 * R_E * rs * np.cos(central_angle_rad))
