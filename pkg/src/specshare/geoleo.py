"""GEO-primary / LEO-secondary cognitive frequency reuse.

The GEO operator shares its resource allocation. A LEO satellite may use any
block except those assigned to GEO users inside its own footprint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from . import geom
from .errors import ClusterError, DomainError, NoCoverageError
from .geom import CONST, DEFAULT_MIN_ELEV_DEG, Footprint, OrbitSpec
from .rng import make_rng
from .spectrum import AllocationMap, BandPlan

GEO_OWNER = "geo"


@dataclass(frozen=True)
class GeoUser:
    user_id: str
    lat_deg: float
    lon_deg: float
    blocks: tuple


@dataclass(frozen=True)
class GeoSystem:
    footprint: Footprint
    band: BandPlan
    users: tuple
    occupied_fraction_target: float
    allocation: AllocationMap = field(repr=False, compare=False, default=None)

    @property
    def user_lat(self) -> np.ndarray:
        return np.array([u.lat_deg for u in self.users])

    @property
    def user_lon(self) -> np.ndarray:
        return np.array([u.lon_deg for u in self.users])

    @property
    def user_bandwidth_hz(self) -> np.ndarray:
        return np.array([len(u.blocks) for u in self.users]) * self.band.block_bw_hz


def geo_footprint(lon_deg: float = 0.0, min_elev_deg: float = DEFAULT_MIN_ELEV_DEG) -> Footprint:
    psi = geom.footprint_half_angle(geom.GEO_ALTITUDE_KM, min_elev_deg)
    return Footprint(0.0, lon_deg, psi, min_elev_deg)


def allocated_block_count(band: BandPlan, u: float) -> int:
    # round half up; Python's round() is banker's rounding
    return int(math.floor(u * band.block_count + 0.5))


def place_geo_users(geo_fp: Footprint, band: BandPlan, user_count: int, u: float, seed: int) -> GeoSystem:
    """Area-uniform GEO users; ``round(u * blocks)`` blocks split as evenly as possible."""
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"occupied fraction must lie in [0, 1], got {u}")
    if user_count < 1:
        raise DomainError("user_count must be at least 1")
    rng = make_rng(seed, "geo_users")
    lat, lon = geom.sample_cap(geo_fp.center_lat_deg, geo_fp.center_lon_deg,
                               geo_fp.half_angle_rad, user_count, rng)
    total = allocated_block_count(band, u)
    base, extra = divmod(total, user_count)
    users, amap, start = [], AllocationMap.for_band(band), 0
    for k in range(user_count):
        n = base + (1 if k < extra else 0)
        blocks = tuple(range(start, start + n))
        start += n
        uid = f"u{k}"
        amap = amap.allocate(blocks, GEO_OWNER, uid)
        users.append(GeoUser(uid, float(lat[k]), float(lon[k]), blocks))
    return GeoSystem(geo_fp, band, tuple(users), u, amap)


def reusable_bandwidth(geo: GeoSystem, leo_fp: Footprint) -> float:
    inside = leo_fp.contains(geo.user_lat, geo.user_lon)
    blocked = float(np.sum(geo.user_bandwidth_hz[inside]))
    return geo.band.total_bw_hz - blocked


def reusable_bandwidth_track(geo: GeoSystem, lat_deg, lon_deg, half_angle_rad: float) -> np.ndarray:
    """:func:`reusable_bandwidth` for many LEO footprints sharing one half-angle."""
    lat = np.asarray(lat_deg, dtype=float)[:, None]
    lon = np.asarray(lon_deg, dtype=float)[:, None]
    ang = geom.central_angle(lat, lon, geo.user_lat[None, :], geo.user_lon[None, :])
    blocked = (ang <= half_angle_rad) @ geo.user_bandwidth_hz
    return geo.band.total_bw_hz - blocked


@dataclass(frozen=True)
class LeoLink:
    """Downlink budget of the LEO system (isotropic, fixed gains)."""

    eirp_dbw: float = 40.0
    rx_gain_over_temp_db: float = -15.0
    carrier_hz: float = 2e9
    noise_bw_hz: float = 200e6
    efficiency_cap_bps_hz: float = 6.0

    def __post_init__(self):
        vals = (self.eirp_dbw, self.rx_gain_over_temp_db, self.carrier_hz,
                self.noise_bw_hz, self.efficiency_cap_bps_hz)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("link parameters must be finite")
        if self.efficiency_cap_bps_hz <= 0 or self.carrier_hz <= 0 or self.noise_bw_hz <= 0:
            raise DomainError("carrier, noise bandwidth and efficiency cap must be positive")


def nadir_snr_db(h_km: float, link: LeoLink) -> float:
    loss = geom.fspl_db(geom.slant_range(h_km, 90.0), link.carrier_hz)
    k_db = 10.0 * math.log10(CONST.boltzmann_j_k)
    return link.eirp_dbw + link.rx_gain_over_temp_db - loss - k_db - 10.0 * math.log10(link.noise_bw_hz)


def shannon_efficiency(snr_linear: float, cap: float) -> float:
    if snr_linear < 0:
        raise DomainError("SNR must be non-negative")
    return min(math.log2(1.0 + snr_linear), cap)


def leo_spectral_efficiency(h_km: float, link: LeoLink) -> float:
    return shannon_efficiency(10.0 ** (nadir_snr_db(h_km, link) / 10.0), link.efficiency_cap_bps_hz)


class ThroughputResult(NamedTuple):
    avg_throughput_bps: float
    mean_reusable_hz: float
    spectral_efficiency: float
    covered_samples: int


def throughput_stats(orbit: OrbitSpec, geo: GeoSystem, link: LeoLink, sample_count: int = 10_000,
                     seed: int = 0, min_elev_deg: float = DEFAULT_MIN_ELEV_DEG,
                     horizon_s: float = 86400.0, max_draws: int | None = None) -> ThroughputResult:
    """Average LEO throughput over ``sample_count`` in-coverage track samples.

    Sample times are uniform on ``[0, horizon_s)``; only those whose
    subpoint lies in the GEO footprint are kept.
    """
    if sample_count < 100:
        raise DomainError("sample_count must be at least 100")
    rng = make_rng(seed, "track_times", orbit.altitude_km, orbit.inclination_deg,
                   orbit.raan_deg, orbit.arg_latitude0_deg)
    psi = geom.footprint_half_angle(orbit.altitude_km, min_elev_deg)
    max_draws = max_draws or 500 * sample_count
    lats, lons, drawn = [], [], 0
    have = 0
    while have < sample_count:
        if drawn >= max_draws:
            break
        batch = min(4 * sample_count, max_draws - drawn)
        t = rng.uniform(0.0, horizon_s, batch)
        drawn += batch
        lat, lon = geom.subpoints(orbit, t)
        keep = geo.footprint.contains(lat, lon)
        lats.append(lat[keep])
        lons.append(lon[keep])
        have += int(keep.sum())
    if have == 0:
        raise NoCoverageError(
            f"orbit (h={orbit.altitude_km} km, i={orbit.inclination_deg} deg) never enters the GEO footprint")
    lat = np.concatenate(lats)[:sample_count]
    lon = np.concatenate(lons)[:sample_count]
    reuse = reusable_bandwidth_track(geo, lat, lon, psi)
    mean_reuse = math.fsum(reuse) / reuse.size
    eff = leo_spectral_efficiency(orbit.altitude_km, link)
    return ThroughputResult(mean_reuse * eff, mean_reuse, eff, int(reuse.size))


def average_throughput(orbit: OrbitSpec, geo: GeoSystem, link: LeoLink, sample_count: int = 10_000,
                       seed: int = 0, **kwargs) -> float:
    return throughput_stats(orbit, geo, link, sample_count, seed, **kwargs).avg_throughput_bps


# -- dynamic clustering of LEO satellites inside the GEO footprint ---------

@dataclass(frozen=True)
class Enter:
    sat_id: str


@dataclass(frozen=True)
class Leave:
    sat_id: str


ClusterEvent = Union[Enter, Leave]


@dataclass(frozen=True)
class ClusterState:
    """``clusters`` maps cluster id to a mapping of satellite id to slot id."""

    slot_count: int
    clusters: tuple = ()   # sorted tuple of (cluster_id, ((sat_id, slot), ...))

    def __post_init__(self):
        if self.slot_count < 1:
            raise DomainError("slot_count must be at least 1")

    def as_dict(self) -> dict:
        return {cid: dict(members) for cid, members in self.clusters}

    def satellites(self) -> frozenset:
        return frozenset(s for _, members in self.clusters for s, _ in members)

    def cluster_of(self, sat_id: str):
        for cid, members in self.clusters:
            for s, slot in members:
                if s == sat_id:
                    return cid, slot
        return None


def _freeze(clusters: dict) -> tuple:
    return tuple((cid, tuple(sorted(m.items()))) for cid, m in sorted(clusters.items()) if m)


def cluster_update(state: ClusterState, event: ClusterEvent) -> ClusterState:
    """Join the cluster with most free slots (lowest id on ties) at its lowest free slot."""
    clusters = state.as_dict()
    if isinstance(event, Enter):
        if state.cluster_of(event.sat_id) is not None:
            raise ClusterError(f"satellite {event.sat_id!r} is already clustered")
        open_ = [(state.slot_count - len(m), cid) for cid, m in clusters.items() if len(m) < state.slot_count]
        if open_:
            cid = min(open_, key=lambda fc: (-fc[0], fc[1]))[1]
        else:
            cid = next(i for i in range(len(clusters) + 1) if i not in clusters)
            clusters[cid] = {}
        used = set(clusters[cid].values())
        clusters[cid][event.sat_id] = next(s for s in range(state.slot_count) if s not in used)
    elif isinstance(event, Leave):
        where = state.cluster_of(event.sat_id)
        if where is None:
            raise ClusterError(f"satellite {event.sat_id!r} is not clustered")
        del clusters[where[0]][event.sat_id]
    else:
        raise TypeError(f"unknown cluster event {event!r}")
    return ClusterState(state.slot_count, _freeze(clusters))


def coverage_events(orbits: dict, geo_fp: Footprint, times) -> list:
    """Enter/Leave events of satellites crossing the GEO footprint boundary.

    Events at the same time step are ordered Leave before Enter, then by id.
    """
    times = np.asarray(times, dtype=float)
    inside = {sid: geo_fp.contains(*geom.subpoints(o, times)) for sid, o in orbits.items()}
    events = []
    prev = {sid: False for sid in orbits}
    for k, t in enumerate(times):
        leaves = [sid for sid in sorted(orbits) if prev[sid] and not inside[sid][k]]
        enters = [sid for sid in sorted(orbits) if not prev[sid] and inside[sid][k]]
        events.extend((float(t), Leave(s)) for s in leaves)
        events.extend((float(t), Enter(s)) for s in enters)
        for sid in orbits:
            prev[sid] = bool(inside[sid][k])
    return events


def walker_constellation(altitude_km: float, inclination_deg: float, planes: int, per_plane: int,
                         phasing: int = 1) -> dict:
    """Walker-delta constellation keyed ``"p{plane}s{slot}"``."""
    total = planes * per_plane
    sats = {}
    for p in range(planes):
        for s in range(per_plane):
            u0 = 360.0 * s / per_plane + 360.0 * phasing * p / total
            sats[f"p{p}s{s}"] = OrbitSpec(altitude_km, inclination_deg, 360.0 * p / planes, u0)
    return sats
