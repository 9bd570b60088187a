"""Satellite IoT reuse of terrestrial spectrum.

Terrestrial interferers are a continuum: each cell radiates ``kappa`` watts
per resident toward the sky. A LEO satellite receiving an IoT device at its
sub-satellite point collects that interference from every populated cell in
its footprint. RUs sense blocks with an energy detector; their reports are
OR-fused into a radio environment map (REM).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple, Sequence

import numpy as np

from . import geom
from .errors import DomainError
from .geom import CONST, DEFAULT_MIN_ELEV_DEG, R_E, OrbitSpec, SatState
from .rng import make_rng


@dataclass(frozen=True)
class CellGrid:
    """Regular lat/lon raster. Cells are indexed row-major from the south-west corner."""

    lat_min: float = -90.0
    lon_min: float = -180.0
    cell_deg: float = 1.0
    n_lat: int = 180
    n_lon: int = 360

    def __post_init__(self):
        if self.cell_deg <= 0 or self.n_lat < 1 or self.n_lon < 1:
            raise DomainError("grid needs a positive cell size and at least one cell")
        if self.lat_min < -90 or self.lat_min + self.n_lat * self.cell_deg > 90 + 1e-9:
            raise DomainError("grid latitude extent exceeds [-90, 90]")

    @property
    def n_cells(self) -> int:
        return self.n_lat * self.n_lon

    @property
    def lat_centers(self) -> np.ndarray:
        return self.lat_min + (np.arange(self.n_lat) + 0.5) * self.cell_deg

    @property
    def lon_centers(self) -> np.ndarray:
        return self.lon_min + (np.arange(self.n_lon) + 0.5) * self.cell_deg

    def mesh(self):
        return np.meshgrid(self.lat_centers, self.lon_centers, indexing="ij")

    def cell_areas_km2(self) -> np.ndarray:
        edges = np.radians(self.lat_min + np.arange(self.n_lat + 1) * self.cell_deg)
        band = R_E**2 * math.radians(self.cell_deg) * np.diff(np.sin(edges))
        return np.repeat(band[:, None], self.n_lon, axis=1)

    def cell_of(self, lat_deg, lon_deg):
        """Flat index of the cell containing each point, or -1 outside the extent."""
        lat = np.asarray(lat_deg, dtype=float)
        lon = np.asarray(lon_deg, dtype=float)
        i = np.floor((lat - self.lat_min) / self.cell_deg).astype(int)
        j = np.floor(((lon - self.lon_min) % 360.0) / self.cell_deg).astype(int)
        ok = (i >= 0) & (i < self.n_lat) & (j >= 0) & (j < self.n_lon)
        out = np.where(ok, i * self.n_lon + j, -1)
        return int(out) if out.ndim == 0 else out

    def cell_center(self, cell: int) -> tuple:
        i, j = divmod(int(cell), self.n_lon)
        return (float(self.lat_centers[i]), float(self.lon_centers[j]))


# -- population ------------------------------------------------------------

@dataclass(frozen=True)
class PopulationBlob:
    """Isotropic Gaussian settlement holding ``population`` residents."""

    lat_deg: float
    lon_deg: float
    population: float
    sigma_km: float

    def __post_init__(self):
        if self.population < 0:
            raise DomainError("blob population must be non-negative")
        if self.sigma_km <= 0:
            raise DomainError("blob width must be positive")


@dataclass(frozen=True)
class LandBox:
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def contains(self, lat, lon):
        width = self.lon_max - self.lon_min
        if width <= 0:
            width += 360.0
        lon = (np.asarray(lon) - self.lon_min) % 360.0
        return (lat >= self.lat_min) & (lat < self.lat_max) & (lon < width)


@dataclass(frozen=True)
class PopulationGrid:
    grid: CellGrid
    density: np.ndarray     # persons / km^2, shape (n_lat, n_lon)
    land: np.ndarray        # bool, shape (n_lat, n_lon)

    def __eq__(self, other):
        return (isinstance(other, PopulationGrid) and self.grid == other.grid
                and np.array_equal(self.density, other.density) and np.array_equal(self.land, other.land))

    __hash__ = None

    def total_population(self) -> float:
        return float(np.sum(self.density * self.grid.cell_areas_km2()))

    def scaled(self, factor) -> PopulationGrid:
        return PopulationGrid(self.grid, self.density * factor, self.land)

    def density_at(self, lat_deg, lon_deg):
        cell = self.grid.cell_of(lat_deg, lon_deg)
        flat = self.density.ravel()
        return np.where(np.asarray(cell) >= 0, flat[np.maximum(cell, 0)], 0.0)

    def land_at(self, lat_deg, lon_deg):
        cell = self.grid.cell_of(lat_deg, lon_deg)
        flat = self.land.ravel()
        return np.where(np.asarray(cell) >= 0, flat[np.maximum(cell, 0)], False)


def synth_population_grid(blobs: Sequence[PopulationBlob], land: Sequence[LandBox] | None = None,
                          grid: CellGrid = CellGrid(), seed: int = 0, jitter: float = 0.0) -> PopulationGrid:
    """Rasterize Gaussian blobs; ocean cells are zeroed.

    ``land=None`` treats every cell as land. ``jitter`` multiplies each cell
    by an independent lognormal factor of that log-std (0 disables it).
    """
    lat, lon = grid.mesh()
    if land is None:
        is_land = np.ones(lat.shape, dtype=bool)
    else:
        is_land = np.zeros(lat.shape, dtype=bool)
        for box in land:
            is_land |= box.contains(lat, lon)
    density = np.zeros(lat.shape)
    for b in blobs:
        d = R_E * geom.central_angle(b.lat_deg, b.lon_deg, lat, lon)
        density += b.population / (2 * math.pi * b.sigma_km**2) * np.exp(-0.5 * (d / b.sigma_km) ** 2)
    if jitter > 0:
        density *= make_rng(seed, "population_jitter").lognormal(0.0, jitter, density.shape)
    density[~is_land] = 0.0
    return PopulationGrid(grid, density, is_land)


# -- interference and SINR -------------------------------------------------

@dataclass(frozen=True)
class InterferenceModel:
    """Aggregate terrestrial emission and the IoT uplink budget.

    ``kappa_w_per_person`` is the sky-directed EIRP per resident. The
    satellite antenna gain scales both the wanted signal and interference.
    """

    kappa_w_per_person: float = 5.0e-6
    carrier_hz: float = 28e9
    rx_noise_temp_k: float = 290.0
    device_eirp_dbw: float = 0.0
    rx_gain_db: float = 40.0
    block_bw_hz: float = 4e6
    min_elev_deg: float = DEFAULT_MIN_ELEV_DEG

    def __post_init__(self):
        if self.kappa_w_per_person < 0:
            raise DomainError("kappa must be non-negative")
        if self.carrier_hz <= 0 or self.block_bw_hz <= 0 or self.rx_noise_temp_k <= 0:
            raise DomainError("carrier, bandwidth and noise temperature must be positive")

    @property
    def noise_w(self) -> float:
        return CONST.boltzmann_j_k * self.rx_noise_temp_k * self.block_bw_hz


def _fspl_linear(distance_km, freq_hz):
    return (4.0 * math.pi * np.asarray(distance_km) * 1e3 * freq_hz / CONST.c_m_s) ** 2


class _Emitters(NamedTuple):
    lat: np.ndarray
    lon: np.ndarray
    power: np.ndarray   # kappa * density * area, watts


def _emitters(grid: PopulationGrid, model: InterferenceModel) -> _Emitters:
    lat, lon = grid.grid.mesh()
    power = model.kappa_w_per_person * grid.density * grid.grid.cell_areas_km2()
    keep = power > 0
    return _Emitters(lat[keep], lon[keep], power[keep])


def _interference(em: _Emitters, lat, lon, altitude_km, model: InterferenceModel) -> float:
    if em.power.size == 0:
        return 0.0
    psi = geom.footprint_half_angle(altitude_km, model.min_elev_deg)
    ang = geom.central_angle(lat, lon, em.lat, em.lon)
    inside = ang <= psi
    if not inside.any():
        return 0.0
    dist = geom.ground_to_sat_distance(ang[inside], altitude_km)
    return float(np.sum(em.power[inside] / _fspl_linear(dist, model.carrier_hz)))


def interference_at(sat: SatState, grid: PopulationGrid, model: InterferenceModel) -> float:
    """Isotropic received interference (W) from populated cells in the footprint."""
    return _interference(_emitters(grid, model), sat.subpoint_lat_deg, sat.subpoint_lon_deg,
                         sat.altitude_km, model)


def signal_w(altitude_km: float, model: InterferenceModel) -> float:
    """Wanted signal from a device at the sub-satellite point, after the receive antenna."""
    loss = _fspl_linear(geom.slant_range(altitude_km, 90.0), model.carrier_hz)
    return 10 ** ((model.device_eirp_dbw + model.rx_gain_db) / 10) / loss


class SinrSeries(NamedTuple):
    t_s: np.ndarray
    lat_deg: np.ndarray
    lon_deg: np.ndarray
    interference_w: np.ndarray
    sinr_db: np.ndarray
    snr_db: float


def sinr_timeseries(orbit: OrbitSpec, grid: PopulationGrid, model: InterferenceModel,
                    step_s: float = 10.0, duration_s: float | None = None,
                    device_rule: str = "subpoint", rotate_earth: bool = True) -> SinrSeries:
    """SINR of an IoT device beneath the satellite, sampled every ``step_s``.

    ``duration_s`` defaults to one orbital period and may not be shorter.
    """
    if step_s <= 0:
        raise DomainError("step_s must be positive")
    if device_rule != "subpoint":
        raise DomainError(f"unsupported device placement rule {device_rule!r}")
    period = orbit.period_s
    duration = period if duration_s is None else duration_s
    if duration < period * (1 - 1e-12):
        raise DomainError("series must cover at least one orbital period")
    n = int(math.floor(duration / step_s + 1e-9)) + 1
    t = np.arange(n) * step_s
    lat, lon = geom.subpoints(orbit, t, rotate_earth)
    em = _emitters(grid, model)
    interf = np.array([_interference(em, a, o, orbit.altitude_km, model) for a, o in zip(lat, lon)])
    gain = 10 ** (model.rx_gain_db / 10)
    s = signal_w(orbit.altitude_km, model)
    sinr = 10 * np.log10(s / (model.noise_w + gain * interf))
    snr = 10 * math.log10(s / model.noise_w)
    return SinrSeries(t, lat, lon, interf, sinr, snr)


class SegmentMeans(NamedTuple):
    ocean_db: float
    city_db: float
    ocean_samples: int
    city_samples: int


def segment_means(series: SinrSeries, grid: PopulationGrid, dense_fraction: float = 0.5) -> SegmentMeans:
    """Mean SINR (dB) with the subpoint over ocean vs over dense city cells.

    A cell is dense when its density is at least ``dense_fraction`` of the
    grid maximum.
    """
    land = grid.land_at(series.lat_deg, series.lon_deg)
    dens = grid.density_at(series.lat_deg, series.lon_deg)
    peak = float(grid.density.max())
    ocean = ~land
    city = (dens >= dense_fraction * peak) if peak > 0 else np.zeros_like(ocean)
    mean = lambda m: float(np.mean(series.sinr_db[m])) if m.any() else float("nan")
    return SegmentMeans(mean(ocean), mean(city), int(ocean.sum()), int(city.sum()))


# -- spectrum sensing and REM ---------------------------------------------

class Belief(IntEnum):
    FREE = 0
    OCCUPIED = 1
    UNKNOWN = 2


@dataclass(frozen=True)
class RuSensor:
    ru_id: str
    lat_deg: float
    lon_deg: float
    blocks: tuple
    threshold_db: float = 10.0
    noise_std_db: float = 2.0

    def __post_init__(self):
        if not math.isfinite(self.threshold_db):
            raise DomainError("detection threshold must be finite")
        if self.noise_std_db < 0:
            raise DomainError("sensing noise std must be non-negative")
        object.__setattr__(self, "blocks", tuple(sorted(set(int(b) for b in self.blocks))))


@dataclass(frozen=True)
class SensingTruth:
    """Ground truth per (cell, block): occupancy and received power over noise (dB)."""

    grid: CellGrid
    occupied: np.ndarray
    power_db: np.ndarray

    @classmethod
    def from_allocations(cls, grid: CellGrid, maps: Sequence, signal_db, floor_db: float = 0.0) -> SensingTruth:
        """One :class:`AllocationMap` per cell; allocated blocks radiate ``signal_db``."""
        if len(maps) != grid.n_cells:
            raise DomainError("need one allocation map per cell")
        occ = np.array([[e is not None for e in m.entries] for m in maps], dtype=bool)
        sig = np.broadcast_to(np.asarray(signal_db, dtype=float), occ.shape)
        return cls(grid, occ, np.where(occ, sig, floor_db))

    @property
    def n_blocks(self) -> int:
        return self.occupied.shape[1]


class DetectionReport(NamedTuple):
    ru_id: str
    cell: int
    blocks: tuple
    occupied: tuple


def sense(ru: RuSensor, truth: SensingTruth, seed: int) -> DetectionReport:
    """Energy detector: Occupied iff true power plus Gaussian noise exceeds the threshold."""
    if not ru.blocks:
        raise DomainError(f"RU {ru.ru_id!r} senses no blocks")
    cell = truth.grid.cell_of(ru.lat_deg, ru.lon_deg)
    if cell < 0:
        raise DomainError(f"RU {ru.ru_id!r} lies outside the sensing grid")
    blocks = np.array(ru.blocks)
    power = truth.power_db[cell, blocks]
    noise = make_rng(seed, "sense", ru.ru_id).normal(0.0, 1.0, blocks.size) * ru.noise_std_db
    decisions = (power + noise) > ru.threshold_db
    return DetectionReport(ru.ru_id, int(cell), ru.blocks, tuple(bool(d) for d in decisions))


@dataclass(frozen=True)
class RadioEnvironmentMap:
    grid: CellGrid
    belief: np.ndarray          # Belief codes, shape (n_cells, n_blocks)
    timestamp: float
    contributors: tuple         # per cell, sorted RU ids

    def cell_beliefs(self, cell: int) -> np.ndarray:
        return self.belief[cell]


def build_rem(reports: Sequence[DetectionReport], grid: CellGrid, n_blocks: int,
              timestamp: float = 0.0) -> RadioEnvironmentMap:
    """OR fusion: any Occupied wins, all Free gives Free, no report leaves Unknown."""
    if not reports:
        raise DomainError("build_rem needs at least one report")
    seen = np.zeros((grid.n_cells, n_blocks), dtype=bool)
    occ = np.zeros((grid.n_cells, n_blocks), dtype=bool)
    contrib: list[set] = [set() for _ in range(grid.n_cells)]
    for rep in reports:
        idx = np.array(rep.blocks, dtype=int)
        seen[rep.cell, idx] = True
        occ[rep.cell, idx] |= np.array(rep.occupied, dtype=bool)
        contrib[rep.cell].add(rep.ru_id)
    belief = np.full((grid.n_cells, n_blocks), Belief.UNKNOWN, dtype=np.int8)
    belief[seen] = Belief.FREE
    belief[occ] = Belief.OCCUPIED
    return RadioEnvironmentMap(grid, belief, timestamp, tuple(tuple(sorted(c)) for c in contrib))


def rem_access_decision(rem: RadioEnvironmentMap, cell: int, requested_blocks) -> frozenset:
    """Grant only blocks believed Free; Unknown counts as Occupied."""
    if not 0 <= cell < rem.grid.n_cells:
        raise DomainError(f"cell {cell} outside the REM extent")
    row = rem.belief[cell]
    return frozenset(int(b) for b in requested_blocks if 0 <= b < row.size and row[b] == Belief.FREE)


def rem_accuracy(rem: RadioEnvironmentMap, truth: SensingTruth) -> tuple:
    """(false-alarm rate, missed-detection rate) over cells with a known belief."""
    if rem.belief.shape != truth.occupied.shape:
        raise DomainError("REM and truth cover different extents")
    known = rem.belief != Belief.UNKNOWN
    said_occ = rem.belief == Belief.OCCUPIED
    free = known & ~truth.occupied
    busy = known & truth.occupied
    fa = float((said_occ & free).sum() / free.sum()) if free.any() else 0.0
    md = float((~said_occ & busy).sum() / busy.sum()) if busy.any() else 0.0
    return fa, md
