"""JSON scenario schema.

A scenario is a flat JSON object: ``experiment``, ``seed`` and
``output_dir`` are common to every experiment, and the remaining keys are
the parameters of the chosen experiment. Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ScenarioError

EXPERIMENTS = ("geo-leo-reuse", "ntn-sinr", "rem", "coalition", "market-sim")
COMMON_KEYS = ("experiment", "seed", "output_dir")
U64_MAX = (1 << 64) - 1

ModeName = Literal["info-feed", "lease", "hybrid-grant"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)


class OrbitCfg(_Strict):
    altitude_km: float = Field(600.0, gt=0)
    inclination_deg: float = Field(53.0, ge=0, le=180)
    raan_deg: float = 0.0
    arg_latitude0_deg: float = 0.0
    epoch_s: float = 0.0


class BandCfg(_Strict):
    center_freq_hz: float = Field(2e9, gt=0)
    total_bw_hz: float = Field(200e6, gt=0)
    block_bw_hz: float = Field(1e6, gt=0)


class LinkCfg(_Strict):
    eirp_dbw: float = 40.0
    rx_gain_over_temp_db: float = -15.0
    carrier_hz: float = Field(2e9, gt=0)
    noise_bw_hz: float = Field(200e6, gt=0)
    efficiency_cap_bps_hz: float = Field(6.0, gt=0)


class GeoLeoParams(_Strict):
    altitudes_km: list[float] = Field(default_factory=lambda: [500.0, 750.0, 1000.0, 1250.0,
                                                                1500.0, 1750.0, 2000.0], min_length=1)
    inclinations_deg: list[float] = Field(default_factory=lambda: [30.0, 53.0, 70.0, 90.0], min_length=1)
    raan_deg: float = 0.0
    arg_latitude0_deg: float = 0.0
    geo_lon_deg: float = 0.0
    min_elev_deg: float = Field(10.0, ge=0, le=90)
    user_count: int = Field(200, ge=1)
    occupied_fraction: float = Field(0.8, ge=0, le=1)
    band: BandCfg = Field(default_factory=BandCfg)
    link: LinkCfg = Field(default_factory=LinkCfg)
    sample_count: int = Field(10_000, ge=100)
    horizon_s: float = Field(86400.0, gt=0)


class GridCfg(_Strict):
    lat_min: float = Field(-90.0, ge=-90, le=90)
    lon_min: float = -180.0
    cell_deg: float = Field(1.0, gt=0)
    n_lat: int = Field(180, ge=1)
    n_lon: int = Field(360, ge=1)


class BlobCfg(_Strict):
    lat_deg: float = Field(ge=-90, le=90)
    lon_deg: float
    population: float = Field(ge=0)
    sigma_km: float = Field(gt=0)


class BoxCfg(_Strict):
    lat_min: float = Field(ge=-90, le=90)
    lat_max: float = Field(ge=-90, le=90)
    lon_min: float
    lon_max: float


class InterferenceCfg(_Strict):
    kappa_w_per_person: float = Field(5e-6, ge=0)
    carrier_hz: float = Field(28e9, gt=0)
    rx_noise_temp_k: float = Field(290.0, gt=0)
    device_eirp_dbw: float = 0.0
    rx_gain_db: float = 40.0
    block_bw_hz: float = Field(4e6, gt=0)
    min_elev_deg: float = Field(10.0, ge=0, le=90)


def _default_blobs():
    # dense city on the first ascending pass of the default orbit, plus a rural area
    return [BlobCfg(lat_deg=41.4, lon_deg=37.9, population=2e7, sigma_km=100.0),
            BlobCfg(lat_deg=37.4, lon_deg=136.1, population=2e6, sigma_km=300.0)]


def _default_land():
    return [BoxCfg(lat_min=30.0, lat_max=55.0, lon_min=20.0, lon_max=60.0),
            BoxCfg(lat_min=25.0, lat_max=50.0, lon_min=125.0, lon_max=150.0)]


class NtnSinrParams(_Strict):
    orbit: OrbitCfg = Field(default_factory=OrbitCfg)
    step_s: float = Field(10.0, gt=0)
    duration_s: Optional[float] = Field(None, gt=0)
    rotate_earth: bool = True
    grid: GridCfg = Field(default_factory=GridCfg)
    blobs: list[BlobCfg] = Field(default_factory=_default_blobs)
    land: Optional[list[BoxCfg]] = Field(default_factory=_default_land)
    jitter: float = Field(0.0, ge=0)
    interference: InterferenceCfg = Field(default_factory=InterferenceCfg)
    dense_fraction: float = Field(0.25, gt=0, le=1)


class RemParams(_Strict):
    grid: GridCfg = Field(default_factory=lambda: GridCfg(lat_min=35.0, lon_min=139.0, cell_deg=0.1,
                                                          n_lat=10, n_lon=10))
    n_blocks: int = Field(100, ge=1)
    occupancy_prob: float = Field(0.3, ge=0, le=1)
    rus_per_cell: int = Field(1, ge=1)
    ru_coverage: float = Field(1.0, ge=0, le=1)
    sensing_snr_db: float = 20.0
    noise_floor_db: float = 0.0
    threshold_db: float = 10.0
    noise_std_db: float = Field(2.0, ge=0)
    timestamp: float = 0.0


def _default_betas():
    return [float(b) for b in range(2, 11)] + [math.log(1000.0)]


class CoalitionParams(_Strict):
    bandwidths: list[float] = Field(default_factory=lambda: [10.0, 5.0], min_length=1, max_length=20)
    betas: list[float] = Field(default_factory=_default_betas, min_length=1)

    @field_validator("bandwidths")
    @classmethod
    def _nonnegative(cls, v):
        if any(b < 0 for b in v):
            raise ValueError("bandwidths must be non-negative")
        return v

    @field_validator("betas")
    @classmethod
    def _positive(cls, v):
        if any(not b > 0 for b in v):
            raise ValueError("QoS exponents must be positive")
        return v


class RegionCfg(_Strict):
    name: str
    block_count: int = Field(100, ge=1)


class SellerCfg(_Strict):
    id: str
    region: str
    blocks: list[int] = Field(min_length=2, max_length=2)
    mode: ModeName = "lease"
    ask: float = Field(1.0, ge=0)
    ask_jitter: float = Field(0.0, ge=0, lt=1)
    primary_load: float = Field(0.5, ge=0, le=1)
    grant_size: int = Field(10, ge=1)
    feed_capacity: int = Field(1, ge=1)


class BuyerCfg(_Strict):
    id: str
    region: str
    mode: ModeName = "lease"
    demand: list[list[float]] = Field(default_factory=lambda: [[10.0, 2.0]])
    demand_jitter: float = Field(0.0, ge=0, le=1)

    @field_validator("demand")
    @classmethod
    def _steps(cls, v):
        for step in v:
            if len(step) != 2 or step[0] < 0 or step[1] < 0:
                raise ValueError("demand steps must be non-negative [quantity, limit] pairs")
        return v


def _default_regions():
    return [RegionCfg(name="l-band", block_count=200), RegionCfg(name="ka-band", block_count=100),
            RegionCfg(name="mmwave-28", block_count=100)]


def _default_sellers():
    return [
        SellerCfg(id="geo-op", region="l-band", blocks=[0, 200], mode="info-feed", ask=5.0,
                  primary_load=0.8, feed_capacity=2),
        SellerCfg(id="tn-op-1", region="ka-band", blocks=[0, 50], mode="lease", ask=1.0,
                  ask_jitter=0.2, primary_load=0.6),
        SellerCfg(id="tn-op-2", region="ka-band", blocks=[50, 100], mode="lease", ask=1.5,
                  ask_jitter=0.2, primary_load=0.4),
        SellerCfg(id="tn-5g", region="mmwave-28", blocks=[0, 100], mode="hybrid-grant", ask=0.5,
                  ask_jitter=0.2, primary_load=0.1, grant_size=4),
    ]


def _default_buyers():
    return [
        BuyerCfg(id="leo-op-a", region="l-band", mode="info-feed", demand=[[1, 8.0]]),
        BuyerCfg(id="leo-op-b", region="l-band", mode="info-feed", demand=[[1, 4.0]]),
        BuyerCfg(id="ntn-op", region="ka-band", mode="lease", demand=[[10, 3.0], [15, 1.2]],
                 demand_jitter=0.3),
        BuyerCfg(id="iot-sat", region="mmwave-28", mode="hybrid-grant", demand=[[20, 1.5], [20, 0.8]],
                 demand_jitter=0.3),
    ]


class MarketParams(_Strict):
    epochs: int = Field(24, ge=0)
    regions: list[RegionCfg] = Field(default_factory=_default_regions)
    sellers: list[SellerCfg] = Field(default_factory=_default_sellers)
    buyers: list[BuyerCfg] = Field(default_factory=_default_buyers)
    broker: Optional[str] = "broker"
    fee_bps: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _references(self):
        sizes = {}
        for k, r in enumerate(self.regions):
            if r.name in sizes:
                raise ValueError(f"regions[{k}].name: duplicate region {r.name!r}")
            sizes[r.name] = r.block_count
        ids = [s.id for s in self.sellers] + [b.id for b in self.buyers] + ([self.broker] if self.broker else [])
        if len(set(ids)) != len(ids):
            raise ValueError("sellers/buyers/broker: participant ids must be unique")
        for k, s in enumerate(self.sellers):
            if s.region not in sizes:
                raise ValueError(f"sellers[{k}].region: unknown region {s.region!r}")
            start, stop = s.blocks
            if not 0 <= start < stop <= sizes[s.region]:
                raise ValueError(f"sellers[{k}].blocks: range outside region {s.region!r}")
        for k, b in enumerate(self.buyers):
            if b.region not in sizes:
                raise ValueError(f"buyers[{k}].region: unknown region {b.region!r}")
        return self


PARAMS = {
    "geo-leo-reuse": GeoLeoParams,
    "ntn-sinr": NtnSinrParams,
    "rem": RemParams,
    "coalition": CoalitionParams,
    "market-sim": MarketParams,
}


@dataclass(frozen=True)
class Scenario:
    experiment: str
    seed: int
    output_dir: str
    params: BaseModel

    def to_dict(self) -> dict:
        out = {"experiment": self.experiment, "seed": self.seed, "output_dir": self.output_dir}
        out.update(self.params.model_dump(mode="json"))
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _path(loc) -> str:
    out = "$"
    for part in loc:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


def parse_scenario(data: bytes | str, seed_override: int | None = None) -> Scenario:
    """Validate a scenario document and fill in defaults."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScenarioError(f"scenario is not valid UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("$: scenario must be a JSON object")
    kind = doc.get("experiment")
    if kind not in PARAMS:
        raise ScenarioError(f"$.experiment: expected one of {', '.join(EXPERIMENTS)}, got {kind!r}")
    seed = doc.get("seed") if seed_override is None else seed_override
    if seed is None:
        raise ScenarioError("$.seed: required (no wall-clock seeding)")
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= U64_MAX:
        raise ScenarioError(f"$.seed: must be an unsigned 64-bit integer, got {seed!r}")
    out_dir = doc.get("output_dir", "out")
    if not isinstance(out_dir, str):
        raise ScenarioError("$.output_dir: must be a string")
    rest = {k: v for k, v in doc.items() if k not in COMMON_KEYS}
    try:
        params = PARAMS[kind].model_validate(rest)
    except ValidationError as exc:
        err = exc.errors()[0]
        path = _path(err["loc"])
        if err["type"] == "extra_forbidden":
            raise ScenarioError(f"{path}: unknown key") from None
        if not err["loc"] and err["type"] == "value_error":
            # cross-field checks carry their own relative path
            raise ScenarioError(f"$.{err['ctx']['error']}") from None
        raise ScenarioError(f"{path}: {err['msg']}") from None
    return Scenario(kind, seed, out_dir, params)
