"""Experiment drivers: scenario parameters in, output tables out.

Each driver returns a :class:`Result` holding named tables, keyed by
output file stem, and a dict of scalar metrics for the run report.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import game, geoleo, market, ntniot
from .geom import OrbitSpec
from .rng import make_rng
from .scenario import Scenario
from .spectrum import AllocationMap, BandPlan


@dataclass
class Table:
    header: tuple
    rows: list


@dataclass
class Result:
    tables: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _orbit(cfg) -> OrbitSpec:
    return OrbitSpec(cfg.altitude_km, cfg.inclination_deg, cfg.raan_deg, cfg.arg_latitude0_deg, cfg.epoch_s)


def run_geo_leo(p, seed: int, threads: int = 1) -> Result:
    band = BandPlan(p.band.center_freq_hz, p.band.total_bw_hz, p.band.block_bw_hz)
    fp = geoleo.geo_footprint(p.geo_lon_deg, p.min_elev_deg)
    geo = geoleo.place_geo_users(fp, band, p.user_count, p.occupied_fraction, seed)
    link = geoleo.LeoLink(**p.link.model_dump())
    points = [(h, i) for h in p.altitudes_km for i in p.inclinations_deg]

    def one(point):
        h, inc = point
        orbit = OrbitSpec(h, inc, p.raan_deg, p.arg_latitude0_deg)
        return geoleo.throughput_stats(orbit, geo, link, p.sample_count, seed, p.min_elev_deg, p.horizon_s)

    stats = _map(one, points, threads)
    rows = [(h, i, s.avg_throughput_bps, s.mean_reusable_hz) for (h, i), s in zip(points, stats)]
    return Result({"geo-leo-reuse": Table(("altitude_km", "inclination_deg", "avg_throughput_bps",
                                           "mean_reusable_hz"), rows)})


def build_population(p, seed: int) -> ntniot.PopulationGrid:
    grid = ntniot.CellGrid(**p.grid.model_dump())
    blobs = [ntniot.PopulationBlob(**b.model_dump()) for b in p.blobs]
    land = None if p.land is None else [ntniot.LandBox(**b.model_dump()) for b in p.land]
    return ntniot.synth_population_grid(blobs, land, grid, seed, p.jitter)


def run_ntn_sinr(p, seed: int, threads: int = 1) -> Result:
    pop = build_population(p, seed)
    model = ntniot.InterferenceModel(**p.interference.model_dump())
    series = ntniot.sinr_timeseries(_orbit(p.orbit), pop, model, p.step_s, p.duration_s,
                                    rotate_earth=p.rotate_earth)
    seg = ntniot.segment_means(series, pop, p.dense_fraction)
    rows = list(zip(series.t_s, series.lat_deg, series.lon_deg, series.interference_w, series.sinr_db))
    metrics = {"snr_db": series.snr_db, "ocean_mean_sinr_db": seg.ocean_db, "city_mean_sinr_db": seg.city_db,
               "ocean_samples": seg.ocean_samples, "city_samples": seg.city_samples}
    return Result({"ntn-sinr": Table(("t_s", "lat", "lon", "interference_w", "sinr_db"), rows)}, metrics)


def rem_truth(p, seed: int) -> ntniot.SensingTruth:
    grid = ntniot.CellGrid(**p.grid.model_dump())
    rng = make_rng(seed, "rem_truth")
    busy = rng.random((grid.n_cells, p.n_blocks)) < p.occupancy_prob
    maps = []
    for cell in range(grid.n_cells):
        m = AllocationMap.empty(p.n_blocks)
        maps.append(m.allocate(np.flatnonzero(busy[cell]), "tn", f"cell{cell}"))
    return ntniot.SensingTruth.from_allocations(grid, maps, p.sensing_snr_db, p.noise_floor_db)


def rem_sensors(p, grid: ntniot.CellGrid, seed: int) -> list:
    rng = make_rng(seed, "rem_sensors")
    sensors = []
    for cell in range(grid.n_cells):
        covered = rng.random() < p.ru_coverage
        offsets = rng.uniform(-0.5, 0.5, (p.rus_per_cell, 2)) * grid.cell_deg * 0.99
        if not covered:
            continue
        lat, lon = grid.cell_center(cell)
        for k in range(p.rus_per_cell):
            sensors.append(ntniot.RuSensor(f"ru{cell}-{k}", lat + offsets[k, 0], lon + offsets[k, 1],
                                           tuple(range(p.n_blocks)), p.threshold_db, p.noise_std_db))
    return sensors


_BELIEF_NAMES = {ntniot.Belief.FREE: "free", ntniot.Belief.OCCUPIED: "occupied", ntniot.Belief.UNKNOWN: "unknown"}


def run_rem(p, seed: int, threads: int = 1) -> Result:
    truth = rem_truth(p, seed)
    grid = truth.grid
    sensors = rem_sensors(p, grid, seed)
    reports = [ntniot.sense(ru, truth, seed) for ru in sensors]
    if not reports:
        rem = ntniot.RadioEnvironmentMap(grid, np.full(truth.occupied.shape, ntniot.Belief.UNKNOWN, np.int8),
                                         p.timestamp, ((),) * grid.n_cells)
    else:
        rem = ntniot.build_rem(reports, grid, p.n_blocks, p.timestamp)
    fa, md = ntniot.rem_accuracy(rem, truth)
    known = int((rem.belief != ntniot.Belief.UNKNOWN).sum())
    rows = []
    for cell in range(grid.n_cells):
        lat, lon = grid.cell_center(cell)
        for b in range(p.n_blocks):
            rows.append((lat, lon, b, _BELIEF_NAMES[ntniot.Belief(rem.belief[cell, b])]))
    metrics = {"false_alarm_rate": fa, "missed_detection_rate": md, "known_pairs": known}
    return Result({
        "rem": Table(("cell_lat", "cell_lon", "block", "belief"), rows),
        "rem_metrics": Table(("false_alarm_rate", "missed_detection_rate", "known_pairs"), [(fa, md, known)]),
    }, metrics)


def run_coalition(p, seed: int, threads: int = 1) -> Result:
    def one(beta):
        params = game.GameParams.from_bandwidths(p.bandwidths, beta)
        values = game.coalition_values(params)
        return params, values, game.shapley(params, values)

    solved = _map(one, p.betas, threads)
    value_rows, shapley_rows = [], []
    for beta, (params, values, phi) in zip(p.betas, solved):
        value_rows.extend((beta, mask, float(v)) for mask, v in enumerate(values))
        shapley_rows.extend((beta, pl.player_id, float(x)) for pl, x in zip(params.players, phi))
    return Result({
        "coalition": Table(("beta", "coalition_bitmask", "value"), value_rows),
        "coalition_shapley": Table(("beta", "player", "shapley"), shapley_rows),
    })


def market_scenario(p) -> market.MarketScenario:
    return market.MarketScenario(
        epochs=p.epochs,
        regions=tuple(market.RegionSpec(r.name, r.block_count) for r in p.regions),
        sellers=tuple(market.SellerSpec(s.id, s.region, tuple(s.blocks), market.Mode(s.mode), s.ask,
                                        s.ask_jitter, s.primary_load, s.grant_size, s.feed_capacity)
                      for s in p.sellers),
        buyers=tuple(market.BuyerSpec(b.id, b.region, market.Mode(b.mode),
                                      tuple((int(q), float(lim)) for q, lim in b.demand), b.demand_jitter)
                     for b in p.buyers),
        broker=p.broker,
        fee_bps=p.fee_bps,
    )


def run_market(p, seed: int, threads: int = 1) -> Result:
    run = market.run_market_sim(market_scenario(p), seed)
    rows = [(t.epoch, t.mode.value, t.region, t.listing_id, t.bid_id, t.quantity, t.price)
            for t in run.ledger.trades]
    volume = sum(m.volume for m in run.metrics)
    surplus = float(sum(m.surplus for m in run.metrics))
    final = run.metrics[-1].post_utilization if run.metrics else 0.0
    metrics = {"total_volume": volume, "total_surplus": surplus, "final_utilization": final,
               "trades": len(run.ledger.trades)}
    return Result({
        "market-sim": Table(("epoch", "mode", "region", "listing", "bid", "qty", "price"), rows),
        "market-sim_summary": Table(("total_volume", "total_surplus", "final_utilization"),
                                    [(volume, surplus, final)]),
    }, metrics)


DRIVERS = {
    "geo-leo-reuse": run_geo_leo,
    "ntn-sinr": run_ntn_sinr,
    "rem": run_rem,
    "coalition": run_coalition,
    "market-sim": run_market,
}


def run_scenario(sc: Scenario, threads: int = 1) -> Result:
    return DRIVERS[sc.experiment](sc.params, sc.seed, threads)
