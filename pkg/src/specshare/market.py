"""Spectrum marketplace: order book, epoch clearing and settlement.

Each epoch runs a sealed-bid uniform-price double auction per (region, mode).
Units are block-epochs for Lease and HybridGrant listings and feed
subscriptions for InfoFeed listings. The clearing price is the midpoint of
the marginal ask and the marginal bid.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Sequence

from . import game
from .errors import DomainError, MarketError, SimError
from .rng import make_rng
from .spectrum import AllocationMap, contiguous_runs


class Role(str, Enum):
    SELLER = "seller"
    BUYER = "buyer"
    BROKER = "broker"


class Mode(str, Enum):
    INFO_FEED = "info-feed"        # access to the seller's allocation data
    LEASE = "lease"                # exclusive use of statically owned blocks
    HYBRID_GRANT = "hybrid-grant"  # coarse chunks of under-used blocks

    @property
    def exclusive(self) -> bool:
        return self is not Mode.INFO_FEED


class OrderRejected(MarketError):
    def __init__(self, order_id: str, reason: str):
        self.order_id = order_id
        self.reason = reason
        super().__init__(f"order {order_id!r} rejected: {reason}")


@dataclass(frozen=True)
class Participant:
    id: str
    roles: frozenset
    bandwidth_units: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "roles", frozenset(Role(r) for r in self.roles))
        if self.bandwidth_units < 0:
            raise DomainError(f"participant {self.id!r} has negative bandwidth")
        if Role.BROKER in self.roles and self.bandwidth_units > 0:
            raise DomainError(f"broker {self.id!r} may not hold spectrum in the market")

    def profile(self) -> game.OperatorProfile:
        return game.OperatorProfile(self.id, self.bandwidth_units)


@dataclass(frozen=True)
class Listing:
    id: str
    seller: str
    mode: Mode
    region: str
    blocks: range
    window: tuple               # [start_epoch, end_epoch)
    ask: float
    timestamp: float = 0.0
    capacity: int | None = None  # InfoFeed subscriptions; defaults to one per block

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "blocks", range(self.blocks.start, self.blocks.stop))
        object.__setattr__(self, "window", tuple(self.window))
        if len(self.blocks) == 0:
            raise OrderRejected(self.id, "empty block range")
        if len(self.window) != 2 or self.window[1] <= self.window[0]:
            raise OrderRejected(self.id, "empty time window")
        if not self.ask >= 0:
            raise OrderRejected(self.id, "negative ask")
        if self.capacity is not None and self.capacity < 1:
            raise OrderRejected(self.id, "feed capacity must be at least 1")

    @property
    def units(self) -> int:
        if self.mode is Mode.INFO_FEED and self.capacity is not None:
            return self.capacity
        return len(self.blocks)

    def active(self, epoch: int) -> bool:
        return self.window[0] <= epoch < self.window[1]


@dataclass(frozen=True)
class Bid:
    id: str
    buyer: str
    mode: Mode
    region: str
    quantity: int
    limit: float
    timestamp: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.quantity < 1:
            raise OrderRejected(self.id, "quantity must be at least 1")
        if not self.limit >= 0:
            raise OrderRejected(self.id, "negative limit price")


@dataclass(frozen=True)
class Trade:
    trade_id: str
    epoch: int
    mode: Mode
    region: str
    listing_id: str
    bid_id: str
    seller: str
    buyer: str
    quantity: int
    price: float
    ask: float
    limit: float
    blocks: tuple = ()

    @property
    def surplus(self) -> float:
        return self.quantity * (self.limit - self.ask)


def _ask_key(listing: Listing):
    return (listing.ask, listing.timestamp, listing.id)


def _bid_key(bid: Bid):
    return (-bid.limit, bid.timestamp, bid.id)


@dataclass(frozen=True)
class OrderBook:
    """Orders for one clearing round, with the license maps used to verify sellers.

    ``licenses`` maps a region name to the :class:`AllocationMap` recording
    which participant holds each block.
    """

    licenses: Mapping
    listings: tuple = ()
    bids: tuple = ()

    def _ids(self) -> set:
        return {o.id for o in self.listings} | {o.id for o in self.bids}

    def post_listing(self, listing: Listing) -> OrderBook:
        if listing.id in self._ids():
            raise MarketError(f"duplicate order id {listing.id!r}")
        lic = self.licenses.get(listing.region)
        if lic is None:
            raise OrderRejected(listing.id, f"unknown region {listing.region!r}")
        if listing.blocks.start < 0 or listing.blocks.stop > lic.block_count:
            raise OrderRejected(listing.id, "block range outside the band")
        for b in listing.blocks:
            e = lic.entry(b)
            if e is None or e.owner != listing.seller:
                raise OrderRejected(listing.id, f"seller {listing.seller!r} does not own block {b}")
        if listing.mode.exclusive:
            for other in self.listings:
                if (other.mode.exclusive and other.region == listing.region
                        and _overlap(other.blocks, listing.blocks)
                        and other.window[0] < listing.window[1] and listing.window[0] < other.window[1]):
                    raise OrderRejected(listing.id, f"blocks already offered by {other.id!r}")
        listings = tuple(sorted(self.listings + (listing,), key=_ask_key))
        return OrderBook(self.licenses, listings, self.bids)

    def post_bid(self, bid: Bid) -> OrderBook:
        if bid.id in self._ids():
            raise MarketError(f"duplicate order id {bid.id!r}")
        if bid.region not in self.licenses:
            raise OrderRejected(bid.id, f"unknown region {bid.region!r}")
        bids = tuple(sorted(self.bids + (bid,), key=_bid_key))
        return OrderBook(self.licenses, self.listings, bids)


def _overlap(a: range, b: range) -> bool:
    return a.start < b.stop and b.start < a.stop


class ClearingResult(NamedTuple):
    trades: tuple
    prices: dict        # (region, mode) -> clearing price


def clear_market(asks: Sequence[Listing], bids: Sequence[Bid]):
    """Match one (region, mode) market.

    Returns ``(matches, price)`` where ``matches`` lists
    ``(listing, bid, quantity, first_unit_offset)`` in execution order and
    ``price`` is ``None`` when nothing crosses.
    """
    asks = sorted(asks, key=_ask_key)
    bids = sorted(bids, key=_bid_key)
    matches = []
    i = j = 0
    left_a = asks[0].units if asks else 0
    left_b = bids[0].quantity if bids else 0
    marginal = None
    while i < len(asks) and j < len(bids) and asks[i].ask <= bids[j].limit:
        q = min(left_a, left_b)
        matches.append((asks[i], bids[j], q, asks[i].units - left_a))
        marginal = (asks[i].ask, bids[j].limit)
        left_a -= q
        left_b -= q
        if left_a == 0:
            i += 1
            left_a = asks[i].units if i < len(asks) else 0
        if left_b == 0:
            j += 1
            left_b = bids[j].quantity if j < len(bids) else 0
    if marginal is None:
        return [], None
    return matches, 0.5 * (marginal[0] + marginal[1])


def clear_epoch(book: OrderBook, epoch: int) -> ClearingResult:
    markets: dict = defaultdict(lambda: ([], []))
    for listing in book.listings:
        if listing.active(epoch):
            markets[(listing.region, listing.mode)][0].append(listing)
    for bid in book.bids:
        markets[(bid.region, bid.mode)][1].append(bid)
    trades, prices = [], {}
    for key in sorted(markets, key=lambda k: (k[0], k[1].value)):
        asks, bids = markets[key]
        matches, price = clear_market(asks, bids)
        if price is None:
            continue
        prices[key] = price
        for listing, bid, q, offset in matches:
            blocks = ()
            if listing.mode.exclusive:
                blocks = tuple(listing.blocks[offset:offset + q])
            trades.append(Trade(f"e{epoch}:{listing.id}:{bid.id}", epoch, listing.mode, listing.region,
                                listing.id, bid.id, listing.seller, bid.buyer, q, price,
                                listing.ask, bid.limit, blocks))
    return ClearingResult(tuple(trades), prices)


@dataclass(frozen=True)
class Ledger:
    """Append-only trade record with per-participant balances."""

    trades: tuple = ()
    balances: Mapping = field(default_factory=dict)
    fee_bps: float = 0.0
    broker: str | None = None

    def balance(self, pid: str) -> float:
        return self.balances.get(pid, 0.0)

    @property
    def settled_ids(self) -> frozenset:
        return frozenset(t.trade_id for t in self.trades)


def settle(ledger: Ledger, trades: Iterable[Trade]) -> Ledger:
    """Buyer pays ``price * quantity``; the seller receives it less the broker fee."""
    trades = tuple(trades)
    if not trades:
        return ledger
    seen = set(ledger.settled_ids)
    bal = dict(ledger.balances)
    for t in trades:
        if t.trade_id in seen:
            raise MarketError(f"trade {t.trade_id!r} already settled")
        seen.add(t.trade_id)
        amount = t.price * t.quantity
        fee = amount * ledger.fee_bps / 1e4 if ledger.broker else 0.0
        bal[t.buyer] = bal.get(t.buyer, 0.0) - amount
        bal[t.seller] = bal.get(t.seller, 0.0) + (amount - fee)
        if fee:
            bal[ledger.broker] = bal.get(ledger.broker, 0.0) + fee
    return Ledger(ledger.trades + trades, bal, ledger.fee_bps, ledger.broker)


def apply_trades(usage: Mapping, trades: Iterable[Trade]) -> dict:
    """Mark exclusively traded blocks as used by their buyers.

    ``usage`` maps region to the :class:`AllocationMap` of blocks in active
    use; InfoFeed trades move no blocks.
    """
    out = dict(usage)
    for t in trades:
        if t.mode.exclusive and t.blocks:
            tag = f"{t.mode.value}:{t.trade_id}"
            out[t.region] = out[t.region].allocate(t.blocks, t.buyer, tag)
    return out


def info_feeds(ledger: Ledger) -> list:
    """(buyer, seller, region, epoch) tuples granting read access to allocation data."""
    return [(t.buyer, t.seller, t.region, t.epoch) for t in ledger.trades if t.mode is Mode.INFO_FEED]


# -- broker coalition evaluation ------------------------------------------

class CoalitionDecision(NamedTuple):
    accepted: bool
    division: dict         # participant id -> Shapley share
    standalone: dict       # participant id -> v({n})
    blocking_player: str | None


def evaluate_coalition(broker: Participant, proposal: Iterable[str], beta: float,
                       participants: Mapping[str, Participant], tol: float = 1e-12) -> CoalitionDecision:
    """Accept a bandwidth-pooling coalition iff its Shapley split is individually rational."""
    if Role.BROKER not in broker.roles:
        raise MarketError(f"{broker.id!r} is not a broker")
    ids = list(dict.fromkeys(proposal))
    if not ids:
        raise DomainError("empty coalition proposal")
    for pid in ids:
        if pid not in participants:
            raise MarketError(f"unknown participant {pid!r}")
    params = game.GameParams(beta, tuple(participants[pid].profile() for pid in ids))
    values = game.coalition_values(params)
    phi = game.shapley(params, values)
    division = {pid: float(phi[k]) for k, pid in enumerate(ids)}
    standalone = {pid: float(values[1 << k]) for k, pid in enumerate(ids)}
    for pid in ids:
        if division[pid] < standalone[pid] - tol:
            return CoalitionDecision(False, division, standalone, pid)
    return CoalitionDecision(True, division, standalone, None)


# -- epoch-driven simulation ----------------------------------------------

@dataclass(frozen=True)
class RegionSpec:
    name: str
    block_count: int = 100


@dataclass(frozen=True)
class SellerSpec:
    id: str
    region: str
    blocks: tuple          # [start, stop)
    mode: Mode = Mode.LEASE
    ask: float = 1.0
    ask_jitter: float = 0.0
    primary_load: float = 0.5
    grant_size: int = 10
    feed_capacity: int = 1


@dataclass(frozen=True)
class BuyerSpec:
    id: str
    region: str
    mode: Mode = Mode.LEASE
    demand: tuple = ((10, 2.0),)   # (quantity, limit) steps
    demand_jitter: float = 0.0


@dataclass(frozen=True)
class MarketScenario:
    epochs: int
    regions: tuple
    sellers: tuple
    buyers: tuple = ()
    broker: str | None = None
    fee_bps: float = 0.0


class EpochMetrics(NamedTuple):
    epoch: int
    trades: int
    volume: int
    surplus: float
    pre_utilization: float
    post_utilization: float


class MarketRun(NamedTuple):
    ledger: Ledger
    metrics: tuple
    prices: tuple          # per epoch: dict (region, mode) -> price


def _utilization(usage: Mapping) -> float:
    total = sum(m.block_count for m in usage.values())
    used = sum(len(m.allocated_blocks()) for m in usage.values())
    return used / total


def _check_scenario(sc: MarketScenario):
    if sc.epochs < 0:
        raise SimError("epochs: must be non-negative")
    regions = {r.name: r for r in sc.regions}
    if len(regions) != len(sc.regions):
        raise SimError("regions: duplicate region name")
    ids = [s.id for s in sc.sellers] + [b.id for b in sc.buyers] + ([sc.broker] if sc.broker else [])
    if len(set(ids)) != len(ids):
        raise SimError("participants: ids must be unique across sellers, buyers and broker")
    for k, s in enumerate(sc.sellers):
        r = regions.get(s.region)
        if r is None:
            raise SimError(f"sellers[{k}].region: unknown region {s.region!r}")
        if not 0 <= s.blocks[0] < s.blocks[1] <= r.block_count:
            raise SimError(f"sellers[{k}].blocks: range outside region {s.region!r}")
        if not 0.0 <= s.primary_load <= 1.0:
            raise SimError(f"sellers[{k}].primary_load: must lie in [0, 1]")
    for k, b in enumerate(sc.buyers):
        if b.region not in regions:
            raise SimError(f"buyers[{k}].region: unknown region {b.region!r}")


def build_licenses(sc: MarketScenario) -> dict:
    lic = {r.name: AllocationMap.empty(r.block_count) for r in sc.regions}
    for s in sc.sellers:
        lic[s.region] = lic[s.region].allocate(range(*s.blocks), s.id, "license")
    return lic


def run_market_sim(sc: MarketScenario, seed: int) -> MarketRun:
    """Drive ``sc.epochs`` clearing rounds.

    Sellers' own traffic occupies each licensed block independently with
    probability ``primary_load``; the remaining free blocks are offered as
    Lease runs or whole HybridGrant chunks, while InfoFeed sellers sell
    subscriptions to their allocation data.
    """
    _check_scenario(sc)
    licenses = build_licenses(sc)
    ledger = Ledger(fee_bps=sc.fee_bps, broker=sc.broker)
    metrics, prices = [], []
    for epoch in range(sc.epochs):
        usage = {r.name: AllocationMap.empty(r.block_count) for r in sc.regions}
        book = OrderBook(licenses)
        stamp = 0
        for s in sc.sellers:
            rng = make_rng(seed, "market", epoch, "seller", s.id)
            owned = range(*s.blocks)
            busy = [b for b, x in zip(owned, rng.random(len(owned))) if x < s.primary_load]
            usage[s.region] = usage[s.region].allocate(busy, s.id, "primary")
            ask = s.ask * (1.0 + s.ask_jitter * (2.0 * rng.random() - 1.0))
            free = set(owned) - set(busy)
            if s.mode is Mode.INFO_FEED:
                runs = [owned]
            elif s.mode is Mode.LEASE:
                runs = contiguous_runs(free)
            else:
                runs = [range(c, c + s.grant_size) for c in range(owned.start, owned.stop - s.grant_size + 1,
                                                              s.grant_size)
                        if all(b in free for b in range(c, c + s.grant_size))]
            for k, run in enumerate(runs):
                cap = s.feed_capacity if s.mode is Mode.INFO_FEED else None
                book = book.post_listing(Listing(f"L{epoch}-{s.id}-{k}", s.id, s.mode, s.region, run,
                                                 (epoch, epoch + 1), ask, stamp, cap))
                stamp += 1
        for b in sc.buyers:
            rng = make_rng(seed, "market", epoch, "buyer", b.id)
            for k, (qty, limit) in enumerate(b.demand):
                q = int(math.floor(qty * (1.0 + b.demand_jitter * (2.0 * rng.random() - 1.0)) + 0.5))
                if q < 1:
                    continue
                book = book.post_bid(Bid(f"B{epoch}-{b.id}-{k}", b.id, b.mode, b.region, q, float(limit), stamp))
                stamp += 1
        pre = _utilization(usage)
        result = clear_epoch(book, epoch)
        ledger = settle(ledger, result.trades)
        usage = apply_trades(usage, result.trades)
        metrics.append(EpochMetrics(epoch, len(result.trades), sum(t.quantity for t in result.trades),
                                    math.fsum(t.surplus for t in result.trades), pre, _utilization(usage)))
        prices.append(result.prices)
    return MarketRun(ledger, tuple(metrics), tuple(prices))


def double_lease_violations(ledger: Ledger) -> list:
    """(region, block, epoch) keys sold more than once in exclusive modes."""
    seen, bad = set(), []
    for t in ledger.trades:
        if not t.mode.exclusive:
            continue
        for b in t.blocks:
            key = (t.region, b, t.epoch)
            if key in seen:
                bad.append(key)
            seen.add(key)
    return bad
