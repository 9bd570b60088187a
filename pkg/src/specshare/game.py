"""Cooperative bandwidth-sharing game between operators.

Active connections in a coalition are modelled as Poisson with mean ``lam``,
one bandwidth unit each. A coalition holding ``B`` units meets its QoS target
when the large-deviations rate of overflow, ``I(B; lam)``, is at least the QoS
exponent ``beta``; the outage probability is then bounded by ``exp(-beta)``.
The payoff of a coalition is the largest mean rate satisfying this.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import CapabilityError, DomainError

PAYOFF_TOL = 1e-9
ORACLE_TOL = 1e-6
MAX_EXACT_PLAYERS = 20


@dataclass(frozen=True)
class OperatorProfile:
    player_id: str
    bandwidth_units: float

    def __post_init__(self):
        if not self.bandwidth_units >= 0:
            raise DomainError(f"bandwidth of {self.player_id!r} must be non-negative")


@dataclass(frozen=True)
class GameParams:
    qos_exponent: float
    players: tuple

    def __post_init__(self):
        if not self.qos_exponent > 0:
            raise DomainError(f"QoS exponent must be positive, got {self.qos_exponent}")
        object.__setattr__(self, "players", tuple(self.players))
        if not self.players:
            raise DomainError("a game needs at least one player")
        ids = [p.player_id for p in self.players]
        if len(set(ids)) != len(ids):
            raise DomainError("player ids must be unique")

    @classmethod
    def from_bandwidths(cls, bandwidths: Sequence[float], beta: float) -> GameParams:
        return cls(beta, tuple(OperatorProfile(str(i + 1), float(b)) for i, b in enumerate(bandwidths)))

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def outage_target(self) -> float:
        return math.exp(-self.qos_exponent)

    def index_of(self, player_id) -> int:
        for i, p in enumerate(self.players):
            if p.player_id == player_id:
                return i
        raise DomainError(f"unknown player {player_id!r}")

    def mask_of(self, coalition: Iterable) -> int:
        mask = 0
        for pid in coalition:
            mask |= 1 << self.index_of(pid)
        return mask

    def members(self, mask: int) -> frozenset:
        return frozenset(p.player_id for i, p in enumerate(self.players) if mask >> i & 1)


class CoalitionValue(NamedTuple):
    coalition: frozenset
    value: float


def rate_function(B: float, lam: float) -> float:
    """Poisson overflow rate ``B ln(B/lam) - B + lam``."""
    if not B > 0:
        raise DomainError(f"bandwidth must be positive, got {B}")
    if not 0 < lam <= B:
        raise DomainError(f"rate must lie in (0, B], got {lam}")
    return B * math.log(B / lam) - B + lam


def payoff_many(B, beta: float, tol: float = PAYOFF_TOL) -> np.ndarray:
    """Vectorized :func:`payoff`.

    Bisection runs until the bracket is no wider than ``tol`` and has also
    collapsed to adjacent doubles. The second condition keeps
    ``rate_function(B, payoff(B, beta))`` close to ``beta`` when the root is
    tiny and the rate is steep. Each entry stops on its own bracket, so the
    scalar and vector paths agree bit for bit.
    """
    if not beta > 0:
        raise DomainError(f"QoS exponent must be positive, got {beta}")
    B = np.asarray(B, dtype=float)
    if np.any(B < 0):
        raise DomainError("bandwidth must be non-negative")
    flat = B.ravel()
    lo = np.zeros_like(flat)
    hi = flat.copy()
    safe = np.where(flat > 0, flat, 1.0)
    active = flat > 0
    while active.any():
        mid = 0.5 * (lo + hi)
        with np.errstate(divide="ignore", over="ignore"):
            rate = safe * np.log(safe / mid) - safe + mid
        # rate above target: connections can still grow
        up = active & (rate > beta)
        down = active & ~(rate > beta)
        lo = np.where(up, mid, lo)
        hi = np.where(down, mid, hi)
        nxt = 0.5 * (lo + hi)
        active &= ~((hi - lo <= tol) & ((nxt == lo) | (nxt == hi)))
    out = np.where(flat > 0, 0.5 * (lo + hi), 0.0)
    return out.reshape(B.shape)


def payoff(B: float, beta: float, tol: float = PAYOFF_TOL) -> float:
    """Largest mean connection rate with ``I(B; lam) >= beta`` (bisection on (0, B])."""
    return float(payoff_many(np.array([B]), beta, tol)[0])


def poisson_tail(k: int, lam: float) -> float:
    """``P(Poisson(lam) > k)`` by direct summation of the probabilities."""
    if lam <= 0:
        return 0.0
    term = math.exp(-lam)
    terms = [term]
    for j in range(1, k + 1):
        term *= lam / j
        terms.append(term)
    return max(0.0, 1.0 - math.fsum(terms))


def payoff_exact_oracle(B: int, beta: float, tol: float = ORACLE_TOL) -> float:
    """Largest ``lam`` with exact overflow probability ``P(X > B) <= exp(-beta)``."""
    if not beta > 0:
        raise DomainError(f"QoS exponent must be positive, got {beta}")
    if B < 0 or int(B) != B:
        raise DomainError(f"bandwidth must be a non-negative integer, got {B}")
    B = int(B)
    target = math.exp(-beta)
    lo, hi = 0.0, float(B) + 1.0
    while poisson_tail(B, hi) <= target:
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if poisson_tail(B, mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo


def coalition_bandwidth(params: GameParams, mask: int) -> float:
    # fsum makes the total independent of member order
    return math.fsum(p.bandwidth_units for i, p in enumerate(params.players) if mask >> i & 1)


def characteristic_function(params: GameParams, coalition: Iterable) -> CoalitionValue:
    mask = params.mask_of(coalition)
    members = params.members(mask)
    if mask == 0:
        return CoalitionValue(members, 0.0)
    return CoalitionValue(members, payoff(coalition_bandwidth(params, mask), params.qos_exponent))


def coalition_values(params: GameParams) -> np.ndarray:
    """``v`` for every coalition, indexed by bitmask (bit ``n`` = player ``n``)."""
    if params.n > MAX_EXACT_PLAYERS:
        raise CapabilityError(f"exact enumeration supports at most {MAX_EXACT_PLAYERS} players")
    totals = np.array([coalition_bandwidth(params, m) for m in range(1 << params.n)])
    return payoff_many(totals, params.qos_exponent)


def independent_sum(params: GameParams) -> float:
    """Total payoff when every operator stays alone."""
    return math.fsum(payoff(p.bandwidth_units, params.qos_exponent) for p in params.players)


def _shapley_weights(n: int) -> list[float]:
    f = math.factorial
    return [f(s) * f(n - s - 1) / f(n) for s in range(n)]


def shapley(params: GameParams, values: np.ndarray | None = None) -> np.ndarray:
    """Exact Shapley value by subset enumeration."""
    n = params.n
    if n > MAX_EXACT_PLAYERS:
        raise CapabilityError(f"exact Shapley supports at most {MAX_EXACT_PLAYERS} players")
    v = coalition_values(params) if values is None else values
    weights = _shapley_weights(n)
    masks = np.arange(1 << n)
    sizes = np.array([bin(m).count("1") for m in masks])
    phi = np.empty(n)
    for i in range(n):
        without = masks[(masks >> i) & 1 == 0]
        marg = v[without | (1 << i)] - v[without]
        w = np.array(weights)[sizes[without]]
        phi[i] = math.fsum(w * marg)
    return phi


def shapley_by_permutations(params: GameParams, values: np.ndarray | None = None) -> np.ndarray:
    """Shapley value as the mean marginal contribution over all join orders."""
    n = params.n
    v = coalition_values(params) if values is None else values
    totals = [[] for _ in range(n)]
    for order in itertools.permutations(range(n)):
        mask = 0
        for i in order:
            totals[i].append(v[mask | 1 << i] - v[mask])
            mask |= 1 << i
    count = math.factorial(n)
    return np.array([math.fsum(t) / count for t in totals])


class CoreCheck(NamedTuple):
    in_core: bool
    blocking_coalition: frozenset | None
    reason: str


def is_in_core(params: GameParams, allocation: Sequence[float], tol: float = 1e-9,
               values: np.ndarray | None = None) -> CoreCheck:
    """Efficiency and coalitional rationality of ``allocation``.

    On failure the witness is a coalition whose value exceeds what the
    allocation gives its members (the grand coalition when efficiency fails).
    """
    x = np.asarray(allocation, dtype=float)
    n = params.n
    if x.shape != (n,):
        raise DomainError(f"allocation has {x.size} entries for {n} players")
    if n > MAX_EXACT_PLAYERS:
        raise CapabilityError(f"exact core check supports at most {MAX_EXACT_PLAYERS} players")
    v = coalition_values(params) if values is None else values
    grand = (1 << n) - 1
    if abs(math.fsum(x) - v[grand]) > tol:
        return CoreCheck(False, params.members(grand), "efficiency")
    for mask in range(1, grand):
        share = math.fsum(x[i] for i in range(n) if mask >> i & 1)
        if share < v[mask] - tol:
            return CoreCheck(False, params.members(mask), "blocked")
    return CoreCheck(True, None, "")


def is_supermodular(params: GameParams, tol: float = 1e-12, values: np.ndarray | None = None) -> bool:
    """Increasing marginal contributions: ``v(S+i)-v(S) <= v(T+i)-v(T)`` for ``S`` in ``T``."""
    n = params.n
    v = coalition_values(params) if values is None else values
    full = (1 << n) - 1
    for i in range(n):
        bit = 1 << i
        for t in range(full + 1):
            if t & bit:
                continue
            gain_t = v[t | bit] - v[t]
            s = t
            while True:  # all subsets of t
                if v[s | bit] - v[s] > gain_t + tol:
                    return False
                if s == 0:
                    break
                s = (s - 1) & t
    return True
