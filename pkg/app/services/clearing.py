"""
Clearing of one closed call auction

With n bids and m asks pooled and sorted by price, the clearing prices
maximising traded volume are exactly those between the n-th and (n+1)-th
pooled prices, and the volume is the number of bids among the m highest.
"""
from typing import Iterable, Optional, Sequence
import logging
import math
import numpy as np

from app.models.model import Order
from app.schemas.schema import ClearingOutcome, DiscretePmf
from app.services.special_fn import ln_binomial
from app.utils.config import settings

logger = logging.getLogger(__name__)


def _as_prices(prices: Iterable[float], side: str) -> np.ndarray:
    arr = np.asarray(list(prices), dtype=float)
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"Non-finite {side} price")
    return arr


def _tie_broken_order(bids: np.ndarray, asks: np.ndarray):
    """Pooled prices, bid flags and the ascending order: price, asks before bids, input order"""
    prices = np.concatenate([bids, asks])
    is_bid = np.concatenate([np.ones(bids.size, dtype=bool), np.zeros(asks.size, dtype=bool)])
    order = np.lexsort((np.arange(prices.size), is_bid, prices))
    return prices, is_bid, order


def clear_auction(bid_prices: Sequence[float], ask_prices: Sequence[float]) -> ClearingOutcome:
    """Clear unit-sized bid and ask orders by the order-statistics construction"""
    bids = _as_prices(bid_prices, "bid")
    asks = _as_prices(ask_prices, "ask")
    n, m = bids.size, asks.size
    if n == 0 or m == 0:
        return ClearingOutcome(n_bids=n, n_asks=m, volume=0)

    prices, is_bid, order = _tie_broken_order(bids, asks)
    volume = int(is_bid[order[n:]].sum())
    lower = float(prices[order[n - 1]])
    upper = float(prices[order[n]])
    return ClearingOutcome(n_bids=n, n_asks=m, volume=volume, bounds=(lower, upper))


def clear_auction_oracle(bid_prices: Sequence[float], ask_prices: Sequence[float]) -> ClearingOutcome:
    """
    Reference clearing straight from the supply and demand curves

    A(p) counts asks priced at or below p, B(p) bids priced at or above p.
    Both are evaluated at every distinct pooled price and inside every gap
    between consecutive distinct prices (plus both outer sides). The traded
    volume is the largest min(A, B); the clearing interval is the gap where
    A = B, or the single price where A - B jumps over zero. Quadratic in the
    number of orders.
    """
    bids = _as_prices(bid_prices, "bid")
    asks = _as_prices(ask_prices, "ask")
    n, m = bids.size, asks.size
    if n == 0 or m == 0:
        return ClearingOutcome(n_bids=n, n_asks=m, volume=0)

    levels = np.unique(np.concatenate([bids, asks]))
    supply_at = (asks[None, :] <= levels[:, None]).sum(axis=1)
    demand_at = (bids[None, :] >= levels[:, None]).sum(axis=1)
    # gap g lies between levels[g-1] and levels[g]; g = 0 and g = len(levels) are the outer sides
    supply_gap = np.concatenate([[0], supply_at])
    demand_gap = np.concatenate([demand_at, [0]])
    volume = int(max(np.minimum(supply_gap, demand_gap).max(), np.minimum(supply_at, demand_at).max()))

    excess = supply_gap - demand_gap
    crossing = np.flatnonzero(excess == 0)
    if crossing.size > 1 or (crossing.size == 1 and crossing[0] in (0, levels.size)):
        raise ArithmeticError("Supply and demand curves do not cross inside the book")
    if crossing.size == 1:
        gap = int(crossing[0])
        bounds = (float(levels[gap - 1]), float(levels[gap]))
    else:
        jump = int(np.flatnonzero((excess[:-1] < 0) & (excess[1:] > 0))[0])
        bounds = (float(levels[jump]), float(levels[jump]))
    return ClearingOutcome(n_bids=n, n_asks=m, volume=volume, bounds=bounds)


def clear_orders(orders: Iterable[Order], horizon: float) -> ClearingOutcome:
    """Clear the orders still live when the auction closes at `horizon`"""
    live = [o for o in orders if o.is_live_at(horizon)]
    return clear_auction(
        [o.price for o in live if o.side == "bid"],
        [o.price for o in live if o.side == "ask"],
    )


def conditional_volume_pmf(m: int, n: int, cap: Optional[int] = None) -> DiscretePmf:
    """
    Hypergeometric law of the traded volume given m asks and n bids at close

    P(V=k | m, n) = C(m,k) C(n,k) / C(m+n, n), independent of the price law.
    """
    cap = settings.count_cap if cap is None else cap
    if m < 1 or n < 1:
        raise ValueError("Conditional volume law needs at least one order on each side")
    if m + n > cap:
        raise ValueError(f"m + n = {m + n} exceeds the configured cap of {cap}")

    log_total = ln_binomial(m + n, n)
    masses = {
        k: math.exp(ln_binomial(m, k) + ln_binomial(n, k) - log_total)
        for k in range(min(m, n) + 1)
    }
    total = sum(masses.values())
    if abs(total - 1.0) > 1e-12:
        # renormalise rounding drift; the law itself is exact
        masses = {k: p / total for k, p in masses.items()}
    return DiscretePmf(masses=masses)
