"""
Seeded simulation of the call auction and goodness-of-fit tooling

Replication r draws from its own Philox stream (seed, stream_id = r), so a
batch gives the same summary whatever the number of worker processes.
"""
from multiprocessing import Pool
from scipy import stats
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union
import logging
import math
import numpy as np

from app.models.model import AuctionParams
from app.schemas.schema import ClearingOutcome, DiscretePmf, FitResult, Histogram, RngState, SampleSummary
from app.services.clearing import clear_auction
from app.services.price_dist import PriceDistribution
from app.utils.config import settings

logger = logging.getLogger(__name__)

MIN_EXPECTED = 5.0


def make_rng(state: RngState) -> np.random.Generator:
    """Counter-based generator addressed by (seed, stream_id)"""
    seq = np.random.SeedSequence(state.seed, spawn_key=(state.stream_id,))
    return np.random.Generator(np.random.Philox(seq))


def simulate_live_count(rate: float, theta: float, horizon: float, rng: np.random.Generator) -> int:
    """
    Orders of one side still live at close

    Submissions form a Poisson process of intensity `rate` on [0, horizon];
    each order is cancelled after an exponential lifetime of rate `theta`
    (theta = 0: never cancelled).
    """
    return int(_live_mask(rate, theta, horizon, rng).sum())


def _live_mask(rate: float, theta: float, horizon: float, rng: np.random.Generator) -> np.ndarray:
    count = rng.poisson(rate * horizon)
    submit = rng.uniform(0.0, horizon, count)
    if theta <= 0:
        return np.ones(count, dtype=bool)
    lifetime = rng.exponential(1.0 / theta, count)
    return submit + lifetime > horizon


def _draw_book(params: AuctionParams, F: PriceDistribution, rng: np.random.Generator):
    """Live ask and bid prices at close"""
    if params.has_cancellation:
        n_asks = simulate_live_count(params.lambda_ask, params.theta_ask, params.horizon, rng)
        n_bids = simulate_live_count(params.lambda_bid, params.theta_bid, params.horizon, rng)
    else:
        n_asks = int(rng.poisson(params.lambda_ask * params.horizon))
        n_bids = int(rng.poisson(params.lambda_bid * params.horizon))
    asks = F.sample(rng, n_asks) if n_asks else np.empty(0)
    bids = F.sample(rng, n_bids) if n_bids else np.empty(0)
    return bids, asks


def simulate_auction(params: AuctionParams, F: PriceDistribution,
                     rng: Union[RngState, np.random.Generator]) -> ClearingOutcome:
    """Simulate one auction and clear it"""
    gen = make_rng(rng) if isinstance(rng, RngState) else rng
    bids, asks = _draw_book(params, F, gen)
    return clear_auction(bids, asks)


def _run_range(task: Tuple[AuctionParams, PriceDistribution, int, int, int]):
    params, F, seed, start, stop = task
    volumes, asks, bids, lows, highs = [], [], [], [], []
    for r in range(start, stop):
        outcome = simulate_auction(params, F, RngState(seed=seed, stream_id=r))
        volumes.append(outcome.volume)
        asks.append(outcome.n_asks)
        bids.append(outcome.n_bids)
        if outcome.bounds is not None:
            lows.append(outcome.lower)
            highs.append(outcome.upper)
    return volumes, asks, bids, lows, highs


def _counts(values: List[int]) -> Dict[int, int]:
    keys, counts = np.unique(np.asarray(values, dtype=int), return_counts=True)
    return {int(k): int(c) for k, c in zip(keys, counts)}


def run_batch(params: AuctionParams, F: PriceDistribution, n_reps: int, seed: int = 0,
              workers: Optional[int] = None) -> SampleSummary:
    """
    Simulate n_reps independent auctions and aggregate their outcomes

    Args:
        params: order flow, cancellations included
        F: price law of the orders
        n_reps: number of replications
        seed: root seed; replication r uses stream r
        workers: process count (defaults to AUCTION_WORKERS)

    Returns:
        SampleSummary with the conditioned samples in replication order
    """
    if n_reps < 1:
        raise ValueError("n_reps must be at least 1")
    workers = settings.workers if workers is None else workers
    workers = max(1, min(workers, n_reps))
    bounds = np.linspace(0, n_reps, workers + 1).astype(int)
    tasks = [(params, F, seed, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
    logger.info("🎲 Running %d replications on %d worker(s), seed %d", n_reps, workers, seed)

    if workers == 1:
        parts = [_run_range(tasks[0])]
    else:
        with Pool(processes=workers) as pool:
            parts = pool.map(_run_range, tasks)

    volumes, asks, bids, lows, highs = ([], [], [], [], [])
    for v, a, b, lo, hi in parts:
        volumes += v
        asks += a
        bids += b
        lows += lo
        highs += hi
    ranges = (np.asarray(highs) - np.asarray(lows)).tolist()
    logger.info("✅ Batch done: %d of %d auctions had both sides", len(lows), n_reps)
    return SampleSummary(
        n_reps=n_reps,
        volume_counts=_counts(volumes),
        ask_counts=_counts(asks),
        bid_counts=_counts(bids),
        L_samples=lows,
        U_samples=highs,
        R_samples=ranges,
        n_conditioned=len(lows),
    )


def summary_json(summary: SampleSummary, max_samples: Optional[int] = None) -> str:
    """JSON export, keeping every stride-th conditioned sample above max_samples"""
    max_samples = settings.max_export_samples if max_samples is None else max_samples
    out = summary.downsampled(max_samples)
    if out.sample_stride > 1:
        logger.warning("⚠️ Down-sampled %d conditioned samples with stride %d", summary.n_conditioned, out.sample_stride)
    return out.model_dump_json(indent=2)


# Goodness of fit

def ks_statistic(sample: Sequence[float], cdf: Callable) -> float:
    """One-sample Kolmogorov-Smirnov distance sup |F_n - F|"""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("KS statistic needs a non-empty sample")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def _pooled_bins(observed: Dict[int, int], expected: DiscretePmf, n_reps: int):
    """
    Observed and expected counts after pooling

    Bins with expected count below 5, observed values outside the expected
    support and the omitted tail mass form one pooled bin. A pooled bin still
    below 5 is merged into the kept bin with the smallest expectation.
    """
    kept_obs, kept_exp = [], []
    pool_obs, pool_exp = 0.0, 0.0
    for k in sorted(expected.masses):
        e = n_reps * expected.masses[k]
        o = observed.get(k, 0)
        if e >= MIN_EXPECTED:
            kept_obs.append(o)
            kept_exp.append(e)
        else:
            pool_obs += o
            pool_exp += e
    pool_obs += sum(c for k, c in observed.items() if k not in expected.masses)
    pool_exp += n_reps * max(1.0 - expected.total(), 0.0)

    if not kept_exp:
        raise ValueError("Expected law gives no bin with an expected count of at least 5")
    if pool_exp >= MIN_EXPECTED:
        kept_obs.append(pool_obs)
        kept_exp.append(pool_exp)
    elif pool_obs > 0 or pool_exp > 0:
        j = int(np.argmin(kept_exp))
        kept_obs[j] += pool_obs
        kept_exp[j] += pool_exp
    return np.asarray(kept_obs, dtype=float), np.asarray(kept_exp, dtype=float)


def chi_square(observed: Dict[int, int], expected: DiscretePmf, n_reps: int) -> float:
    """Pearson statistic sum (O - E)^2 / E over pooled bins"""
    obs, exp = _pooled_bins(observed, expected, n_reps)
    return float(np.sum((obs - exp) ** 2 / exp))


def chi_square_test(observed: Dict[int, int], expected: DiscretePmf, n_reps: int) -> Tuple[float, int, float]:
    """(statistic, degrees of freedom, p-value) with bins - 1 degrees of freedom"""
    obs, exp = _pooled_bins(observed, expected, n_reps)
    dof = obs.size - 1
    if dof < 1:
        raise ValueError("Chi-square test needs at least two pooled bins")
    stat = float(np.sum((obs - exp) ** 2 / exp))
    return stat, dof, float(stats.chi2.sf(stat, dof))


def total_variation(empirical: Dict[int, float], expected: DiscretePmf) -> float:
    support = set(empirical) | set(expected.masses)
    diff = sum(abs(empirical.get(k, 0.0) - expected.mass(k)) for k in support)
    return 0.5 * (diff + expected.tail_bound)


def fit_exponential_mle(sample: Sequence[float]) -> FitResult:
    """Exponential MLE: rate = n / sum(x), with the KS distance to the fitted law"""
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise ValueError("Cannot fit an empty sample")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("Exponential fit needs finite positive values")
    rate = x.size / float(np.sum(x))
    ks = ks_statistic(x, lambda v: -np.expm1(-rate * v))
    return FitResult(rate=rate, sample_size=int(x.size), ks_stat=min(max(ks, 0.0), 1.0))


def survival_table(sample: Sequence[float], fit: FitResult) -> List[Tuple[float, float, float]]:
    """Rows (x, ln of empirical P(X > x), fitted -rate * x) at the distinct sample values"""
    x = np.sort(np.asarray(sample, dtype=float))
    values = np.unique(x)
    surv = (x.size - np.searchsorted(x, values, side="right")) / x.size
    keep = surv > 0
    return [(float(v), math.log(s), -fit.rate * float(v)) for v, s in zip(values[keep], surv[keep])]


def density_histogram(sample: Sequence[float]) -> Histogram:
    """Freedman-Diaconis histogram of a real sample, as a density"""
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise ValueError("Histogram needs a non-empty sample")
    edges = np.histogram_bin_edges(x, bins="fd")
    if edges.size < 2 or edges[-1] <= edges[0]:
        edges = np.array([x.min() - 0.5, x.max() + 0.5])
    counts, edges = np.histogram(x, bins=edges)
    widths = np.diff(edges)
    share = counts / x.size
    return Histogram(
        edges=edges.tolist(),
        density=(share / widths).tolist(),
        stderr=(np.sqrt(share * (1.0 - share) / x.size) / widths).tolist(),
        n_samples=int(x.size),
    )
