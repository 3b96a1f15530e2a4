"""
Acceptance suite: exact laws against each other, against brute-force
oracles and against seeded Monte Carlo

The report holds no timings, so a fixed seed gives a byte-identical report
whatever the worker count.
"""
from itertools import combinations
from scipy import integrate, special
from typing import Callable, Dict, List, Optional, Tuple
import logging
import math
import numpy as np

from app.models.model import AuctionParams, effective_params, survival_time
from app.schemas.schema import CheckResult, Histogram, RngState, ValidationReport
from app.services import asymptotic, exact
from app.services.clearing import clear_auction, clear_auction_oracle, conditional_volume_pmf
from app.services.montecarlo import (
    chi_square_test, density_histogram, ks_statistic, make_rng, run_batch, total_variation,
)
from app.services.price_dist import make_exponential, make_normal, make_uniform
from app.services.special_fn import log_poisson_pmf, std_normal_cdf

logger = logging.getLogger(__name__)

ALPHAS = (0.125, 0.25, 0.375, 0.5)
KS_SE = 0.87


def _result(name: str, statistic: float, tolerance: float, detail: str = "", passed: Optional[bool] = None,
            binning: Optional[str] = None) -> CheckResult:
    ok = statistic <= tolerance if passed is None else passed
    level = logging.INFO if ok else logging.WARNING
    logger.log(level, "%s %s: %.6g (tolerance %.3g) %s", "✅" if ok else "❌", name, statistic, tolerance, detail)
    return CheckResult(name=name, passed=bool(ok), statistic=float(statistic), tolerance=tolerance, detail=detail,
                       binning=binning)


def _auction(lambda_T: float, alpha: float, **kw) -> AuctionParams:
    return AuctionParams(lambda_total=lambda_T, alpha=alpha, horizon=1.0, **kw)


def check_no_trade(seed: int, ctx: dict) -> CheckResult:
    balanced = exact.prob_no_trade(_auction(10, 0.5))
    skewed = exact.prob_no_trade(_auction(10, 0.125))
    large = max(exact.prob_no_trade(_auction(100, a)) for a in ALPHAS)
    ratio = max(abs(balanced - 0.0404) / 0.0005, abs(skewed - 0.334) / 0.002, large / 1e-5)
    detail = f"P(V=0): {balanced:.6f} at alpha=0.5, {skewed:.6f} at alpha=0.125, max {large:.3e} at lambda*T=100"
    return _result("no_trade_probability", ratio, 1.0, detail, passed=ratio < 1.0)


def check_volume_forms(seed: int, ctx: dict) -> CheckResult:
    worst = 0.0
    for lt in (1.0, 10.0, 100.0):
        for alpha in (0.125, 0.5):
            params = _auction(lt, alpha)
            for k in range(21):
                series = exact.volume_pmf(params, k).value
                worst = max(worst, abs(series - exact.volume_pmf_hyp(params, k).value))
                if alpha == 0.5:
                    worst = max(worst, abs(series - exact.volume_pmf_symmetric(lt, k)))
    return _result("volume_form_equivalence", worst, 1e-10, "double series vs 1F1 series vs symmetric closed form")


def poisson_mixture_volume(lambda_T: float, alpha: float, k: int, count_max: int = 200) -> float:
    """P(V = k) by brute force: Poisson weights times hypergeometric masses, counts up to count_max"""
    m = np.arange(count_max + 1, dtype=float)[:, None]
    n = np.arange(count_max + 1, dtype=float)[None, :]
    log_w = log_poisson_pmf(m, alpha * lambda_T) + log_poisson_pmf(n, (1.0 - alpha) * lambda_T)
    empty = (m == 0) | (n == 0)
    valid = (m >= k) & (n >= k) & ~empty
    with np.errstate(invalid="ignore"):
        log_h = (special.gammaln(m + 1) - special.gammaln(k + 1) - special.gammaln(m - k + 1)
                 + special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)
                 - special.gammaln(m + n + 1) + special.gammaln(m + 1) + special.gammaln(n + 1))
    total = float(np.sum(np.exp(log_w[valid] + log_h[valid]))) if k <= count_max else 0.0
    if k == 0:
        total += float(np.sum(np.exp(log_w[empty])))
    return total


def check_mixture_oracle(seed: int, ctx: dict) -> CheckResult:
    worst = 0.0
    for lt, alpha in ((4.0, 0.25), (30.0, 0.25), (30.0, 0.5)):
        params = _auction(lt, alpha)
        for k in range(21):
            worst = max(worst, abs(exact.volume_pmf(params, k).value - poisson_mixture_volume(lt, alpha, k)))
    return _result("poisson_mixture_oracle", worst, 1e-9, "volume_pmf vs Poisson x hypergeometric sum, counts <= 200")


def labeling_volume_law(m: int, n: int) -> Dict[int, float]:
    """Volume law from clearing every placement of n bids among m + n distinct sorted prices"""
    points = np.arange(m + n, dtype=float)
    counts: Dict[int, int] = {}
    total = 0
    for bid_slots in combinations(range(m + n), n):
        mask = np.zeros(m + n, dtype=bool)
        mask[list(bid_slots)] = True
        v = clear_auction(points[mask], points[~mask]).volume
        counts[v] = counts.get(v, 0) + 1
        total += 1
    return {k: c / total for k, c in counts.items()}


def check_clearing(seed: int, ctx: dict) -> CheckResult:
    rng = make_rng(RngState(seed=seed, stream_id=0))
    laws = (make_uniform(), make_normal(), make_exponential())
    mismatches = 0
    instances = ctx.get("clearing_instances", 10_000)
    for i in range(instances):
        F = laws[i % len(laws)]
        n, m = int(rng.integers(0, 51)), int(rng.integers(0, 51))
        bids, asks = F.sample(rng, n), F.sample(rng, m)
        fast, oracle = clear_auction(bids, asks), clear_auction_oracle(bids, asks)
        if (fast.volume, fast.bounds) != (oracle.volume, oracle.bounds):
            mismatches += 1
    worst = 0.0
    max_count = ctx.get("enumeration_max", 8)
    for m in range(1, max_count + 1):
        for n in range(1, max_count + 1):
            law = conditional_volume_pmf(m, n)
            enumerated = labeling_volume_law(m, n)
            for k in range(min(m, n) + 1):
                worst = max(worst, abs(law.mass(k) - enumerated.get(k, 0.0)))
    detail = f"{mismatches} oracle mismatches on {instances} books; enumeration error {worst:.2e}"
    return _result("clearing_correctness", worst, 1e-12, detail, passed=mismatches == 0 and worst <= 1e-12)


def check_mc_volume(seed: int, ctx: dict) -> CheckResult:
    reps = ctx.get("volume_reps", 100_000)
    worst_tv, worst_p = 0.0, 1.0
    j = 0
    for lt in (5.0, 10.0, 50.0):
        for alpha in ALPHAS:
            params = _auction(lt, alpha)
            summary = run_batch(params, make_uniform(), reps, seed + j, ctx.get("workers"))
            law = exact.volume_distribution(params)
            worst_tv = max(worst_tv, total_variation(summary.empirical_pmf(), law))
            worst_p = min(worst_p, chi_square_test(summary.volume_counts, law, reps)[2])
            j += 1
    detail = f"{reps} reps per cell; smallest chi-square p-value {worst_p:.4f}"
    return _result("montecarlo_volume_law", worst_tv, 0.01, detail)


def check_price_normality(seed: int, ctx: dict) -> CheckResult:
    reps = ctx.get("price_reps", 10_000)
    sizes = [5.0, 100.0] + ([1000.0] if ctx.get("extended") else [])
    F = make_uniform()
    distances, noise = [], []
    for j, lt in enumerate(sizes):
        params = _auction(lt, 0.3)
        summary = run_batch(params, F, reps, seed + j, ctx.get("workers"))
        law = asymptotic.asymptotic_price(params, F)
        ks = max(ks_statistic(law.standardize(summary.L_samples), std_normal_cdf),
                 ks_statistic(law.standardize(summary.U_samples), std_normal_cdf))
        distances.append(ks)
        noise.append(KS_SE / math.sqrt(summary.n_conditioned))
    inversions = [i for i in range(1, len(distances)) if distances[i] > distances[i - 1]]
    monotone = len(inversions) <= 1 and all(
        distances[i] - distances[i - 1] <= 2.0 * max(noise[i], noise[i - 1]) for i in inversions
    )
    final_ok = distances[-1] < 0.05 if ctx.get("extended") else True
    detail = "KS by lambda*T: " + ", ".join(f"{lt:g}={d:.4f}" for lt, d in zip(sizes, distances))
    return _result("price_bound_normality", distances[-1], 0.05, detail, passed=monotone and final_ok)


def check_range_normalisation(seed: int, ctx: dict) -> CheckResult:
    worst = 0.0
    for lt in (2.0, 10.0, 100.0):
        for alpha in (0.125, 0.5):
            params = _auction(lt, alpha)
            total, _ = integrate.quad(lambda d: exact.range_density_uniform(params, d), 0.0, 1.0,
                                      epsabs=1e-13, epsrel=1e-12, limit=200)
            worst = max(worst, abs(total - 1.0))
    return _result("range_normalisation", worst, 1e-8, "closed-form uniform range density")


def check_range_mixture(seed: int, ctx: dict) -> CheckResult:
    params = _auction(10.0, 0.3)
    F = make_uniform()
    worst = 0.0
    for delta in (0.05, 0.2, 0.5):
        general = exact.range_density_general(params, F, delta).value
        worst = max(worst, abs(general - exact.range_density_uniform(params, delta)))
    return _result("range_mixture_vs_closed_form", worst, 1e-6, "Poisson mixture with uniform prices")


def check_range_exponential(seed: int, ctx: dict) -> CheckResult:
    reps = ctx.get("range_reps", 10_000)
    params = _auction(200.0, 0.3)
    summary = run_batch(params, make_uniform(), reps, seed, ctx.get("workers"))
    scaled_mean = params.lambda_T * float(np.mean(summary.R_samples))
    return _result("range_exponential_mean", abs(scaled_mean - 1.0), 0.05,
                   f"mean of lambda*T*R = {scaled_mean:.4f} over {summary.n_conditioned} auctions")


def _count_z(counts: Dict[int, int], n_reps: int, expected: float) -> float:
    """|sample mean - expected| in standard errors, for a count histogram"""
    mean = sum(k * c for k, c in counts.items()) / n_reps
    var = sum(c * (k - mean) ** 2 for k, c in counts.items()) / (n_reps - 1)
    return abs(mean - expected) / math.sqrt(var / n_reps)


def check_cancellation(seed: int, ctx: dict) -> CheckResult:
    reps = ctx.get("live_reps", 100_000)
    params = _auction(10.0, 0.5, theta_ask=1.0, theta_bid=1.0)
    summary = run_batch(params, make_uniform(), reps, seed, ctx.get("workers"))
    expected_asks = params.lambda_ask * survival_time(params.theta_ask, params.horizon)
    expected_bids = params.lambda_bid * survival_time(params.theta_bid, params.horizon)
    z = max(_count_z(summary.ask_counts, reps, expected_asks), _count_z(summary.bid_counts, reps, expected_bids))

    eff = effective_params(params)
    plain = AuctionParams(lambda_total=eff.lambda_eff, alpha=eff.alpha_eff, horizon=params.horizon)
    F = make_normal()
    same_laws = (asymptotic.asymptotic_volume(params) == asymptotic.asymptotic_volume(plain)
                 and asymptotic.asymptotic_price(params, F) == asymptotic.asymptotic_price(plain, F)
                 and asymptotic.asymptotic_range(params, F) == asymptotic.asymptotic_range(plain, F))
    alpha_kept = eff.alpha_eff == params.alpha
    detail = (f"mean live asks {summary.mean_ask_count():.4f} vs {expected_asks:.4f}, "
              f"bids {summary.mean_bid_count():.4f} vs {expected_bids:.4f}; "
              f"laws match: {same_laws}; alpha kept: {alpha_kept}")
    return _result("cancellation", z, 3.0, detail, passed=z <= 3.0 and same_laws and alpha_kept)


def check_density_normalisation(seed: int, ctx: dict) -> CheckResult:
    F = make_uniform()
    worst = 0.0
    for lt in (10.0, 100.0):
        for alpha in (0.25, 0.5):
            params = _auction(lt, alpha)
            for fn in (exact.lower_price_density, exact.upper_price_density):
                total, _ = integrate.quad(lambda x: fn(params, F, x).value, 0.0, 1.0, epsabs=1e-10,
                                          epsrel=1e-10, limit=200, points=[1.0 - alpha])
                worst = max(worst, abs(total - 1.0))
    return _result("price_density_normalisation", worst, 1e-6, "f_L and f_U over uniform(0, 1)")


def histogram_z(sample, point: float, bin_density) -> Tuple[float, Histogram]:
    """
    Standardised gap between an empirical density and an exact one

    The sample is binned with the Freedman-Diaconis rule; in the bin holding
    `point` the histogram height is compared with `bin_density(a, b)`, the
    exact mean density over that bin, in units of the bin's standard error.
    """
    hist = density_histogram(sample)
    edges = np.asarray(hist.edges)
    i = int(np.clip(np.searchsorted(edges, point, side="right") - 1, 0, edges.size - 2))
    a, b = float(edges[i]), float(edges[i + 1])
    expected = bin_density(a, b)
    if not hist.stderr[i] > 0:
        raise ValueError(f"Empty histogram bin around {point}")
    return (hist.density[i] - expected) / hist.stderr[i], hist


def _mean_density(fn, a: float, b: float) -> float:
    value, _ = integrate.quad(fn, a, b, epsabs=1e-12, epsrel=1e-10, limit=200)
    return value / (b - a)


def check_density_histograms(seed: int, ctx: dict) -> CheckResult:
    reps = ctx.get("density_reps", 1_000_000)
    uniform, normal = make_uniform(), make_normal()
    params = _auction(10.0, 0.3)
    summary = run_batch(params, uniform, reps, seed, ctx.get("workers"))
    z = {
        "L": histogram_z(summary.L_samples, 0.7, lambda a, b: _mean_density(
            lambda x: exact.lower_price_density(params, uniform, x).value, a, b))[0],
        "U": histogram_z(summary.U_samples, 0.7, lambda a, b: _mean_density(
            lambda x: exact.upper_price_density(params, uniform, x).value, a, b))[0],
        "R uniform": histogram_z(summary.R_samples, 0.05, lambda a, b: _mean_density(
            lambda d: exact.range_density_uniform(params, d), a, b))[0],
    }
    wide = _auction(20.0, 0.3)
    summary = run_batch(wide, normal, reps, seed + 1, ctx.get("workers"))

    def normal_range(a, b):
        value, _ = integrate.fixed_quad(lambda d: exact.range_density_general_table(wide, normal, d)[0], a, b, n=8)
        return value / (b - a)

    z["R normal"], hist = histogram_z(summary.R_samples, 0.05, normal_range)
    worst = max(abs(v) for v in z.values())
    detail = f"{reps} reps; z by density: " + ", ".join(f"{k}={v:+.2f}" for k, v in z.items())
    return _result("density_histograms", worst, 3.0, detail, binning=hist.rule)


CHECKS: Dict[str, Callable[[int, dict], CheckResult]] = {
    "no_trade_probability": check_no_trade,
    "volume_form_equivalence": check_volume_forms,
    "poisson_mixture_oracle": check_mixture_oracle,
    "clearing_correctness": check_clearing,
    "montecarlo_volume_law": check_mc_volume,
    "price_bound_normality": check_price_normality,
    "range_normalisation": check_range_normalisation,
    "range_mixture_vs_closed_form": check_range_mixture,
    "range_exponential_mean": check_range_exponential,
    "cancellation": check_cancellation,
    "price_density_normalisation": check_density_normalisation,
    "density_histograms": check_density_histograms,
}


def run_validation(seed: int = 0, extended: bool = False, workers: Optional[int] = None,
                   only: Optional[List[str]] = None, **sizes) -> ValidationReport:
    """
    Run the acceptance checks in a fixed order

    Args:
        seed: root seed; each check derives its own seeds from it
        extended: add the lambda*T = 1000 normality run
        workers: Monte Carlo processes (does not change the report)
        only: subset of CHECKS names
        sizes: overrides of replication counts (volume_reps, price_reps, ...)
    """
    names = list(CHECKS) if only is None else only
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f"Unknown validation check(s): {', '.join(unknown)}")
    ctx = dict(sizes, extended=extended, workers=workers)
    logger.info("🚀 Running %d validation check(s), seed %d", len(names), seed)
    checks = [CHECKS[name]((seed + 7919 * i) % 2**64, ctx) for i, name in enumerate(names)]
    return ValidationReport(seed=seed, extended=extended, checks=checks)
