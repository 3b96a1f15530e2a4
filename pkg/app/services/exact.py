"""
Exact laws of the call auction at finite lambda*T

Volume law (double series, single 1F1 series, symmetric closed form, no-trade
probability), densities of the clearing bounds L and U (double series and
1F1 single series) and of the clearing range R (closed form for uniform
prices, Poisson mixture of order-statistic spacings otherwise).

Densities are conditional on at least one bid and one ask at close. Every
operation first maps cancellation rates to effective parameters, which is the
identity without cancellation.
"""
from functools import lru_cache, partial
from scipy import integrate, special
from typing import Optional, Tuple
import logging
import math
import numpy as np

from app.models.model import AuctionParams, effective_auction
from app.schemas.schema import DensityCurve, DiscretePmf, SeriesResult
from app.services.price_dist import TAIL_MASS, PriceDistribution, UniformPrice
from app.services.special_fn import (
    EPS, ln_binomial, ln_factorial, log_expm1, log_hyp1f1, log_poisson_pmf, log_poisson_sf,
)
from app.utils.config import settings
from app.utils.exceptions import QuadratureError, ToleranceNotMetError

logger = logging.getLogger(__name__)

DENSITY_TOL = 1e-8
NEAR_SYMMETRIC = 1e-4
# share of the tolerance above which a quadrature error is reported
QUAD_WARN_SHARE = 0.5


def shell_cap(lambda_T: float) -> int:
    """Largest total order count s = i + j kept in the double series"""
    return math.ceil(lambda_T + 12.0 * math.sqrt(lambda_T) + 60.0)


def default_k_max(lambda_T: float) -> int:
    return math.ceil(math.ceil(lambda_T) + 10.0 * math.sqrt(lambda_T) + 20.0)


def _check(result: SeriesResult, tol: float, what: str) -> SeriesResult:
    if result.abs_error_bound > tol:
        raise ToleranceNotMetError(f"{what}: truncation bound above tolerance", result.abs_error_bound, tol)
    return result


def _warn_near_tolerance(what: str, err: float, tol: float) -> None:
    if QUAD_WARN_SHARE * tol < err <= tol:
        logger.warning("⚠️ %s: quadrature error %.2e is close to the tolerance %.2e", what, err, tol)


def _rounding(value: float, scale: float, terms: int) -> float:
    """Floating-point error of a log-space sum whose pieces have magnitude `scale`"""
    return abs(value) * EPS * (8.0 * (scale + 1.0) + terms)


def _two_sided(params: AuctionParams) -> AuctionParams:
    p = effective_auction(params)
    if p.is_one_sided:
        raise ValueError("Clearing price laws need 0 < alpha < 1: one side of the book is empty")
    return p


@lru_cache(maxsize=8)
def _triangle(cap: int) -> Tuple[np.ndarray, np.ndarray]:
    """Index pairs (i, j) with i + j <= cap"""
    i, j = np.meshgrid(np.arange(cap + 1), np.arange(cap + 1), indexing="ij")
    keep = (i + j) <= cap
    i, j = i[keep], j[keep]
    i.flags.writeable = False
    j.flags.writeable = False
    return i, j


@lru_cache(maxsize=32)
def _positive_triangle(cap: int) -> Tuple[np.ndarray, np.ndarray]:
    """Index pairs (n, m), both >= 1, with n + m <= cap"""
    i, j = _triangle(cap)
    keep = (i >= 1) & (j >= 1)
    n, m = i[keep], j[keep]
    n.flags.writeable = False
    m.flags.writeable = False
    return n, m


def _xlog(power: np.ndarray, log_base: float) -> np.ndarray:
    """power * log_base with 0 * log(0) = 0"""
    if math.isinf(log_base):
        return np.where(power == 0, 0.0, -math.inf)
    return power * log_base


# Traded volume

def volume_pmf(params: AuctionParams, k: int, tol: Optional[float] = None) -> SeriesResult:
    """
    P(V = k) as the double series over the numbers of extra asks i and bids j

    e^{-lT} (a(1-a) l^2 T^2)^k / (k!)^2 * sum_{i,j} (lT)^{i+j} a^i (1-a)^j / (i! j! C(i+j+2k, i+k)),
    summed in log space over shells i + j <= shell_cap(lT). A term is the
    probability of i + k asks and j + k bids times a conditional probability,
    so the omitted shells weigh at most P(Poisson(lT) > shell_cap + 2k).
    """
    tol = settings.default_tol if tol is None else tol
    if k < 0:
        raise ValueError("Traded volume is non-negative")
    p = effective_auction(params)
    if p.is_one_sided:
        return SeriesResult(value=1.0 if k == 0 else 0.0, abs_error_bound=0.0, terms_used=0)

    lt, alpha = p.lambda_T, p.alpha
    cap = shell_cap(lt)
    i, j = _triangle(cap)
    log_pref = -lt + k * math.log(alpha * (1.0 - alpha) * lt * lt) - 2.0 * ln_factorial(k)
    lf_i = ln_factorial(i)
    lf_j = ln_factorial(j)
    log_binom = ln_factorial(i + j + 2 * k) - ln_factorial(i + k) - ln_factorial(j + k)
    log_terms = (i + j) * math.log(lt) + i * math.log(alpha) + j * math.log1p(-alpha) - lf_i - lf_j - log_binom

    log_value = log_pref + float(special.logsumexp(log_terms))
    value = math.exp(log_value)
    # omitted shells hold more than cap + 2k orders in total
    log_tail = log_poisson_sf(cap + 2 * k, lt)
    scale = float(np.max(np.abs(log_terms))) + abs(log_pref) + ln_factorial(cap + 2 * k)
    bound = math.exp(log_tail) + _rounding(value, scale, log_terms.size)
    logger.debug("volume_pmf k=%d shell cap %d, bound %.2e", k, cap, bound)
    return _check(SeriesResult(value=value, abs_error_bound=bound, terms_used=int(log_terms.size)), tol, "volume_pmf")


def volume_pmf_hyp(params: AuctionParams, k: int, tol: Optional[float] = None) -> SeriesResult:
    """
    P(V = k) as a single series over i of C(k+i, k) (a lT)^i / (i+2k)! * 1F1(k+1; i+2k+1; (1-a) lT)

    Term i is at most P(i + k asks), so the omitted tail is a Poisson(a lT) tail.
    """
    tol = settings.default_tol if tol is None else tol
    if k < 0:
        raise ValueError("Traded volume is non-negative")
    p = effective_auction(params)
    if p.is_one_sided:
        return SeriesResult(value=1.0 if k == 0 else 0.0, abs_error_bound=0.0, terms_used=0)

    lt, alpha = p.lambda_T, p.alpha
    ask_mean, bid_mean = alpha * lt, (1.0 - alpha) * lt
    cap = shell_cap(lt)
    log_pref = -lt + k * math.log(ask_mean * bid_mean)

    log_terms = np.empty(cap + 1)
    worst_rel = 0.0
    scale = 0.0
    for i in range(cap + 1):
        log_f, rel_err, _ = log_hyp1f1(k + 1, i + 2 * k + 1, bid_mean)
        log_terms[i] = (ln_binomial(k + i, k) + i * math.log(ask_mean)
                        - ln_factorial(i + 2 * k) + log_f)
        worst_rel = max(worst_rel, rel_err)
        scale = max(scale, abs(log_terms[i]))

    log_value = log_pref + float(special.logsumexp(log_terms))
    value = math.exp(log_value)
    # term i sums the probabilities of i + k asks over every bid count
    log_tail = log_poisson_sf(cap + k, ask_mean)
    bound = math.exp(log_tail) + value * worst_rel + _rounding(value, scale + abs(log_pref), cap + 1)
    return _check(SeriesResult(value=value, abs_error_bound=bound, terms_used=cap + 1), tol, "volume_pmf_hyp")


def volume_pmf_symmetric(lambda_T: float, k: int) -> float:
    """Balanced market: e^{-lT/2} (lT/2)^{2k} / (2k)! * (1 + lT / (2(2k+1)))"""
    if lambda_T <= 0:
        raise ValueError("lambda*T must be positive")
    if k < 0:
        raise ValueError("Traded volume is non-negative")
    half = lambda_T / 2.0
    log_value = -half + 2 * k * math.log(half) - ln_factorial(2 * k) + math.log1p(half / (2 * k + 1))
    return math.exp(log_value)


def prob_no_trade(params: AuctionParams) -> float:
    """
    P(V = 0) = e^{-a lT} + a / (1 - 2a) (e^{-a lT} - e^{-(1-a) lT})

    Near a = 1/2 the difference quotient is rewritten with sinh(z)/z, which
    has no 0/0 form.
    """
    p = effective_auction(params)
    if p.is_one_sided:
        return 1.0
    lt, alpha = p.lambda_T, p.alpha
    skew = 1.0 - 2.0 * alpha
    if abs(skew) >= NEAR_SYMMETRIC:
        ask_decay = math.exp(-alpha * lt)
        return ask_decay + alpha / skew * (ask_decay - math.exp(-(1.0 - alpha) * lt))
    half = lt / 2.0
    z = half * skew
    sinhc = math.sinh(z) / z if z != 0 else 1.0
    return math.exp(-alpha * lt) + (1.0 - skew) * half * math.exp(-half) * sinhc


def volume_tail_bound(params: AuctionParams, k_max: int) -> float:
    """Upper bound on P(V > k_max): V never exceeds the smaller side"""
    p = effective_auction(params)
    if p.is_one_sided:
        return 0.0
    return math.exp(min(log_poisson_sf(k_max, p.alpha * p.lambda_T),
                        log_poisson_sf(k_max, (1.0 - p.alpha) * p.lambda_T)))


def volume_distribution(params: AuctionParams, k_max: Optional[int] = None,
                        tol: Optional[float] = None) -> DiscretePmf:
    """Volume law tabulated on 0..k_max; the tail bound covers V > k_max and series errors"""
    p = effective_auction(params)
    k_max = default_k_max(p.lambda_T) if k_max is None else k_max
    masses = {}
    error = 0.0
    for k in range(k_max + 1):
        r = volume_pmf(p, k, tol)
        masses[k] = min(max(r.value, 0.0), 1.0)
        error += r.abs_error_bound
    tail = volume_tail_bound(p, k_max)
    total = sum(masses.values())
    if total > 1.0:
        masses = {k: v / total for k, v in masses.items()}
    return DiscretePmf(masses=masses, tail_bound=tail + error)


def volume_mean(params: AuctionParams, tol: Optional[float] = None) -> float:
    return volume_distribution(params, tol=tol).mean()


# Clearing price bounds

@lru_cache(maxsize=16)
def _bound_coefficients(lambda_T: float, alpha: float):
    """
    Log coefficients of the f_L double series over bids n and asks m

    n ln b - ln n! - ln (n-1)! + ln (n+m)! + m ln a - 2 ln m!, with
    a = alpha lT and b = (1 - alpha) lT.
    """
    cap = shell_cap(lambda_T)
    n, m = _positive_triangle(cap)
    ask_mean, bid_mean = alpha * lambda_T, (1.0 - alpha) * lambda_T
    coef = (n * math.log(bid_mean) - ln_factorial(n) - ln_factorial(n - 1) + ln_factorial(n + m)
            + m * math.log(ask_mean) - 2.0 * ln_factorial(m))
    coef.flags.writeable = False
    return cap, n, m, coef


def _log_normaliser(lambda_T: float, alpha: float) -> float:
    """ln((e^{a lT} - 1)(e^{(1-a) lT} - 1))"""
    return log_expm1(alpha * lambda_T) + log_expm1((1.0 - alpha) * lambda_T)


def _log_both_sides(lambda_T: float, alpha: float) -> float:
    """ln P(at least one ask and one bid)"""
    return (math.log(-math.expm1(-alpha * lambda_T))
            + math.log(-math.expm1(-(1.0 - alpha) * lambda_T)))


def _count_tail(lambda_T: float, alpha: float, cap: int) -> float:
    """E[N; N > cap] / P(both sides non-empty) for N ~ Poisson(lT)"""
    return lambda_T * math.exp(log_poisson_sf(cap - 1, lambda_T) - _log_both_sides(lambda_T, alpha))


def _bound_density(lambda_T: float, alpha: float, fx: float, log_cdf: float, log_sf: float,
                   tol: float) -> SeriesResult:
    if fx <= 0:
        return SeriesResult(value=0.0, abs_error_bound=0.0, terms_used=0)
    cap, n, m, coef = _bound_coefficients(lambda_T, alpha)
    log_terms = coef + _xlog(n - 1, log_cdf) + _xlog(m, log_sf)
    peak = float(np.max(log_terms))
    tail = fx * _count_tail(lambda_T, alpha, cap)
    if not math.isfinite(peak):
        return _check(SeriesResult(value=0.0, abs_error_bound=tail, terms_used=int(coef.size)), tol, "price density")
    log_value = math.log(fx) - _log_normaliser(lambda_T, alpha) + float(special.logsumexp(log_terms))
    value = math.exp(log_value)
    bound = tail + _rounding(value, float(np.max(np.abs(coef))) + abs(log_value), int(coef.size))
    return _check(SeriesResult(value=value, abs_error_bound=bound, terms_used=int(coef.size)), tol, "price density")


def lower_price_density(params: AuctionParams, F: PriceDistribution, x: float,
                        tol: float = DENSITY_TOL) -> SeriesResult:
    """
    Density of the lowest clearing price L

    f(x) / ((e^{a lT}-1)(e^{(1-a) lT}-1)) * sum_{n,m>=1} (b^n / n!) F^{n-1} / (n-1)! * (n+m)! (a^m / m!) (1-F)^m / m!
    Conditionally on (m asks, n bids) L is the n-th order statistic of n+m
    prices, whose density is at most (n+m) f(x); that bounds the omitted shells.
    """
    p = _two_sided(params)
    return _bound_density(p.lambda_T, p.alpha, float(F.pdf(x)), float(F.logcdf(x)), float(F.logsf(x)), tol)


def upper_price_density(params: AuctionParams, F: PriceDistribution, x: float,
                        tol: float = DENSITY_TOL) -> SeriesResult:
    """Density of the highest clearing price U: f_L with alpha -> 1 - alpha and F -> 1 - F"""
    p = _two_sided(params)
    return _bound_density(p.lambda_T, 1.0 - p.alpha, float(F.pdf(x)), float(F.logsf(x)), float(F.logcdf(x)), tol)


def lower_price_density_hyp(params: AuctionParams, F: PriceDistribution, x: float,
                            tol: float = DENSITY_TOL) -> SeriesResult:
    """
    f_L through a single series in n

    (1-a) lT f e^{b F} / ((e^{a lT}-1)(e^{b}-1)) * [-1 + e^{-b F} sum_n (b F)^n / n! 1F1(n+2; 1; a lT (1-F))]
    with b = (1 - a) lT. The bracket is formed as expm1 of a log-sum.
    """
    p = _two_sided(params)
    lt, alpha = p.lambda_T, p.alpha
    fx = float(F.pdf(x))
    if fx <= 0:
        return SeriesResult(value=0.0, abs_error_bound=0.0, terms_used=0)
    ask_mean, bid_mean = alpha * lt, (1.0 - alpha) * lt
    cdf = float(F.cdf(x))
    y = ask_mean * float(F.sf(x))
    mu = bid_mean * cdf
    cap = shell_cap(lt)

    n_max = cap if mu > 0 else 0
    log_terms = np.empty(n_max + 1)
    worst_rel = 0.0
    for n in range(n_max + 1):
        log_f, rel_err, _ = log_hyp1f1(n + 2, 1, y)
        log_terms[n] = float(log_poisson_pmf(n, mu)) + mu + log_f
        worst_rel = max(worst_rel, rel_err)
    log_sum = float(special.logsumexp(log_terms))
    bracket = max(math.expm1(log_sum - mu), 0.0)

    log_outer = math.log(bid_mean) + math.log(fx) + mu - _log_normaliser(lt, alpha)
    outer = math.exp(log_outer)
    value = outer * bracket
    # omitted Poisson(mu) weights beyond the cap, plus the omitted double-series shells
    tail = outer * math.exp(log_poisson_sf(n_max, mu)) if mu > 0 else 0.0
    tail += fx * _count_tail(lt, alpha, cap)
    bound = tail + outer * math.exp(log_sum - mu) * (worst_rel + 8.0 * EPS * (abs(log_sum) + 1.0))
    return _check(SeriesResult(value=value, abs_error_bound=bound, terms_used=n_max + 1), tol, "lower_price_density_hyp")


def price_density_curve(params: AuctionParams, F: PriceDistribution, side: str = "lower",
                        tol: float = DENSITY_TOL) -> DensityCurve:
    fn = {"lower": lower_price_density, "upper": upper_price_density}[side]
    return DensityCurve(evaluate=partial(fn, params, F, tol=tol), support=F.integration_bounds())


# Clearing price range

def range_density_uniform(params: AuctionParams, delta: float) -> float:
    """
    Density of R = U - L for prices uniform on (0, 1)

    lT e^{-lT d} / ((1-e^{-a lT})(1-e^{-(1-a) lT})) * [1 - (1-a) e^{-a lT (1-d)} - a e^{-(1-a) lT (1-d)}]
    """
    p = _two_sided(params)
    if delta < 0 or delta > 1:
        return 0.0
    lt, alpha = p.lambda_T, p.alpha
    rest = 1.0 - delta
    bracket = 1.0 - (1.0 - alpha) * math.exp(-alpha * lt * rest) - alpha * math.exp(-(1.0 - alpha) * lt * rest)
    return max(lt * math.exp(-lt * delta - _log_both_sides(lt, alpha)) * bracket, 0.0)


def _peak_points(F: PriceDistribution, centre_prob: float, spread: float, lo: float, hi: float):
    probs = np.clip(centre_prob + spread * np.arange(-4, 5), 1e-12, 1.0 - 1e-12)
    quantiles = (float(F.quantile(float(p))) for p in probs)
    pts = sorted({v for v in quantiles if lo < v < hi})
    return pts or None


def conditional_range_density(m: int, n: int, F: PriceDistribution, delta: float,
                              quad_tol: Optional[float] = None) -> float:
    """
    Density at delta of the spacing between the n-th and (n+1)-th order statistics of n+m prices

    (n+m)! / ((n-1)! (m-1)!) * integral F(x)^{n-1} f(x) f(x+d) (1-F(x+d))^{m-1} dx
    """
    quad_tol = settings.quad_tol if quad_tol is None else quad_tol
    if m < 1 or n < 1:
        raise ValueError("Spacing law needs at least one order on each side")
    if delta < 0:
        raise ValueError("Clearing range is non-negative")
    lo, hi = F.integration_bounds()
    upper = hi - delta
    if upper <= lo:
        return 0.0
    log_c = ln_factorial(n + m) - ln_factorial(n - 1) - ln_factorial(m - 1)

    def integrand(x):
        log_v = (log_c + _xlog(n - 1, float(F.logcdf(x))) + float(F.logpdf(x))
                 + float(F.logpdf(x + delta)) + _xlog(m - 1, float(F.logsf(x + delta))))
        return math.exp(log_v) if math.isfinite(log_v) else 0.0

    points = _peak_points(F, n / (n + m), 0.5 / math.sqrt(n + m), lo, upper)
    value, err, info, *rest = integrate.quad(integrand, lo, upper, epsabs=quad_tol, epsrel=1e-12,
                                             limit=400, points=points, full_output=1)
    _warn_near_tolerance("conditional_range_density", err, quad_tol)
    if err > quad_tol:
        raise QuadratureError("conditional_range_density did not converge", err, quad_tol)
    return value


class _RangeKernel:
    """
    Poisson mixture of spacing densities, integrated over the lower price x

    sum_{n,m>=1} P(n bids) P(m asks) (n+m)! / ((n-1)! (m-1)!) F(x)^{n-1} (1-F(x+d))^{m-1} f(x) f(x+d),
    normalised by P(both sides non-empty). Pairs whose Poisson weight times
    (n+m) pdf_max is below `prune` are dropped and their mass is charged to
    the error bound.
    """

    def __init__(self, lambda_T: float, alpha: float, F: PriceDistribution, tol: float):
        self.F = F
        cap = shell_cap(lambda_T)
        n, m = _positive_triangle(cap)
        ask_mean, bid_mean = alpha * lambda_T, (1.0 - alpha) * lambda_T
        log_weight = log_poisson_pmf(n, bid_mean) + log_poisson_pmf(m, ask_mean)
        log_norm = _log_both_sides(lambda_T, alpha)
        spacing_bound = log_weight + np.log(n + m) + math.log(F.pdf_max) - log_norm
        keep = spacing_bound > math.log(tol * 1e-3) - math.log(n.size)
        self.pruned = float(np.exp(special.logsumexp(spacing_bound[~keep]))) if np.any(~keep) else 0.0
        self.n = n[keep]
        self.m = m[keep]
        self.coef = (log_weight[keep] + ln_factorial(self.n + self.m) - ln_factorial(self.n - 1)
                     - ln_factorial(self.m - 1) - log_norm)
        self.tail = F.pdf_max * _count_tail(lambda_T, alpha, cap)
        self.truncation = 2.0 * TAIL_MASS * (lambda_T + 1.0) * F.pdf_max / math.exp(log_norm)

    def __call__(self, x: float, deltas: np.ndarray) -> np.ndarray:
        F = self.F
        shifted = x + deltas
        log_cdf = float(F.logcdf(x))
        log_sf = np.asarray(F.logsf(shifted), dtype=float)
        base = float(F.logpdf(x)) + np.asarray(F.logpdf(shifted), dtype=float)
        lower_part = self.coef + _xlog(self.n - 1, log_cdf)
        with np.errstate(invalid="ignore"):
            upper_part = np.where((self.m - 1)[None, :] == 0, 0.0, (self.m - 1)[None, :] * log_sf[:, None])
        log_terms = lower_part[None, :] + upper_part
        with np.errstate(divide="ignore"):
            log_sum = special.logsumexp(log_terms, axis=1)
        out = np.exp(log_sum + base)
        return np.where(np.isfinite(out), out, 0.0)

    @property
    def series_error(self) -> float:
        return self.tail + self.pruned + self.truncation


def range_density_general(params: AuctionParams, F: PriceDistribution, delta: float,
                          tol: float = 1e-7) -> SeriesResult:
    """
    Density of the clearing range for any price law, as a Poisson mixture of spacing densities

    The mixture is summed inside the integral over the lower price, so one
    adaptive quadrature serves all (n, m) pairs.
    """
    p = _two_sided(params)
    if delta < 0:
        raise ValueError("Clearing range is non-negative")
    lo, hi = F.integration_bounds()
    upper = hi - delta
    if upper <= lo:
        return SeriesResult(value=0.0, abs_error_bound=0.0, terms_used=0)
    kernel = _RangeKernel(p.lambda_T, p.alpha, F, tol)
    deltas = np.array([delta], dtype=float)
    points = _peak_points(F, 1.0 - p.alpha, 0.5 / math.sqrt(p.lambda_T + 1.0), lo, upper)
    value, err, info, *rest = integrate.quad(lambda x: float(kernel(x, deltas)[0]), lo, upper,
                                             epsabs=tol / 4.0, epsrel=1e-12, limit=400,
                                             points=points, full_output=1)
    bound = err + kernel.series_error + abs(value) * 1e-12
    _warn_near_tolerance("range_density_general", bound, tol)
    return _check(SeriesResult(value=max(value, 0.0), abs_error_bound=bound, terms_used=int(kernel.coef.size)),
                  tol, "range_density_general")


def range_density_general_table(params: AuctionParams, F: PriceDistribution, deltas: np.ndarray,
                                tol: float = 1e-7) -> Tuple[np.ndarray, np.ndarray]:
    """range_density_general on a whole grid of deltas with one vector-valued quadrature"""
    p = _two_sided(params)
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas < 0):
        raise ValueError("Clearing range is non-negative")
    lo, hi = F.integration_bounds()
    kernel = _RangeKernel(p.lambda_T, p.alpha, F, tol)
    points = _peak_points(F, 1.0 - p.alpha, 0.5 / math.sqrt(p.lambda_T + 1.0), lo, hi)
    values, err = integrate.quad_vec(lambda x: kernel(x, deltas), lo, hi, epsabs=tol / 4.0,
                                     epsrel=1e-10, norm="max", limit=2000, points=points)
    bound = err + kernel.series_error
    _warn_near_tolerance("range_density_general_table", bound, tol)
    if bound > tol:
        raise ToleranceNotMetError("range_density_general_table: quadrature bound above tolerance", bound, tol)
    values = np.where(deltas > hi - lo, 0.0, np.maximum(values, 0.0))
    return values, np.full(deltas.shape, bound)


def is_standard_uniform(F: PriceDistribution) -> bool:
    return isinstance(F, UniformPrice) and F.lo == 0.0 and F.hi == 1.0


def tabulate_density(fn, support: Tuple[float, float], points: Optional[int] = None):
    """Tabulate a pointwise density `fn(x) -> SeriesResult` on a uniform grid over `support`"""
    points = settings.grid_points if points is None else points
    curve = DensityCurve(evaluate=fn, support=support)
    logger.info("Tabulating density on %d points over [%g, %g]", points, support[0], support[1])
    return curve.tabulate(points)
