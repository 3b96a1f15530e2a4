"""
Numerical kernels shared by the exact and asymptotic laws

Every combinatorial quantity is handled in log space and exponentiated as late
as possible: the volume and price series carry powers of lambda*T up to the
thousands.
"""
from scipy import special, stats
from typing import Tuple, Union
import logging
import math
import numpy as np

from app.schemas.schema import SeriesResult

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps
_LN_FACTORIAL_TABLE = np.array([math.log(math.factorial(n)) for n in range(21)])
_KUMMER_MAX_TERMS = 10_000_000

ArrayLike = Union[int, float, np.ndarray]


def ln_factorial(n: ArrayLike):
    """ln(n!) from an exact table up to 20, log-gamma above; accepts arrays"""
    arr = np.asarray(n)
    if np.any(arr < 0):
        raise ValueError("Factorial of a negative integer")
    if arr.ndim == 0:
        k = int(arr)
        if k <= 20:
            return float(_LN_FACTORIAL_TABLE[k])
        return float(special.gammaln(k + 1.0))
    out = special.gammaln(arr + 1.0)
    small = arr <= 20
    out[small] = _LN_FACTORIAL_TABLE[arr[small].astype(int)]
    return out


def ln_binomial(n: int, k: int) -> float:
    """ln C(n, k)"""
    if k < 0 or n < 0 or k > n:
        raise ValueError(f"Binomial coefficient undefined for n={n}, k={k}")
    return ln_factorial(n) - (ln_factorial(k) + ln_factorial(n - k))


def log_expm1(x: float) -> float:
    """ln(e^x - 1) for x > 0 without overflow"""
    if x <= 0:
        raise ValueError("log_expm1 needs a positive argument")
    if x > 30:
        return x + math.log1p(-math.exp(-x))
    return math.log(math.expm1(x))


def log_poisson_pmf(k: ArrayLike, mu: float):
    """ln P(N = k) for N ~ Poisson(mu); mu = 0 puts all mass at 0"""
    k = np.asarray(k, dtype=float)
    return special.xlogy(k, mu) - mu - special.gammaln(k + 1.0)


def log_poisson_sf(k: int, mu: float) -> float:
    """ln P(N > k) for N ~ Poisson(mu)"""
    if mu <= 0:
        return -math.inf
    return float(stats.poisson.logsf(k, mu))


def std_normal_cdf(x):
    return special.ndtr(x)


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def std_normal_quantile(p):
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0) | (p_arr >= 1)):
        raise ValueError("Normal quantile needs 0 < p < 1")
    return special.ndtri(p)


def _peak_index(a: int, b: int, x: float) -> float:
    """Index where the Kummer term ratio x(a+j)/((b+j)(j+1)) crosses 1"""
    p = b + 1 - x
    q = b - a * x
    disc = p * p - 4.0 * q
    if disc < 0:
        return 0.0
    return max(0.0, (-p + math.sqrt(disc)) / 2.0)


def _log_kummer_positive(a: int, b: int, x: float, rel_tol: float) -> Tuple[float, float, int]:
    """
    ln 1F1(a; b; x) for x > 0 by direct summation of the Kummer series

    All terms are positive and their ratio is non-increasing in j, so the
    series is unimodal and the tail after a decreasing term is bounded by a
    geometric series. Stops once 3 consecutive terms fall below rel_tol times
    the running sum.
    """
    log_x = math.log(x)
    base = special.gammaln(b) - special.gammaln(a)
    n_terms = int(_peak_index(a, b, x) + 12.0 * math.sqrt(_peak_index(a, b, x) + 1.0) + 60)
    log_tol = math.log(rel_tol)
    while True:
        j = np.arange(n_terms, dtype=float)
        log_terms = (special.gammaln(a + j) - special.gammaln(b + j) + base
                     + j * log_x - special.gammaln(j + 1.0))
        running = np.logaddexp.accumulate(log_terms)
        small = log_terms < log_tol + running
        run3 = small[:-2] & small[1:-1] & small[2:]
        hits = np.flatnonzero(run3)
        if hits.size:
            used = int(hits[0]) + 3
            break
        if n_terms >= _KUMMER_MAX_TERMS:
            raise ArithmeticError(f"Kummer series for 1F1({a}; {b}; {x}) did not settle")
        n_terms *= 2

    log_sum = float(running[used - 1])
    # first omitted term and its successor ratio bound the geometric tail
    j_next = float(used)
    log_next = float(special.gammaln(a + j_next) - special.gammaln(b + j_next) + base
                     + j_next * log_x - special.gammaln(j_next + 1.0))
    ratio = x * (a + j_next) / ((b + j_next) * (j_next + 1.0))
    tail_rel = math.exp(log_next - log_sum) / (1.0 - ratio) if ratio < 1 else math.exp(log_next - log_sum) * used
    # log-gamma differences lose absolute accuracy in proportion to their magnitude
    scale = float(special.gammaln(a + j_next) + special.gammaln(b + j_next)
                  + special.gammaln(j_next + 1.0)) + j_next * abs(log_x) + abs(base)
    rel_err = tail_rel + 2.0 * used * EPS + 4.0 * EPS * scale
    return log_sum, rel_err, used


def log_hyp1f1(a: int, b: int, x: float, rel_tol: float = 1e-16) -> Tuple[float, float, int]:
    """
    ln 1F1(a; b; x) for positive integers a, b

    Returns (log value, relative error bound, terms summed). Negative x is
    mapped through Kummer's transformation 1F1(a; b; x) = e^x 1F1(b-a; b; -x),
    which needs b >= a.
    """
    if int(b) != b or b <= 0:
        raise ValueError(f"1F1 has poles at non-positive integer b (got b={b})")
    if int(a) != a or a <= 0:
        raise ValueError(f"1F1 parameter a must be a positive integer (got a={a})")
    if not math.isfinite(x):
        raise ValueError("1F1 argument must be finite")
    a, b = int(a), int(b)
    if x == 0:
        return 0.0, 0.0, 1
    if x > 0:
        return _log_kummer_positive(a, b, x, rel_tol)
    if b < a:
        raise ValueError("Negative argument with a > b is outside the supported range")
    if a == b:
        return x, EPS, 1
    log_value, rel_err, used = _log_kummer_positive(b - a, b, -x, rel_tol)
    return x + log_value, rel_err + EPS, used


def hyp1f1(a: int, b: int, x: float, rel_tol: float = 1e-16) -> SeriesResult:
    """Confluent hypergeometric function 1F1(a; b; x) with a truncation error bound"""
    log_value, rel_err, used = log_hyp1f1(a, b, x, rel_tol)
    if log_value > 709.0:
        raise OverflowError(f"1F1({a}; {b}; {x}) overflows a double; use log_hyp1f1")
    value = math.exp(log_value)
    return SeriesResult(value=value, abs_error_bound=value * rel_err, terms_used=used)
