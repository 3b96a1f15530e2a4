"""
Tables behind the batch commands and the HTTP endpoints

Each builder returns a Table whose metadata records the parameters,
tolerances and method used, so the CSV/JSON output is self-describing.
"""
from typing import Iterable, List, Optional, Tuple
import csv
import logging
import math
import numpy as np

from app import __version__
from app.models.model import AuctionParams, effective_auction, effective_params
from app.schemas.schema import FitResult, GridSpec, Table
from app.services import asymptotic, exact
from app.services.montecarlo import fit_exponential_mle, survival_table
from app.services.price_dist import PriceDistribution
from app.utils.config import settings
from app.utils.exceptions import SpreadFileError

logger = logging.getLogger(__name__)


def _metadata(params: AuctionParams, **extra) -> dict:
    eff = effective_params(params)
    meta = {
        "version": __version__,
        "lambda": params.lambda_total,
        "alpha": params.alpha,
        "T": params.horizon,
        "theta_ask": params.theta_ask,
        "theta_bid": params.theta_bid,
        "lambda_eff": eff.lambda_eff,
        "alpha_eff": eff.alpha_eff,
    }
    meta.update(extra)
    return meta


def volume_table(params: AuctionParams, k_max: Optional[int] = None, tol: Optional[float] = None) -> Table:
    """Rows (k, exact_pmf, exact_pmf_hyp, asymptotic_density, abs_error_bound) for k = 0..k_max"""
    tol = settings.default_tol if tol is None else tol
    k_max = exact.default_k_max(effective_auction(params).lambda_T) if k_max is None else k_max
    try:
        law = asymptotic.asymptotic_volume(params)
    except ValueError:
        law = None
    rows = []
    for k in range(k_max + 1):
        series = exact.volume_pmf(params, k, tol)
        hyp = exact.volume_pmf_hyp(params, k, tol)
        normal = float(law.pdf(k)) if law is not None else math.nan
        rows.append([k, series.value, hyp.value, normal, max(series.abs_error_bound, hyp.abs_error_bound)])
    tail = exact.volume_tail_bound(params, k_max)
    logger.info("📊 Volume table: %d rows, tail bound %.2e", len(rows), tail)
    return Table(
        columns=["k", "exact_pmf", "exact_pmf_hyp", "asymptotic_density", "abs_error_bound"],
        rows=rows,
        metadata=_metadata(params, k_max=k_max, tol=tol, tail_bound=tail,
                           prob_no_trade=exact.prob_no_trade(params)),
    )


def _price_grid(F: PriceDistribution, grid: Optional[GridSpec]) -> GridSpec:
    if grid is not None:
        return grid
    lo, hi = F.integration_bounds()
    return GridSpec(lo=lo, hi=hi, points=settings.grid_points)


def prices_table(params: AuctionParams, F: PriceDistribution, grid: Optional[GridSpec] = None,
                 tol: float = exact.DENSITY_TOL) -> Table:
    """Rows (x, f_L, f_U, asymptotic_density, abs_error_bound) over the grid"""
    grid = _price_grid(F, grid)
    law = asymptotic.asymptotic_price(params, F)
    rows = []
    for x in grid.values():
        low = exact.lower_price_density(params, F, float(x), tol)
        up = exact.upper_price_density(params, F, float(x), tol)
        rows.append([float(x), low.value, up.value, float(law.pdf(x)),
                     max(low.abs_error_bound, up.abs_error_bound)])
    logger.info("📊 Price bound table: %d rows on [%g, %g]", len(rows), grid.lo, grid.hi)
    return Table(
        columns=["x", "f_L", "f_U", "asymptotic_density", "abs_error_bound"],
        rows=rows,
        metadata=_metadata(params, dist=F.spec(), tol=tol, conditioning="both sides non-empty",
                           asymptotic_mean=law.mean, asymptotic_sd=law.sd),
    )


def _range_grid(params: AuctionParams, F: PriceDistribution, grid: Optional[GridSpec]) -> GridSpec:
    if grid is not None:
        return grid
    lo, hi = F.integration_bounds()
    width = hi - lo
    if not exact.is_standard_uniform(F):
        width = min(width, 10.0 / asymptotic.asymptotic_range(params, F).rate)
    return GridSpec(lo=0.0, hi=width, points=settings.grid_points)


def range_table(params: AuctionParams, F: PriceDistribution, grid: Optional[GridSpec] = None,
                tol: float = 1e-7) -> Table:
    """
    Rows (delta, f_R, asymptotic_density, scaled_delta, scaled_density, abs_error_bound)

    Uniform(0, 1) prices use the closed form, any other law the Poisson
    mixture. The scaled columns multiply delta by the exponential rate and
    divide the density by it.
    """
    grid = _range_grid(params, F, grid)
    law = asymptotic.asymptotic_range(params, F)
    deltas = grid.values()
    if exact.is_standard_uniform(F):
        method = "closed-form uniform"
        values = np.array([exact.range_density_uniform(params, float(d)) for d in deltas])
        errors = np.zeros_like(values)
    else:
        method = "poisson mixture"
        values, errors = exact.range_density_general_table(params, F, deltas, tol)
    rows = [
        [float(d), float(v), float(law.pdf(d)), float(d) * law.rate, float(v) / law.rate, float(e)]
        for d, v, e in zip(deltas, values, errors)
    ]
    logger.info("📊 Range table (%s): %d rows", method, len(rows))
    return Table(
        columns=["delta", "f_R", "asymptotic_density", "scaled_delta", "scaled_density", "abs_error_bound"],
        rows=rows,
        metadata=_metadata(params, dist=F.spec(), tol=tol, method=method, asymptotic_rate=law.rate,
                           conditioning="both sides non-empty"),
    )


def read_spreads(lines: Iterable[str]) -> List[float]:
    """
    Parse a spread sample: one positive value per line, optional 'spread' header

    Raises:
        SpreadFileError: on a malformed or non-positive value, or an empty file
    """
    values = []
    for line_no, row in enumerate(csv.reader(lines), start=1):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 1:
            raise SpreadFileError("expected one value per line", line_no)
        cell = row[0].strip()
        if line_no == 1 and not values and cell.lower() == "spread":
            continue
        try:
            value = float(cell)
        except ValueError:
            raise SpreadFileError(f"not a number: '{cell}'", line_no)
        if not math.isfinite(value) or value <= 0:
            raise SpreadFileError(f"spread must be positive and finite, got {cell}", line_no)
        values.append(value)
    if not values:
        raise SpreadFileError("no spread values found")
    return values


def spread_fit(values: List[float]) -> Tuple[FitResult, Table]:
    """Exponential MLE and the (x, empirical, fitted) log-survival table"""
    fit = fit_exponential_mle(values)
    rows = [list(r) for r in survival_table(values, fit)]
    logger.info("✅ Fitted exponential rate %.6g on %d spreads (KS %.4f)", fit.rate, fit.sample_size, fit.ks_stat)
    table = Table(
        columns=["x", "empirical_log_survival", "fitted_log_survival"],
        rows=rows,
        metadata={"version": __version__, "rate": fit.rate, "sample_size": fit.sample_size,
                  "ks_stat": fit.ks_stat},
    )
    return fit, table
