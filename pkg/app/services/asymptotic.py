"""
Limit laws for a large expected number of orders

Volume and clearing price bounds are asymptotically normal and the clearing
range asymptotically exponential. With cancellations every law is the
no-cancellation law at the effective parameters.
"""
import logging
import math

from app.models.model import AuctionParams, effective_auction
from app.schemas.schema import ExponentialLaw, NormalLaw
from app.services.price_dist import PriceDistribution

logger = logging.getLogger(__name__)


def _interior(params: AuctionParams) -> AuctionParams:
    p = effective_auction(params)
    if p.is_one_sided:
        raise ValueError("Limit laws need 0 < alpha < 1")
    return p


def _density_at_clearing_quantile(p: AuctionParams, F: PriceDistribution):
    """F^{-1}(1 - alpha) and f there"""
    q = float(F.quantile(1.0 - p.alpha))
    fq = float(F.pdf(q))
    if not fq > 0:
        raise ValueError(f"Price density vanishes at the clearing quantile {q}")
    return q, fq


def asymptotic_volume(params: AuctionParams) -> NormalLaw:
    """N(lT a(1-a), lT a(1-a)(1 - 2a(1-a)))"""
    p = _interior(params)
    share = p.alpha * (1.0 - p.alpha)
    mean = p.lambda_T * share
    return NormalLaw(mean=mean, sd=math.sqrt(mean * (1.0 - 2.0 * share)))


def asymptotic_price(params: AuctionParams, F: PriceDistribution) -> NormalLaw:
    """
    Limit law shared by each of the clearing bounds L and U

    Args:
        params: order flow, cancellations included
        F: price law of the orders

    Returns:
        N(F^{-1}(1-a), 2a(1-a) / (lT f(F^{-1}(1-a))^2))
    """
    p = _interior(params)
    q, fq = _density_at_clearing_quantile(p, F)
    sd = math.sqrt(2.0 * p.alpha * (1.0 - p.alpha) / p.lambda_T) / fq
    return NormalLaw(mean=q, sd=sd)


def asymptotic_range(params: AuctionParams, F: PriceDistribution) -> ExponentialLaw:
    """Exponential law of U - L with rate lT f(F^{-1}(1-a))"""
    p = _interior(params)
    _, fq = _density_at_clearing_quantile(p, F)
    return ExponentialLaw(rate=p.lambda_T * fq)
