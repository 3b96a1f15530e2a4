from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Literal, Optional
import math

# Below this value of theta*T the factor (1 - e^{-x})/x is taken from its series
SMALL_DECAY = 1e-8


class AuctionParams(BaseModel):
    """Order flow of one call auction: total rate, ask share, horizon, cancellation rates"""
    model_config = ConfigDict(frozen=True)

    lambda_total: float = Field(gt=0)
    alpha: float = Field(ge=0, le=1)
    horizon: float = Field(default=1.0, gt=0)
    theta_ask: float = Field(default=0.0, ge=0)
    theta_bid: float = Field(default=0.0, ge=0)

    @field_validator("lambda_total", "alpha", "horizon", "theta_ask", "theta_bid")
    def validate_finite(cls, v):
        if not math.isfinite(v):
            raise ValueError("Auction parameters must be finite")
        return v

    @property
    def lambda_ask(self) -> float:
        return self.alpha * self.lambda_total

    @property
    def lambda_bid(self) -> float:
        return (1.0 - self.alpha) * self.lambda_total

    @property
    def lambda_T(self) -> float:
        """Expected number of submitted orders over the auction"""
        return self.lambda_total * self.horizon

    @property
    def has_cancellation(self) -> bool:
        return self.theta_ask > 0 or self.theta_bid > 0

    @property
    def is_one_sided(self) -> bool:
        return self.alpha == 0.0 or self.alpha == 1.0


class EffectiveParams(BaseModel):
    """Rate and ask share of the live orders at close once cancellations are accounted for"""
    model_config = ConfigDict(frozen=True)

    lambda_eff: float = Field(ge=0)
    alpha_eff: float = Field(ge=0, le=1)


def decay_factor(x: float) -> float:
    """(1 - e^{-x}) / x, equal to 1 at x = 0"""
    if x < SMALL_DECAY:
        return 1.0 - x / 2.0 + x * x / 6.0
    return -math.expm1(-x) / x


def survival_time(theta: float, horizon: float) -> float:
    """(1 - e^{-theta T}) / theta, the expected time an order spends live before the close"""
    return horizon * decay_factor(theta * horizon)


def effective_params(params: AuctionParams) -> EffectiveParams:
    """
    Map a model with exponential cancellations onto the no-cancellation model

    The number of live ask orders at close is Poisson with mean
    lambda_A (1 - e^{-theta_A T}) / theta_A (birth-death process with constant
    birth rate and linear death rate), likewise for bids. Every formula of the
    no-cancellation model then holds with lambda and alpha replaced by the
    returned values.
    """
    if params.theta_ask == params.theta_bid:
        lambda_eff = params.lambda_total * decay_factor(params.theta_ask * params.horizon)
        return EffectiveParams(lambda_eff=lambda_eff, alpha_eff=params.alpha)

    live_ask = params.alpha * survival_time(params.theta_ask, params.horizon)
    live_bid = (1.0 - params.alpha) * survival_time(params.theta_bid, params.horizon)
    lambda_eff = params.lambda_total / params.horizon * (live_ask + live_bid)
    alpha_eff = live_ask / (live_ask + live_bid)
    return EffectiveParams(lambda_eff=lambda_eff, alpha_eff=min(max(alpha_eff, 0.0), 1.0))


def effective_auction(params: AuctionParams) -> AuctionParams:
    """Cancellation-free auction with the same live order flow at close"""
    if not params.has_cancellation:
        return params
    eff = effective_params(params)
    if eff.lambda_eff <= 0:
        raise ValueError("Cancellation leaves no live orders at close")
    return AuctionParams(lambda_total=eff.lambda_eff, alpha=eff.alpha_eff, horizon=params.horizon)


class Order(BaseModel):
    """Unit-sized limit order submitted during the call period"""
    model_config = ConfigDict(frozen=True)

    side: Literal["bid", "ask"]
    price: float
    submit_time: float = Field(default=0.0, ge=0)
    lifetime: Optional[float] = Field(default=None, gt=0)

    @field_validator("price")
    def validate_price(cls, v):
        if not math.isfinite(v):
            raise ValueError("Order price must be finite")
        return v

    def is_live_at(self, horizon: float) -> bool:
        """An order survives to the close unless its lifetime runs out first"""
        return self.lifetime is None or self.submit_time + self.lifetime > horizon

    @model_validator(mode="after")
    def validate_lifetime(self):
        if self.lifetime is not None and not math.isfinite(self.lifetime):
            raise ValueError("Order lifetime must be finite when given")
        return self
