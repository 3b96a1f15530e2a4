import math
import pytest

from app.models.model import AuctionParams, Order, decay_factor, effective_auction, effective_params
from tests.conftest import auction


def test_rates_split_by_alpha():
    p = AuctionParams(lambda_total=10.0, alpha=0.25, horizon=2.0)
    assert p.lambda_ask == 2.5
    assert p.lambda_bid == 7.5
    assert p.lambda_T == 20.0
    assert not p.has_cancellation


@pytest.mark.parametrize("kw", [
    {"lambda_total": 0.0, "alpha": 0.5},
    {"lambda_total": 1.0, "alpha": 1.5},
    {"lambda_total": 1.0, "alpha": -0.1},
    {"lambda_total": 1.0, "alpha": 0.5, "horizon": 0.0},
    {"lambda_total": 1.0, "alpha": 0.5, "theta_ask": -1.0},
    {"lambda_total": math.inf, "alpha": 0.5},
])
def test_invalid_params_rejected(kw):
    with pytest.raises(ValueError):
        AuctionParams(**kw)


def test_no_cancellation_is_identity():
    eff = effective_params(auction(10.0, 0.3))
    assert eff.lambda_eff == 10.0
    assert eff.alpha_eff == 0.3
    assert effective_auction(auction(10.0, 0.3)) == auction(10.0, 0.3)


@pytest.mark.parametrize("theta", [1e-14, 0.1, 1.0, 7.5])
def test_equal_cancellation_keeps_alpha(theta):
    eff = effective_params(auction(10.0, 0.3, theta_ask=theta, theta_bid=theta))
    assert eff.alpha_eff == 0.3


def test_unit_cancellation_rate():
    eff = effective_params(auction(10.0, 0.5, theta_ask=1.0, theta_bid=1.0))
    assert eff.lambda_eff == pytest.approx(10.0 * (1.0 - math.exp(-1.0)), rel=1e-12)
    assert eff.lambda_eff == pytest.approx(6.32121, abs=1e-5)


def test_swapping_sides_mirrors_alpha():
    a = effective_params(auction(10.0, 0.3, theta_ask=0.5, theta_bid=2.0))
    b = effective_params(auction(10.0, 0.7, theta_ask=2.0, theta_bid=0.5))
    assert b.alpha_eff == pytest.approx(1.0 - a.alpha_eff, abs=1e-12)
    assert b.lambda_eff == pytest.approx(a.lambda_eff, rel=1e-12)


def test_lambda_eff_decreases_with_cancellation():
    thetas = [0.0, 0.1, 0.5, 1.0, 3.0, 10.0]
    ask_side = [effective_params(auction(10.0, 0.4, theta_ask=t, theta_bid=0.2)).lambda_eff for t in thetas]
    bid_side = [effective_params(auction(10.0, 0.4, theta_ask=0.2, theta_bid=t)).lambda_eff for t in thetas]
    assert all(x >= y for x, y in zip(ask_side, ask_side[1:]))
    assert all(x >= y for x, y in zip(bid_side, bid_side[1:]))


def test_continuity_at_zero_rate():
    plain = effective_params(auction(10.0, 0.4))
    tiny = effective_params(auction(10.0, 0.4, theta_ask=1e-12, theta_bid=0.0))
    assert tiny.lambda_eff == pytest.approx(plain.lambda_eff, rel=1e-9)
    assert tiny.alpha_eff == pytest.approx(plain.alpha_eff, rel=1e-9)


def test_decay_factor_branches_meet():
    assert decay_factor(0.0) == 1.0
    assert decay_factor(1e-8) == pytest.approx(-math.expm1(-1e-8) / 1e-8, rel=1e-15)
    assert decay_factor(0.999e-8) == pytest.approx(1.0 - 0.4995e-8, rel=1e-12)


def test_order_liveness():
    assert Order(side="bid", price=1.0).is_live_at(1.0)
    assert Order(side="ask", price=1.0, submit_time=0.5, lifetime=0.6).is_live_at(1.0)
    assert not Order(side="ask", price=1.0, submit_time=0.5, lifetime=0.5).is_live_at(1.0)
    with pytest.raises(ValueError):
        Order(side="bid", price=math.nan)
