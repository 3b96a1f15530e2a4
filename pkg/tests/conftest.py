import pytest

from app.models.model import AuctionParams
from app.services.price_dist import make_exponential, make_normal, make_uniform


@pytest.fixture
def uniform():
    return make_uniform(0.0, 1.0)


@pytest.fixture
def normal():
    return make_normal(0.0, 1.0)


@pytest.fixture
def exponential():
    return make_exponential(1.0)


def auction(lambda_T: float, alpha: float, **kw) -> AuctionParams:
    return AuctionParams(lambda_total=lambda_T, alpha=alpha, horizon=1.0, **kw)
