import math
import numpy as np
import pytest
from scipy import integrate

from app.services import exact
from app.services.price_dist import make_normal, make_uniform
from app.services.validation_service import poisson_mixture_volume
from app.utils.exceptions import ToleranceNotMetError
from tests.conftest import auction


# Traded volume

@pytest.mark.parametrize("alpha", [0.0, 1.0])
def test_one_sided_market_never_trades(alpha):
    params = auction(10.0, alpha)
    for fn in (exact.volume_pmf, exact.volume_pmf_hyp):
        assert fn(params, 0).value == 1.0
        assert fn(params, 1).value == 0.0
    assert exact.prob_no_trade(params) == 1.0
    assert exact.volume_distribution(params, k_max=5).mean() == 0.0


def test_balanced_examples():
    params = auction(2.0, 0.5)
    assert exact.volume_pmf(params, 0).value == pytest.approx(2.0 * math.exp(-1.0), abs=1e-12)
    assert exact.volume_pmf_hyp(params, 0).value == pytest.approx(0.7357589, abs=1e-7)
    assert exact.volume_pmf_symmetric(2.0, 0) == pytest.approx(2.0 * math.exp(-1.0), rel=1e-14)
    assert exact.volume_pmf_symmetric(2.0, 1) == pytest.approx(math.exp(-1.0) * 2.0 / 3.0, rel=1e-14)
    assert exact.volume_pmf_symmetric(1e-12, 0) == pytest.approx(1.0, abs=1e-11)


@pytest.mark.parametrize("lt", [1.0, 10.0, 100.0])
@pytest.mark.parametrize("alpha", [0.125, 0.5])
@pytest.mark.parametrize("k", [0, 1, 5])
def test_series_forms_agree(lt, alpha, k):
    params = auction(lt, alpha)
    assert exact.volume_pmf(params, k).value == pytest.approx(exact.volume_pmf_hyp(params, k).value, abs=1e-10)


@pytest.mark.parametrize("lt", [1.0, 10.0, 100.0])
def test_symmetric_closed_form(lt):
    params = auction(lt, 0.5)
    for k in range(21):
        assert exact.volume_pmf(params, k).value == pytest.approx(exact.volume_pmf_symmetric(lt, k), abs=1e-10)


@pytest.mark.parametrize("lt,alpha", [(4.0, 0.25), (30.0, 0.4)])
def test_poisson_mixture_oracle(lt, alpha):
    params = auction(lt, alpha)
    for k in range(16):
        assert exact.volume_pmf(params, k).value == pytest.approx(poisson_mixture_volume(lt, alpha, k), abs=1e-9)


def test_no_trade_probability_examples():
    assert exact.prob_no_trade(auction(10.0, 0.5)) == pytest.approx(6.0 * math.exp(-5.0), rel=1e-12)
    assert exact.prob_no_trade(auction(10.0, 0.5)) == pytest.approx(0.0404, abs=5e-4)
    assert exact.prob_no_trade(auction(10.0, 0.125)) == pytest.approx(0.334, abs=2e-3)
    for alpha in (0.125, 0.25, 0.375, 0.5):
        assert exact.prob_no_trade(auction(100.0, alpha)) < 1e-5


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.49995, 0.5, 0.50003, 0.7])
def test_no_trade_matches_series(alpha):
    params = auction(10.0, alpha)
    assert exact.prob_no_trade(params) == pytest.approx(exact.volume_pmf(params, 0).value, abs=1e-9)


def test_no_trade_continuous_across_branches():
    below = exact.prob_no_trade(auction(10.0, 0.5 - 0.50001e-4))
    above = exact.prob_no_trade(auction(10.0, 0.5 - 0.49999e-4))
    assert below == pytest.approx(above, abs=1e-9)


@pytest.mark.parametrize("lt", [10.0, 100.0])
def test_volume_law_is_complete(lt):
    law = exact.volume_distribution(auction(lt, 0.3))
    assert law.total() + law.tail_bound == pytest.approx(1.0, abs=1e-8)
    assert law.tail_bound < 1e-8


def test_imbalance_symmetry_of_volume():
    for k in range(8):
        a = exact.volume_pmf(auction(10.0, 0.2), k).value
        b = exact.volume_pmf(auction(10.0, 0.8), k).value
        assert a == pytest.approx(b, abs=1e-12)


def test_mean_volume_peaks_for_balanced_market():
    means = [exact.volume_mean(auction(10.0, a)) for a in (0.125, 0.25, 0.375, 0.5)]
    assert means == sorted(means)


def test_tolerance_not_met():
    with pytest.raises(ToleranceNotMetError) as err:
        exact.volume_pmf(auction(10.0, 0.3), 2, tol=1e-300)
    assert err.value.requested == 1e-300
    assert err.value.achieved > 1e-300


def test_cancellation_folds_into_effective_params():
    with_cancel = auction(10.0, 0.5, theta_ask=1.0, theta_bid=1.0)
    plain = auction(10.0 * -math.expm1(-1.0), 0.5)
    assert exact.volume_pmf(with_cancel, 3).value == pytest.approx(exact.volume_pmf(plain, 3).value, rel=1e-12)


# Clearing price bounds

def _integral(fn, lo, hi, peak):
    value, _ = integrate.quad(fn, lo, hi, epsabs=1e-11, epsrel=1e-11, limit=200, points=[peak])
    return value


@pytest.mark.parametrize("lt", [10.0, 100.0])
@pytest.mark.parametrize("alpha", [0.25, 0.5])
def test_bound_densities_normalised(uniform, lt, alpha):
    params = auction(lt, alpha)
    for fn in (exact.lower_price_density, exact.upper_price_density):
        total = _integral(lambda x: fn(params, uniform, x).value, 0.0, 1.0, 1.0 - alpha)
        assert total == pytest.approx(1.0, abs=1e-6)


def test_bound_densities_mirror_for_balanced_market(uniform):
    params = auction(10.0, 0.5)
    for x in np.linspace(0.0, 1.0, 21):
        low = exact.lower_price_density(params, uniform, float(x)).value
        up = exact.upper_price_density(params, uniform, float(1.0 - x)).value
        assert low == pytest.approx(up, abs=1e-9)


def test_reflection_maps_lower_to_upper(uniform):
    for x in (0.2, 0.55, 0.8):
        low = exact.lower_price_density(auction(10.0, 0.3), uniform, x).value
        up = exact.upper_price_density(auction(10.0, 0.7), uniform, 1.0 - x).value
        assert low == pytest.approx(up, abs=1e-9)


@pytest.mark.parametrize("lt", [5.0, 20.0])
@pytest.mark.parametrize("alpha", [0.25, 0.5])
def test_single_series_matches_double_series(uniform, lt, alpha):
    params = auction(lt, alpha)
    for x in np.linspace(0.0, 1.0, 20):
        double = exact.lower_price_density(params, uniform, float(x)).value
        single = exact.lower_price_density_hyp(params, uniform, float(x)).value
        assert single == pytest.approx(double, abs=1e-8)


def test_bound_densities_vanish_outside_support(uniform):
    params = auction(10.0, 0.3)
    assert exact.lower_price_density(params, uniform, 1.5).value == 0.0
    assert exact.upper_price_density(params, uniform, -0.5).value == 0.0


def test_upper_density_normalised_for_normal_prices(normal):
    params = auction(10.0, 0.3)
    lo, hi = normal.integration_bounds()
    total = _integral(lambda x: exact.upper_price_density(params, normal, x).value, lo, hi, float(normal.quantile(0.7)))
    assert total == pytest.approx(1.0, abs=1e-6)


def test_densities_reject_one_sided_market(uniform):
    with pytest.raises(ValueError):
        exact.lower_price_density(auction(10.0, 0.0), uniform, 0.5)
    with pytest.raises(ValueError):
        exact.range_density_uniform(auction(10.0, 1.0), 0.5)


def test_tabulated_curve(uniform):
    curve = exact.price_density_curve(auction(10.0, 0.3), uniform, "upper")
    table = curve.tabulate(11)
    assert len(table.x) == len(table.density) == 11
    assert all(d >= 0 for d in table.density)
    assert curve(2.0) == 0.0
    assert exact.tabulate_density(curve.evaluate, (0.0, 1.0), 5).x == [0.0, 0.25, 0.5, 0.75, 1.0]


# Clearing range

def test_range_density_vanishes_at_full_width():
    params = auction(10.0, 0.3)
    assert exact.range_density_uniform(params, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert exact.range_density_uniform(params, 1.0 - 1e-12) < 1e-9


@pytest.mark.parametrize("lt", [2.0, 10.0, 100.0])
@pytest.mark.parametrize("alpha", [0.125, 0.5])
def test_range_density_normalised(lt, alpha):
    params = auction(lt, alpha)
    total, _ = integrate.quad(lambda d: exact.range_density_uniform(params, d), 0.0, 1.0,
                              epsabs=1e-13, epsrel=1e-12, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_range_density_imbalance_symmetry():
    for d in (0.01, 0.1, 0.4):
        assert exact.range_density_uniform(auction(10.0, 0.2), d) == pytest.approx(
            exact.range_density_uniform(auction(10.0, 0.8), d), rel=1e-13)


@pytest.mark.parametrize("m,n,delta", [(1, 1, 0.5), (2, 3, 0.1), (4, 4, 0.3), (6, 1, 0.05)])
def test_conditional_range_uniform_closed_form(uniform, m, n, delta):
    value = exact.conditional_range_density(m, n, uniform, delta)
    assert value == pytest.approx((n + m) * (1.0 - delta) ** (n + m - 1), abs=1e-8)


def test_conditional_range_edge_cases(uniform, normal):
    assert exact.conditional_range_density(1, 1, uniform, 0.5) == pytest.approx(1.0, abs=1e-10)
    assert exact.conditional_range_density(2, 2, uniform, 1.5) == 0.0
    assert exact.conditional_range_density(2, 2, normal, 40.0) == 0.0
    with pytest.raises(ValueError):
        exact.conditional_range_density(0, 2, uniform, 0.1)
    with pytest.raises(ValueError):
        exact.conditional_range_density(1, 2, uniform, -0.1)


def test_conditional_range_normal_is_a_density(normal):
    total, _ = integrate.quad(lambda d: exact.conditional_range_density(2, 2, normal, d), 0.0, 12.0, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("delta", [0.02, 0.1, 0.3])
def test_range_mixture_matches_closed_form(uniform, delta):
    params = auction(10.0, 0.3)
    general = exact.range_density_general(params, uniform, delta)
    assert general.value == pytest.approx(exact.range_density_uniform(params, delta), abs=1e-6)
    assert general.abs_error_bound <= 1e-7


def test_range_table_matches_pointwise(normal):
    params = auction(5.0, 0.3)
    deltas = np.array([0.05, 0.3, 1.0])
    values, errors = exact.range_density_general_table(params, normal, deltas)
    for d, v in zip(deltas, values):
        assert v == pytest.approx(exact.range_density_general(params, normal, float(d)).value, abs=1e-6)
    assert np.all(errors <= 1e-7)


@pytest.mark.slow
def test_range_mixture_normalised_for_normal_prices(normal):
    params = auction(10.0, 0.3)
    deltas = np.linspace(0.0, 8.0, 401)
    values, _ = exact.range_density_general_table(params, normal, deltas)
    assert integrate.simpson(values, x=deltas) == pytest.approx(1.0, abs=1e-5)


def test_volume_hyp_small_market():
    # lT = 2, alpha = 1/2: P(V = 0) = e^{-1} (1 + 1/2 * 2) = 2 e^{-1}
    result = exact.volume_pmf_hyp(auction(2.0, 0.5), 0)
    assert result.value == pytest.approx(2.0 * math.exp(-1.0), rel=1e-12)
    assert result.value == pytest.approx(exact.volume_pmf(auction(2.0, 0.5), 0).value, abs=1e-12)


@pytest.mark.parametrize("alpha,k", [(0.5, 250), (0.3, 105), (0.3, 210), (0.125, 54)])
def test_volume_forms_agree_in_a_large_market(alpha, k):
    params = auction(1000.0, alpha)
    double = exact.volume_pmf(params, k)
    single = exact.volume_pmf_hyp(params, k)
    assert double.abs_error_bound < 1e-10
    assert single.abs_error_bound < 1e-10
    assert double.value == pytest.approx(single.value, abs=1e-10)
    if alpha == 0.5:
        assert double.value == pytest.approx(exact.volume_pmf_symmetric(1000.0, k), abs=1e-10)


def test_warns_when_quadrature_error_is_close_to_tolerance(caplog):
    with caplog.at_level("WARNING", logger=exact.logger.name):
        exact._warn_near_tolerance("x", 0.8, 1.0)
    assert "close to the tolerance" in caplog.text
    caplog.clear()
    with caplog.at_level("WARNING", logger=exact.logger.name):
        exact._warn_near_tolerance("x", 0.1, 1.0)
        exact._warn_near_tolerance("x", 1.5, 1.0)
    assert caplog.text == ""


def test_range_density_logs_quadrature_warning(caplog, monkeypatch):
    monkeypatch.setattr(exact, "QUAD_WARN_SHARE", -1.0)
    with caplog.at_level("WARNING", logger=exact.logger.name):
        value = exact.conditional_range_density(2, 2, make_uniform(), 0.1)
    assert value > 0
    assert "conditional_range_density" in caplog.text
