import json
import math
import numpy as np
import pytest
from scipy import integrate, stats

from app.schemas.schema import DiscretePmf, RngState, SampleSummary
from app.services.asymptotic import asymptotic_price, asymptotic_range, asymptotic_volume
from app.services.clearing import clear_auction
from app.services.exact import (
    lower_price_density,
    prob_no_trade,
    range_density_general_table,
    range_density_uniform,
    upper_price_density,
    volume_distribution,
)
from app.services.montecarlo import (
    chi_square,
    chi_square_test,
    density_histogram,
    fit_exponential_mle,
    ks_statistic,
    make_rng,
    run_batch,
    simulate_auction,
    simulate_live_count,
    summary_json,
    survival_table,
    total_variation,
)
from app.services.validation_service import histogram_z
from tests.conftest import auction


# Simulation

def test_same_seed_same_batch(uniform):
    params = auction(10.0, 0.4)
    first = run_batch(params, uniform, 50, seed=3, workers=1)
    second = run_batch(params, uniform, 50, seed=3, workers=1)
    assert first == second


def test_batch_independent_of_worker_count(uniform):
    params = auction(8.0, 0.5, theta_ask=0.5, theta_bid=1.0)
    single = run_batch(params, uniform, 40, seed=11, workers=1)
    pooled = run_batch(params, uniform, 40, seed=11, workers=3)
    assert single == pooled


def test_replication_uses_its_own_stream(uniform):
    params = auction(10.0, 0.4)
    batch = run_batch(params, uniform, 5, seed=9, workers=1)
    outcomes = [simulate_auction(params, uniform, RngState(seed=9, stream_id=r)) for r in range(5)]
    volumes = [o.volume for o in outcomes]
    assert batch.volume_counts == {v: volumes.count(v) for v in set(volumes)}
    lows = [o.lower for o in outcomes if o.bounds is not None]
    assert batch.L_samples == lows


def test_simulate_accepts_a_generator(uniform):
    params = auction(10.0, 0.4)
    state = RngState(seed=5, stream_id=2)
    assert simulate_auction(params, uniform, state) == simulate_auction(params, uniform, make_rng(state))


def test_single_replication(uniform):
    summary = run_batch(auction(5.0, 0.5), uniform, 1, seed=0, workers=4)
    assert summary.n_reps == 1
    assert sum(summary.volume_counts.values()) == 1


def test_zero_replications_rejected(uniform):
    with pytest.raises(ValueError):
        run_batch(auction(5.0, 0.5), uniform, 0)


def test_tiny_flow_has_no_conditioned_samples(uniform):
    summary = run_batch(auction(1e-9, 0.5), uniform, 20, seed=1, workers=1)
    assert summary.volume_counts == {0: 20}
    assert summary.n_conditioned == 0
    assert summary.L_samples == summary.U_samples == summary.R_samples == []


def test_conditioned_samples_are_ordered(uniform):
    summary = run_batch(auction(12.0, 0.3), uniform, 200, seed=2, workers=1)
    assert 0 < summary.n_conditioned <= summary.n_reps
    for lo, hi, r in zip(summary.L_samples, summary.U_samples, summary.R_samples):
        assert 0.0 <= lo <= hi <= 1.0
        assert r == pytest.approx(hi - lo)


def test_no_trade_frequency_matches_exact_probability(uniform):
    params = auction(2.0, 0.5)
    n = 4000
    summary = run_batch(params, uniform, n, seed=21, workers=1)
    p = prob_no_trade(params)
    observed = summary.volume_counts.get(0, 0) / n
    assert abs(observed - p) < 4.0 * math.sqrt(p * (1.0 - p) / n)


def test_live_count_mean():
    rng = make_rng(RngState(seed=4))
    n = 2000
    counts = [simulate_live_count(50.0, 2.0, 1.0, rng) for _ in range(n)]
    mean = 50.0 * -math.expm1(-2.0) / 2.0
    assert abs(np.mean(counts) - mean) < 4.0 * math.sqrt(mean / n)


def test_negligible_cancellation_keeps_every_order():
    state = RngState(seed=8, stream_id=1)
    live = simulate_live_count(30.0, 1e-15, 1.0, make_rng(state))
    assert live == int(make_rng(state).poisson(30.0))


def test_summary_json_downsamples(uniform):
    summary = SampleSummary(
        n_reps=10,
        volume_counts={1: 10},
        L_samples=[0.1 * i for i in range(10)],
        U_samples=[0.1 * i + 0.05 for i in range(10)],
        R_samples=[0.05] * 10,
        n_conditioned=10,
    )
    doc = json.loads(summary_json(summary, max_samples=3))
    assert doc["sample_stride"] == 4
    assert doc["n_conditioned"] == 10
    assert doc["L_samples"] == pytest.approx([0.0, 0.4, 0.8])
    assert json.loads(summary_json(summary, max_samples=100))["sample_stride"] == 1


@pytest.mark.slow
def test_volume_law_total_variation(uniform):
    params = auction(10.0, 0.5)
    summary = run_batch(params, uniform, 100_000, seed=0, workers=4)
    expected = volume_distribution(params)
    assert total_variation(summary.empirical_pmf(), expected) < 0.01
    _, _, p = chi_square_test(summary.volume_counts, expected, summary.n_reps)
    assert p > 1e-4


# Goodness of fit

def test_ks_examples():
    uniform_cdf = lambda x: np.clip(x, 0.0, 1.0)
    assert ks_statistic([0.5] * 8, uniform_cdf) == pytest.approx(0.5)
    n = 10
    grid = [(i - 0.5) / n for i in range(1, n + 1)]
    assert ks_statistic(grid, uniform_cdf) == pytest.approx(0.5 / n)
    with pytest.raises(ValueError):
        ks_statistic([], uniform_cdf)


def test_chi_square_examples():
    expected = DiscretePmf(masses={0: 0.5, 1: 0.5})
    assert chi_square({0: 50, 1: 50}, expected, 100) == pytest.approx(0.0)
    assert chi_square({0: 60, 1: 40}, expected, 100) == pytest.approx(4.0)
    stat, dof, p = chi_square_test({0: 60, 1: 40}, expected, 100)
    assert (stat, dof) == (pytest.approx(4.0), 1)
    assert p == pytest.approx(0.0455003, abs=1e-6)


def test_chi_square_pools_sparse_and_unseen_bins():
    expected = DiscretePmf(masses={0: 0.97, 1: 0.03})
    assert chi_square({0: 97, 5: 3}, expected, 100) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        chi_square_test({0: 97, 5: 3}, expected, 100)


def test_chi_square_needs_a_populated_bin():
    expected = DiscretePmf(masses={0: 0.5, 1: 0.5})
    with pytest.raises(ValueError):
        chi_square({0: 2, 1: 2}, expected, 4)


def test_total_variation_examples():
    expected = DiscretePmf(masses={0: 0.5, 1: 0.5})
    assert total_variation({0: 0.5, 1: 0.5}, expected) == pytest.approx(0.0)
    assert total_variation({0: 1.0}, expected) == pytest.approx(0.5)
    loose = DiscretePmf(masses={0: 0.5, 1: 0.49}, tail_bound=0.01)
    assert total_variation({0: 0.5, 1: 0.49}, loose) == pytest.approx(0.005)


def test_exponential_fit_examples():
    fit = fit_exponential_mle([1.0, 1.0, 1.0])
    assert fit.rate == pytest.approx(1.0)
    assert fit.sample_size == 3
    assert fit.ks_stat == pytest.approx(-math.expm1(-1.0))
    assert fit_exponential_mle([2.0]).rate == pytest.approx(0.5)


def test_exponential_fit_recovers_rate():
    rng = make_rng(RngState(seed=12))
    fit = fit_exponential_mle(rng.exponential(1.0 / 200.0, 40_000))
    assert fit.rate == pytest.approx(200.0, rel=0.02)
    assert fit.ks_stat < 0.01


@pytest.mark.parametrize("sample", [[], [1.0, -1.0], [0.0], [1.0, float("nan")]])
def test_exponential_fit_rejects_bad_samples(sample):
    with pytest.raises(ValueError):
        fit_exponential_mle(sample)


def test_survival_table():
    fit = fit_exponential_mle([1.0, 2.0, 3.0, 4.0])
    rows = survival_table([1.0, 2.0, 3.0, 4.0], fit)
    assert [r[0] for r in rows] == [1.0, 2.0, 3.0]
    assert rows[0][1] == pytest.approx(math.log(0.75))
    assert rows[2][1] == pytest.approx(math.log(0.25))
    assert rows[1][2] == pytest.approx(-0.8)


def test_density_histogram_integrates_to_one():
    rng = make_rng(RngState(seed=6))
    hist = density_histogram(rng.normal(size=5000))
    widths = np.diff(hist.edges)
    assert float(np.sum(np.asarray(hist.density) * widths)) == pytest.approx(1.0)
    assert hist.n_samples == 5000
    assert len(hist.stderr) == len(hist.density) == len(hist.centres())


def test_density_histogram_of_constant_sample():
    hist = density_histogram([2.0, 2.0, 2.0])
    assert float(np.sum(np.asarray(hist.density) * np.diff(hist.edges))) == pytest.approx(1.0)


# Monte Carlo against the exact and limit laws

def _bin_mean(fn, a, b):
    value, _ = integrate.quad(fn, a, b, epsabs=1e-12, epsrel=1e-10, limit=200)
    return value / (b - a)


@pytest.mark.slow
def test_price_bound_histograms_match_exact_densities(uniform):
    params = auction(10.0, 0.3)
    summary = run_batch(params, uniform, 200_000, seed=21, workers=1)
    z_low, hist = histogram_z(summary.L_samples, 0.7, lambda a, b: _bin_mean(
        lambda x: lower_price_density(params, uniform, x).value, a, b))
    z_high, _ = histogram_z(summary.U_samples, 0.7, lambda a, b: _bin_mean(
        lambda x: upper_price_density(params, uniform, x).value, a, b))
    assert hist.rule == "freedman-diaconis"
    assert abs(z_low) < 4.0
    assert abs(z_high) < 4.0


@pytest.mark.slow
def test_uniform_range_histogram_matches_closed_form(uniform):
    params = auction(20.0, 0.3)
    summary = run_batch(params, uniform, 200_000, seed=22, workers=1)
    z, _ = histogram_z(summary.R_samples, 0.05, lambda a, b: _bin_mean(
        lambda d: range_density_uniform(params, d), a, b))
    assert abs(z) < 4.0


@pytest.mark.slow
def test_normal_range_histogram_matches_mixture(normal):
    params = auction(20.0, 0.3)
    summary = run_batch(params, normal, 200_000, seed=23, workers=1)

    def bin_density(a, b):
        value, _ = integrate.fixed_quad(lambda d: range_density_general_table(params, normal, d)[0], a, b, n=8)
        return value / (b - a)

    z, _ = histogram_z(summary.R_samples, 0.05, bin_density)
    assert abs(z) < 4.0


@pytest.mark.parametrize("m,n", [(1, 1), (2, 3), (6, 1), (6, 6)])
def test_conditional_lower_price_is_an_order_statistic(m, n):
    # given m asks and n bids, L is the n-th smallest of n + m uniform prices
    rng = make_rng(RngState(seed=31, stream_id=m * 10 + n))
    lows = [clear_auction(rng.uniform(size=n), rng.uniform(size=m)).lower for _ in range(20_000)]
    assert ks_statistic(lows, stats.beta(n, m + 1).cdf) < 0.02


@pytest.mark.slow
def test_volume_mean_and_sd_match_limit_law(uniform):
    params = auction(1000.0, 0.5)
    summary = run_batch(params, uniform, 20_000, seed=32, workers=1)
    volumes = np.repeat(list(summary.volume_counts), list(summary.volume_counts.values()))
    law = asymptotic_volume(params)
    assert volumes.mean() == pytest.approx(law.mean, rel=0.01)
    assert volumes.std(ddof=1) == pytest.approx(law.sd, rel=0.03)


@pytest.mark.slow
def test_distance_to_limit_laws_shrinks_with_market_size(uniform):
    distances = []
    for lt in (5.0, 500.0):
        params = auction(lt, 0.3)
        summary = run_batch(params, uniform, 40_000, seed=33, workers=1)
        volumes = np.repeat(list(summary.volume_counts), list(summary.volume_counts.values()))
        price = asymptotic_price(params, uniform)
        distances.append([
            ks_statistic(volumes, asymptotic_volume(params).cdf),
            ks_statistic(summary.L_samples, price.cdf),
            ks_statistic(summary.U_samples, price.cdf),
            ks_statistic(summary.R_samples, asymptotic_range(params, uniform).cdf),
        ])
    small, large = distances
    for before, after in zip(small, large):
        assert after < before


def test_conditioned_count_is_auctions_with_both_sides(uniform):
    params = auction(2.0, 0.3)
    summary = run_batch(params, uniform, 3000, seed=34, workers=1)
    both = 0
    for r in range(3000):
        outcome = simulate_auction(params, uniform, RngState(seed=34, stream_id=r))
        both += outcome.n_asks > 0 and outcome.n_bids > 0
    assert summary.n_conditioned == both == len(summary.R_samples)
    share = (1.0 - math.exp(-0.6)) * (1.0 - math.exp(-1.4))
    assert abs(both / 3000 - share) < 4.0 * math.sqrt(share * (1.0 - share) / 3000)


def test_cancelled_batch_has_expected_live_counts(uniform):
    params = auction(20.0, 0.4, theta_ask=1.0, theta_bid=2.0)
    reps = 20_000
    summary = run_batch(params, uniform, reps, seed=35, workers=1)
    # live counts are Poisson with mean lambda (1 - e^{-theta T}) / theta
    for mean, expected in [(summary.mean_ask_count(), 8.0 * -math.expm1(-1.0)),
                           (summary.mean_bid_count(), 12.0 * -math.expm1(-2.0) / 2.0)]:
        assert abs(mean - expected) < 4.0 * math.sqrt(expected / reps)
