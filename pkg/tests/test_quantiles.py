import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from causalmedian import DensityGrid, lognormal_pdf, type1_median, weighted_quantile
from causalmedian.exceptions import InvalidWeightsError


def wq_oracle(values, weights, p):
    """Smallest value whose cumulative normalized weight reaches p.

    Independent reading of the same definition: stable sort, running fsum,
    first crossing wins.
    """
    order = sorted(range(len(values)), key=lambda i: values[i])
    total = math.fsum(weights)
    cum = 0.0
    for i in order:
        cum += weights[i] / total
        if cum >= p - 1e-9:
            return values[i]
    return values[order[-1]]


def test_equal_weights_median_of_three():
    assert weighted_quantile(np.array([1.0, 2.0, 3.0]), np.ones(3), 0.5) == 2.0


def test_front_loaded_weights_pull_the_median_down():
    values = np.array([1.0, 2.0, 3.0])
    weights = np.array([0.6, 0.2, 0.2])
    assert weighted_quantile(values, weights, 0.5) == 1.0


def test_result_is_always_a_data_value():
    gen = np.random.default_rng(0)
    values = gen.normal(size=11)
    weights = gen.uniform(0.1, 1.0, size=11)
    for p in (0.1, 0.25, 0.5, 0.9):
        assert weighted_quantile(values, weights, p) in values


def test_unordered_input_is_sorted_internally():
    values = np.array([3.0, 1.0, 2.0])
    assert weighted_quantile(values, np.ones(3), 0.5) == 2.0


@pytest.mark.parametrize(
    "weights",
    [np.array([1.0, -0.5, 1.0]), np.array([np.nan, 1.0, 1.0]), np.zeros(3)],
)
def test_invalid_weights_rejected(weights):
    with pytest.raises(InvalidWeightsError):
        weighted_quantile(np.array([1.0, 2.0, 3.0]), weights, 0.5)


def test_bad_probability_rejected():
    with pytest.raises(ValueError):
        weighted_quantile(np.array([1.0]), np.array([1.0]), 1.5)


def test_matches_linear_scan_oracle_bulk():
    gen = np.random.default_rng(7)
    for trial in range(300):
        n = int(gen.integers(1, 30))
        # integer-valued data forces ties; mixed weight scales stress fp
        values = gen.integers(-5, 6, size=n).astype(float)
        weights = gen.uniform(0.0, 1.0, size=n)
        weights[int(gen.integers(0, n))] = 1.0
        p = float(gen.uniform(0.01, 0.99))
        expected = wq_oracle(list(values), list(weights), p)
        assert weighted_quantile(values, weights, p) == expected


@given(
    st.lists(st.integers(-4, 4), min_size=1, max_size=12),
    st.integers(1, 97),
)
def test_matches_oracle_under_equal_weights(raw, pct):
    values = np.array(raw, dtype=float)
    weights = np.ones(len(raw))
    p = pct / 100.0
    assert weighted_quantile(values, weights, p) == wq_oracle(raw, [1.0] * len(raw), p)


def test_equal_weights_match_type1_sample_quantile():
    gen = np.random.default_rng(3)
    values = gen.normal(size=41)
    for p in np.linspace(0.1, 0.9, 9):
        expected = np.quantile(values, p, method="inverted_cdf")
        assert weighted_quantile(values, np.ones(41), float(p)) == expected


def test_type1_median_is_the_ceil_half_order_statistic():
    gen = np.random.default_rng(5)
    for n in (1, 2, 3, 4, 5, 10, 11, 100, 101):
        values = gen.normal(size=n)
        expected = np.sort(values)[math.ceil(0.5 * n) - 1]
        assert type1_median(values) == expected


def test_type1_median_small_cases():
    assert type1_median(np.array([1.0, 2.0, 3.0, 4.0])) == 2.0
    assert type1_median(np.array([1.0, 2.0, 3.0])) == 2.0
    assert type1_median(np.array([5.0])) == 5.0


def test_type1_median_commutes_with_exp():
    gen = np.random.default_rng(9)
    logs = gen.normal(size=257)
    assert math.exp(type1_median(logs)) == type1_median(np.exp(logs))


def test_lognormal_pdf_standard_value():
    assert lognormal_pdf(np.array([1.0]), np.array([0.0]), 1.0)[0] == pytest.approx(
        1.0 / math.sqrt(2.0 * math.pi), abs=1e-15
    )


def test_lognormal_pdf_integrates_to_one():
    y = np.linspace(1e-6, 200.0, 400_000)
    pdf = lognormal_pdf(y, np.array([0.3]), 0.8)
    assert np.trapezoid(pdf, y) == pytest.approx(1.0, abs=1e-6)


def test_lognormal_pdf_change_of_variables():
    # density of exp(Z) at y is the normal density at ln y divided by y
    y = np.array([0.5, 1.0, 2.0, 7.0])
    mu, sigma = 0.4, 1.3
    normal = np.exp(-((np.log(y) - mu) ** 2) / (2 * sigma**2)) / (
        sigma * math.sqrt(2 * math.pi)
    )
    got = lognormal_pdf(y, np.array([mu]), sigma)
    np.testing.assert_allclose(np.ravel(got), normal / y, rtol=1e-12)


def test_lognormal_pdf_rejects_bad_arguments():
    with pytest.raises(ValueError):
        lognormal_pdf(np.array([0.0]), np.array([0.0]), 1.0)
    with pytest.raises(ValueError):
        lognormal_pdf(np.array([1.0]), np.array([0.0]), 0.0)


def test_density_grid_size_and_points():
    grid = DensityGrid(0.01, 8.0, 0.01)
    points = grid.points()
    assert grid.size == 800
    assert points[0] == pytest.approx(0.01)
    assert points[-1] == pytest.approx(8.0)
    assert np.all(np.diff(points) > 0)


def test_density_grid_default_simulation():
    grid = DensityGrid.default_simulation()
    assert (grid.lower, grid.upper, grid.step) == (0.01, 8.0, 0.01)


def test_density_grid_for_data_spans_twice_the_maximum():
    y = np.array([0.5, 3.0, 10.0])
    grid = DensityGrid.for_data(y)
    assert grid.upper == pytest.approx(20.0)
    assert grid.step == pytest.approx(10.0 / 2000)
    assert grid.lower == pytest.approx(grid.step)


def test_density_grid_rejects_degenerate_bounds():
    with pytest.raises(ValueError):
        DensityGrid(0.0, 8.0, 0.01)
    with pytest.raises(ValueError):
        DensityGrid(2.0, 1.0, 0.01)
    with pytest.raises(ValueError):
        DensityGrid(1.0, 2.0, 0.0)
